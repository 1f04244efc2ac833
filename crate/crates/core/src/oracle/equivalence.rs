use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::monte_carlo::uniform_point;
use crate::tree::{FeatureSchema, FeatureValue, LeafValue, Split, Tree};

/// Outcome of a pointwise comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Equivalence {
    Pass,
    Counterexample {
        point: Vec<FeatureValue>,
        combined: LeafValue,
        originals: Vec<LeafValue>,
    },
}

impl Equivalence {
    pub fn is_pass(&self) -> bool {
        matches!(self, Equivalence::Pass)
    }
}

/// Numeric thresholds of all trees, per feature, for boundary sampling.
fn thresholds(schema: &FeatureSchema, trees: &[&Tree]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); schema.len()];
    for t in trees {
        for n in t.nodes() {
            if let Some(Split::NumericThreshold { feature, threshold }) = &n.split {
                out[*feature].push(*threshold);
            }
        }
    }
    out
}

/// Checks at `n` sampled points that the tuple leaf of `combined` equals the
/// values of `originals`, component by component and exactly.
///
/// A quarter of the numeric coordinates are drawn from the trees' own
/// thresholds so boundary routing is exercised. A plain-valued `combined`
/// compares as a one-element tuple, which makes this usable for checking
/// that two trees represent the same function.
pub fn pointwise_equivalence(combined: &Tree, originals: &[&Tree], n: usize, seed: u64) -> Result<Equivalence> {
    let schema = combined.schema();
    if originals.iter().any(|t| t.schema() != schema) {
        return Err(Error::SchemaMismatch("trees are defined on different schemas".into()));
    }
    let mut all: Vec<&Tree> = originals.to_vec();
    all.push(combined);
    let cuts = thresholds(schema, &all);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let mut point = uniform_point(schema, &mut rng);
        for (v, cut) in point.iter_mut().zip(&cuts) {
            if let FeatureValue::Numeric(x) = v {
                if !cut.is_empty() && rng.gen_bool(0.25) {
                    *x = cut[rng.gen_range(0..cut.len())];
                }
            }
        }
        let got = combined.evaluate(&point)?;
        let expected = originals
            .iter()
            .map(|t| t.evaluate(&point))
            .collect::<Result<Vec<&LeafValue>>>()?;
        let parts = got.components();
        let same = parts.len() == expected.len() && parts.iter().zip(&expected).all(|(a, b)| a == *b);
        if !same {
            return Ok(Equivalence::Counterexample {
                point,
                combined: got.clone(),
                originals: expected.into_iter().cloned().collect(),
            });
        }
    }
    Ok(Equivalence::Pass)
}
