use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Measure;
use crate::oracle::grid::Combiner;
use crate::tree::{FeatureKind, FeatureSchema, FeatureValue, LeafValue, Tree};

pub const MIN_SAMPLES: usize = 100;

/// Sample mean of the integrand and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Whether `exact` lies within `k` standard errors of the estimate.
    pub fn agrees_with(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.std_error
    }
}

/// Draws points from a measure.
pub struct Sampler<'a> {
    schema: &'a FeatureSchema,
    measure: &'a Measure,
    index: Option<WeightedIndex<f64>>,
}

impl<'a> Sampler<'a> {
    pub fn new(schema: &'a FeatureSchema, measure: &'a Measure) -> Result<Self> {
        let index = match measure {
            Measure::UniformBox => None,
            Measure::Empirical(e) => Some(
                WeightedIndex::new(e.weights().iter().copied())
                    .map_err(|err| Error::InvalidMeasure(format!("cannot sample weights: {}", err)))?,
            ),
        };
        Ok(Sampler { schema, measure, index })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<FeatureValue> {
        match (self.measure, &self.index) {
            (Measure::Empirical(e), Some(index)) => e.points()[index.sample(rng)].clone(),
            _ => uniform_point(self.schema, rng),
        }
    }
}

/// Uniform draw from the domain box.
pub fn uniform_point<R: Rng>(schema: &FeatureSchema, rng: &mut R) -> Vec<FeatureValue> {
    schema
        .features()
        .iter()
        .map(|f| match &f.kind {
            FeatureKind::Numeric { low, high } => FeatureValue::Numeric(rng.gen_range(*low..=*high)),
            FeatureKind::Categorical { levels } => FeatureValue::Level(rng.gen_range(0..levels.len())),
        })
        .collect()
}

/// Monte-Carlo estimate of `∫ combiner(T_1(x), …) dp(x)` from `n` draws of a
/// ChaCha8 generator seeded with `seed`.
pub fn monte_carlo_integral(
    trees: &[&Tree],
    combiner: &Combiner,
    measure: &Measure,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    if n < MIN_SAMPLES {
        return Err(Error::Precondition(format!("need at least {} samples", MIN_SAMPLES)));
    }
    let schema = trees
        .first()
        .ok_or_else(|| Error::Precondition("integral needs at least one tree".into()))?
        .schema();
    let sampler = Sampler::new(schema, measure)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Welford's running mean and sum of squared deviations.
    let (mut mean, mut m2) = (0.0f64, 0.0f64);
    let mut values: Vec<&LeafValue> = Vec::with_capacity(trees.len());
    for k in 1..=n {
        let point = sampler.sample(&mut rng);
        values.clear();
        for t in trees {
            values.push(t.evaluate(&point)?);
        }
        let x = combiner.apply(&values)?;
        let delta = x - mean;
        mean += delta / k as f64;
        m2 += delta * (x - mean);
    }
    let variance = m2 / (n - 1) as f64;
    Ok(McEstimate {
        estimate: mean,
        std_error: (variance / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::{Feature, Split};
    use std::sync::Arc;

    fn d2() -> Arc<FeatureSchema> {
        Arc::new(
            FeatureSchema::new(
                vec![Feature::numeric("x1", 0.0, 10.0), Feature::numeric("x2", 0.0, 10.0)],
                None,
            )
            .unwrap(),
        )
    }

    fn stump(s: &Arc<FeatureSchema>, t: f64) -> Tree {
        Tree::stump(
            s.clone(),
            Split::numeric(0, t),
            LeafValue::Scalar(0.0),
            LeafValue::Scalar(1.0),
        )
        .unwrap()
    }

    #[test]
    fn squared_difference_estimate() {
        let s = d2();
        let (a, b) = (stump(&s, 4.0), stump(&s, 6.0));
        let e = monte_carlo_integral(
            &[&a, &b],
            &Combiner::SquaredDifference,
            &Measure::UniformBox,
            100_000,
            7,
        )
        .unwrap();
        assert!(e.agrees_with(0.2, 4.0), "{:?}", e);
        let again = monte_carlo_integral(
            &[&a, &b],
            &Combiner::SquaredDifference,
            &Measure::UniformBox,
            100_000,
            7,
        )
        .unwrap();
        assert_eq!(e.estimate.to_bits(), again.estimate.to_bits());
    }

    #[test]
    fn constant_integrand_has_no_error() {
        let s = d2();
        let zero = Tree::constant(s.clone(), LeafValue::Scalar(0.0)).unwrap();
        let e = monte_carlo_integral(&[&zero], &Combiner::RawValue, &Measure::UniformBox, 1000, 1).unwrap();
        assert_eq!(e.estimate, 0.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn too_few_samples() {
        let s = d2();
        let zero = Tree::constant(s.clone(), LeafValue::Scalar(0.0)).unwrap();
        assert!(monte_carlo_integral(&[&zero], &Combiner::RawValue, &Measure::UniformBox, 99, 1).is_err());
    }

    #[test]
    fn empirical_sampling_uses_weights() {
        let s = d2();
        let pts = vec![
            vec![FeatureValue::Numeric(1.0), FeatureValue::Numeric(0.0)],
            vec![FeatureValue::Numeric(9.0), FeatureValue::Numeric(0.0)],
        ];
        let m = Measure::empirical(&s, pts, Some(vec![0.25, 0.75])).unwrap();
        let e = monte_carlo_integral(&[&stump(&s, 4.0)], &Combiner::RawValue, &m, 20_000, 3).unwrap();
        assert!(e.agrees_with(0.75, 4.0), "{:?}", e);
    }
}
