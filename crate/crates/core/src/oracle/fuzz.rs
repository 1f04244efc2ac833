//! Random schemas and random valid trees for property tests.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::Result;
use crate::geometry::lp::{maximize, LpOutcome};
use crate::geometry::{region_closure, split_partitions_region, PartitionOutcome};
use crate::tree::{Feature, FeatureKind, FeatureSchema, FeatureValue, LeafValue, Node, Region, Side, Split, Tree};

pub use crate::oracle::monte_carlo::uniform_point as random_point;

/// Kind of leaf values to generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafSpec {
    Scalar,
    ClassProbs { classes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzConfig {
    /// Upper bound on the node count; the actual size is drawn uniformly.
    pub max_nodes: usize,
    pub max_depth: usize,
    pub leaves: LeafSpec,
    /// Draw scalar leaves from `0..k` (or one-hot class vectors) instead of
    /// continuous values, so equal values occur.
    pub value_levels: Option<u32>,
    /// Restrict numeric thresholds to `low + i·(high − low)/g`, `i < g`, so
    /// different trees share thresholds.
    pub threshold_grid: Option<u32>,
    pub hyperplane_probability: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            max_nodes: 31,
            max_depth: 12,
            leaves: LeafSpec::Scalar,
            value_levels: None,
            threshold_grid: None,
            hyperplane_probability: 0.0,
        }
    }
}

/// Schema with `n_numeric` numeric features on small integer boxes followed
/// by `n_categorical` features with 2 to 5 levels.
pub fn random_schema<R: Rng>(
    rng: &mut R,
    n_numeric: usize,
    n_categorical: usize,
    classes: Option<usize>,
) -> Arc<FeatureSchema> {
    let mut features = Vec::with_capacity(n_numeric + n_categorical);
    for i in 0..n_numeric {
        let low = rng.gen_range(-5i32..=5) as f64;
        let width = rng.gen_range(1i32..=20) as f64;
        features.push(Feature::numeric(format!("x{}", i), low, low + width));
    }
    for i in 0..n_categorical {
        let count = rng.gen_range(2..=5);
        features.push(Feature::categorical(
            format!("c{}", i),
            (0..count).map(|k| format!("l{}", k)),
        ));
    }
    let labels = classes.map(|k| (0..k).map(|i| format!("class{}", i)).collect());
    Arc::new(FeatureSchema::new(features, labels).expect("generated schema is valid"))
}

fn random_value<R: Rng>(config: &FuzzConfig, rng: &mut R) -> LeafValue {
    match (config.leaves, config.value_levels) {
        (LeafSpec::Scalar, Some(k)) => LeafValue::Scalar(rng.gen_range(0..k.max(1)) as f64),
        (LeafSpec::Scalar, None) => LeafValue::Scalar(rng.gen_range(-1.0..=1.0)),
        (LeafSpec::ClassProbs { classes }, Some(_)) => LeafValue::one_hot(rng.gen_range(0..classes), classes),
        (LeafSpec::ClassProbs { classes }, None) => {
            let raw: Vec<f64> = (0..classes).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            LeafValue::ClassProbs(raw.into_iter().map(|x| x / total).collect())
        }
    }
}

fn random_threshold<R: Rng>(
    schema: &FeatureSchema,
    feature: usize,
    region: &Region,
    config: &FuzzConfig,
    rng: &mut R,
) -> Option<Split> {
    let iv = region.interval(feature)?;
    let (low, high) = schema.bounds(feature)?;
    let valid = |t: f64| !iv.at_most(t).is_empty() && !iv.above(t).is_empty();
    let t = match config.threshold_grid {
        Some(g) => {
            let g = g.max(1);
            let candidates: Vec<f64> = (0..g)
                .map(|i| low + (high - low) * i as f64 / g as f64)
                .filter(|&t| valid(t))
                .collect();
            *candidates.choose(rng)?
        }
        None => {
            if iv.low >= iv.high {
                return None;
            }
            let t = rng.gen_range(iv.low..iv.high);
            if !valid(t) {
                return None;
            }
            t
        }
    };
    Some(Split::numeric(feature, t))
}

fn random_subset<R: Rng>(feature: usize, levels: usize, region: &Region, rng: &mut R) -> Option<Split> {
    let present: Vec<usize> = region.levels(feature)?.iter().collect();
    if present.len() < 2 {
        return None;
    }
    let mut shuffled = present.clone();
    shuffled.shuffle(rng);
    let take = rng.gen_range(1..present.len());
    let mut left: Vec<usize> = shuffled[..take].to_vec();
    // Levels already excluded by the region may go either way.
    for k in 0..levels {
        if !present.contains(&k) && rng.gen_bool(0.5) {
            left.push(k);
        }
    }
    Some(Split::categorical(feature, left))
}

fn random_hyperplane<R: Rng>(schema: &FeatureSchema, region: &Region, rng: &mut R) -> Option<Split> {
    let dim = schema.numeric_slots().len();
    let coefficients: Vec<f64> = (0..dim)
        .map(|_| {
            let c: f64 = rng.gen_range(-1.0..=1.0);
            if c.abs() < 1e-3 {
                1.0
            } else {
                c
            }
        })
        .collect();
    let poly = region_closure(region);
    let upper = match maximize(&coefficients, &poly) {
        LpOutcome::Optimal { value, .. } => value,
        _ => return None,
    };
    let negated: Vec<f64> = coefficients.iter().map(|c| -c).collect();
    let lower = match maximize(&negated, &poly) {
        LpOutcome::Optimal { value, .. } => -value,
        _ => return None,
    };
    if lower >= upper {
        return None;
    }
    Some(Split::hyperplane(coefficients, rng.gen_range(lower..upper)))
}

/// Grows a random tree by repeatedly splitting a uniformly chosen leaf on a
/// uniformly chosen feature, keeping only splits that cut the leaf's region.
pub fn random_tree<R: Rng>(schema: &Arc<FeatureSchema>, config: &FuzzConfig, rng: &mut R) -> Result<Tree> {
    let max_splits = config.max_nodes.saturating_sub(1) / 2;
    let target = rng.gen_range(0..=max_splits);
    let mut nodes = vec![Node::default()];
    // Open leaves: (node id, depth, region).
    let mut open: Vec<(usize, usize, Region)> = vec![(0, 0, Region::full(schema))];
    let use_hyperplanes = config.hyperplane_probability > 0.0 && schema.numeric_slots().len() >= 2;
    let mut splits = 0;
    let mut failures = 0;
    while splits < target && failures < 64 {
        let candidates: Vec<usize> = (0..open.len()).filter(|&i| open[i].1 < config.max_depth).collect();
        let Some(&pick) = candidates.choose(rng) else { break };
        let (id, depth, region) = open[pick].clone();
        let split = if use_hyperplanes && rng.gen_bool(config.hyperplane_probability) {
            random_hyperplane(schema, &region, rng)
        } else {
            let feature = rng.gen_range(0..schema.len());
            match &schema.features()[feature].kind {
                FeatureKind::Numeric { .. } => random_threshold(schema, feature, &region, config, rng),
                FeatureKind::Categorical { levels } => random_subset(feature, levels.len(), &region, rng),
            }
        };
        let split = match split {
            Some(s)
                if matches!(
                    split_partitions_region(schema, &s, &region),
                    Ok(PartitionOutcome::SplitsRegion)
                ) =>
            {
                s
            }
            _ => {
                failures += 1;
                continue;
            }
        };
        let (l, r) = (nodes.len(), nodes.len() + 1);
        for _ in 0..2 {
            nodes.push(Node {
                parent: Some(id),
                ..Node::default()
            });
        }
        open.swap_remove(pick);
        open.push((l, depth + 1, region.restrict(&split, Side::Left)));
        open.push((r, depth + 1, region.restrict(&split, Side::Right)));
        nodes[id].split = Some(split);
        nodes[id].left = Some(l);
        nodes[id].right = Some(r);
        splits += 1;
    }
    for node in nodes.iter_mut().filter(|n| n.is_leaf()) {
        node.value = Some(random_value(config, rng));
    }
    Ok(Tree::new(schema.clone(), nodes, 0)?.compacted())
}

/// Random in-domain point with a given share of numeric coordinates snapped
/// to `cuts` (per-feature boundary values).
pub fn random_point_near<R: Rng>(
    schema: &FeatureSchema,
    cuts: &[Vec<f64>],
    snap_probability: f64,
    rng: &mut R,
) -> Vec<FeatureValue> {
    let mut p = random_point(schema, rng);
    for (v, cut) in p.iter_mut().zip(cuts) {
        if let FeatureValue::Numeric(x) = v {
            if !cut.is_empty() && rng.gen_bool(snap_probability) {
                *x = cut[rng.gen_range(0..cut.len())];
            }
        }
    }
    p
}
