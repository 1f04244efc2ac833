//! Exact integrals of tree functions: means, variances, inner products,
//! distances, covariances, correlations and forest distances.
//!
//! Every quantity is a finite sum over the leaves of a (combined) tree, each
//! leaf weighted by the measure of its region. Leaf sums run depth-first,
//! left before right, so results are reproducible bit for bit.

use rayon::prelude::*;

use crate::combine::{check_compatible, combine_pair, CombineBudget};
use crate::error::{Error, Result};
use crate::geometry::measure::uniform_box_mass;
use crate::geometry::Measure;
use crate::tree::{LeafKind, LeafValue, NodeId, Region, Side, Tree};

/// Overshoot past ±1 that a computed correlation may have from rounding.
pub const CORRELATION_SLACK: f64 = 1e-12;

/// How a leaf integral is accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Each internal node averages its children weighted by their share of
    /// the node's mass.
    #[default]
    Recursive,
    /// Plain sum of value times leaf mass.
    LeafSum,
}

/// Mass of every node's region, indexed by node id.
pub fn node_masses(tree: &Tree, measure: &Measure) -> Result<Vec<f64>> {
    let mut masses = vec![0.0; tree.len()];
    match measure {
        Measure::UniformBox => {
            if tree.has_hyperplanes() {
                return Err(Error::UnsupportedGeometry(
                    "uniform measure over regions cut by hyperplane splits".into(),
                ));
            }
            let mut stack = vec![(tree.root(), Region::full(tree.schema()))];
            while let Some((id, region)) = stack.pop() {
                masses[id] = uniform_box_mass(tree.schema(), &region);
                if let (Some(split), Some((l, r))) = (tree.split(id), tree.children(id)) {
                    stack.push((r, region.restrict(split, Side::Right)));
                    stack.push((l, region.restrict(split, Side::Left)));
                }
            }
        }
        Measure::Empirical(e) => {
            for (point, w) in e.points().iter().zip(e.weights()) {
                masses[tree.leaf_for(point)] += w;
            }
            for id in tree.preorder().into_iter().rev() {
                if let Some((l, r)) = tree.children(id) {
                    masses[id] = masses[l] + masses[r];
                }
            }
        }
    }
    Ok(masses)
}

/// `∫ g(T(x)) dp(x)` for a leaf functional `g`.
pub fn integrate<G>(tree: &Tree, measure: &Measure, summation: Summation, g: G) -> Result<f64>
where
    G: Fn(&LeafValue) -> Result<f64>,
{
    let masses = node_masses(tree, measure)?;
    match summation {
        Summation::LeafSum => {
            let mut total = 0.0;
            for id in tree.leaves() {
                if masses[id] != 0.0 {
                    total += g(leaf(tree, id)?)? * masses[id];
                }
            }
            Ok(total)
        }
        Summation::Recursive => {
            let root = tree.root();
            Ok(masses[root] * conditional_integral(tree, &masses, root, &g)?)
        }
    }
}

/// Average of `g` over the region of `id`, from its children's averages.
fn conditional_integral<G>(tree: &Tree, masses: &[f64], id: NodeId, g: &G) -> Result<f64>
where
    G: Fn(&LeafValue) -> Result<f64>,
{
    match tree.children(id) {
        None => g(leaf(tree, id)?),
        Some((l, r)) => {
            let total = masses[id];
            if total == 0.0 {
                return Ok(0.0);
            }
            let mut acc = 0.0;
            for c in [l, r] {
                if masses[c] != 0.0 {
                    acc += masses[c] / total * conditional_integral(tree, masses, c, g)?;
                }
            }
            Ok(acc)
        }
    }
}

fn leaf(tree: &Tree, id: NodeId) -> Result<&LeafValue> {
    tree.value(id).ok_or(Error::UnknownNode(id))
}

fn scalar(value: &LeafValue) -> Result<f64> {
    value
        .as_scalar()
        .ok_or_else(|| Error::LeafKindMismatch(format!("expected scalar leaves, found {}", value.kind())))
}

fn pair(value: &LeafValue) -> Result<(&LeafValue, &LeafValue)> {
    match value.components() {
        [a, b] => Ok((a, b)),
        other => Err(Error::LeafKindMismatch(format!(
            "expected a pair, found {} values",
            other.len()
        ))),
    }
}

fn require_scalar(tree: &Tree, which: &str) -> Result<()> {
    match tree.leaf_kind() {
        Some(LeafKind::Scalar) => Ok(()),
        Some(k) => Err(Error::LeafKindMismatch(format!(
            "{} has {} leaves; scalar leaves required",
            which, k
        ))),
        None => Err(Error::InvalidTree(vec![])),
    }
}

fn require_plain(tree: &Tree) -> Result<()> {
    match tree.leaf_kind() {
        Some(LeafKind::Tuple) => Err(Error::LeafKindMismatch("tuple-valued tree".into())),
        Some(_) => Ok(()),
        None => Err(Error::InvalidTree(vec![])),
    }
}

fn combined(t1: &Tree, t2: &Tree) -> Result<Tree> {
    require_plain(t1)?;
    require_plain(t2)?;
    check_compatible(t1, t2)?;
    combine_pair(t1, t2, &mut CombineBudget::default())
}

/// Mean of the tree: a scalar, or a probability vector for class trees.
pub fn tree_mean(tree: &Tree, measure: &Measure) -> Result<LeafValue> {
    require_plain(tree)?;
    match tree.leaf_kind() {
        Some(LeafKind::ClassProbs { classes }) => {
            let mean = (0..classes)
                .map(|k| {
                    integrate(tree, measure, Summation::LeafSum, |v| match v {
                        LeafValue::ClassProbs(p) => Ok(p[k]),
                        other => Err(Error::LeafKindMismatch(format!("mixed leaves: {}", other.kind()))),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(LeafValue::ClassProbs(mean))
        }
        _ => Ok(LeafValue::Scalar(scalar_mean(tree, measure)?)),
    }
}

/// Mean of a scalar-leaf tree.
pub fn scalar_mean(tree: &Tree, measure: &Measure) -> Result<f64> {
    require_scalar(tree, "tree")?;
    integrate(tree, measure, Summation::LeafSum, scalar)
}

/// `∫ ‖T(x) − mean‖² dp(x)`.
pub fn tree_variance(tree: &Tree, measure: &Measure) -> Result<f64> {
    let mean = tree_mean(tree, measure)?;
    integrate(tree, measure, Summation::LeafSum, |v| v.squared_distance(&mean))
}

/// `∫ ‖T(x)‖² dp(x)`.
pub fn norm_squared(tree: &Tree, measure: &Measure) -> Result<f64> {
    require_plain(tree)?;
    integrate(tree, measure, Summation::LeafSum, |v| match v {
        LeafValue::Scalar(x) => Ok(x * x),
        LeafValue::ClassProbs(p) => Ok(p.iter().map(|x| x * x).sum()),
        other => Err(Error::LeafKindMismatch(format!("unexpected {} leaf", other.kind()))),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeStatistics {
    pub mean: LeafValue,
    pub variance: f64,
    pub norm_squared: f64,
}

pub fn tree_statistics(tree: &Tree, measure: &Measure) -> Result<TreeStatistics> {
    Ok(TreeStatistics {
        mean: tree_mean(tree, measure)?,
        variance: tree_variance(tree, measure)?,
        norm_squared: norm_squared(tree, measure)?,
    })
}

/// `∫ ‖T1(x) − T2(x)‖² dp(x)`, integrated over the combined tree.
pub fn squared_distance(t1: &Tree, t2: &Tree, measure: &Measure, summation: Summation) -> Result<f64> {
    let c = combined(t1, t2)?;
    integrate(&c, measure, summation, |v| {
        let (a, b) = pair(v)?;
        a.squared_distance(b)
    })
}

/// L2 distance between two trees of the same leaf kind.
pub fn tree_distance(t1: &Tree, t2: &Tree, measure: &Measure) -> Result<f64> {
    Ok(squared_distance(t1, t2, measure, Summation::Recursive)?.max(0.0).sqrt())
}

/// `∫ T1(x) T2(x) dp(x)` for scalar trees.
pub fn tree_inner_product(t1: &Tree, t2: &Tree, measure: &Measure) -> Result<f64> {
    require_scalar(t1, "a")?;
    require_scalar(t2, "b")?;
    let c = combined(t1, t2)?;
    integrate(&c, measure, Summation::LeafSum, |v| {
        let (a, b) = pair(v)?;
        Ok(scalar(a)? * scalar(b)?)
    })
}

/// `∫ (T1 − μ1)(T2 − μ2) dp` for scalar trees.
pub fn tree_covariance(t1: &Tree, t2: &Tree, measure: &Measure) -> Result<f64> {
    require_scalar(t1, "a")?;
    require_scalar(t2, "b")?;
    let (m1, m2) = (scalar_mean(t1, measure)?, scalar_mean(t2, measure)?);
    let c = combined(t1, t2)?;
    integrate(&c, measure, Summation::LeafSum, |v| {
        let (a, b) = pair(v)?;
        Ok((scalar(a)? - m1) * (scalar(b)? - m2))
    })
}

/// Pearson correlation of two scalar trees under the measure.
///
/// A tree with zero variance is an error. Results within
/// [`CORRELATION_SLACK`] of ±1 are reported as exactly ±1.
pub fn tree_correlation(t1: &Tree, t2: &Tree, measure: &Measure) -> Result<f64> {
    require_scalar(t1, "a")?;
    require_scalar(t2, "b")?;
    let v1 = tree_variance(t1, measure)?;
    if v1 <= 0.0 {
        return Err(Error::DegenerateCorrelation("a"));
    }
    let v2 = tree_variance(t2, measure)?;
    if v2 <= 0.0 {
        return Err(Error::DegenerateCorrelation("b"));
    }
    let rho = tree_covariance(t1, t2, measure)? / (v1.sqrt() * v2.sqrt());
    if (rho.abs() - 1.0).abs() <= CORRELATION_SLACK {
        Ok(rho.signum())
    } else {
        Ok(rho)
    }
}

fn forest_inner_sum(xs: &[Tree], ys: &[Tree], measure: &Measure, symmetric: bool) -> Result<f64> {
    let mut total = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let start = if symmetric { i } else { 0 };
        for (j, y) in ys.iter().enumerate().skip(start) {
            let ip = tree_inner_product(x, y, measure)?;
            total += if symmetric && j != i { 2.0 * ip } else { ip };
        }
    }
    Ok(total)
}

/// L2 distance between the sums of two forests, expanded into pairwise tree
/// inner products so no tree larger than a pair overlay is built.
pub fn forest_distance(f: &[Tree], g: &[Tree], measure: &Measure) -> Result<f64> {
    if f.is_empty() || g.is_empty() {
        return Err(Error::Precondition("forests must contain at least one tree".into()));
    }
    let ff = forest_inner_sum(f, f, measure, true)?;
    let gg = forest_inner_sum(g, g, measure, true)?;
    let fg = forest_inner_sum(f, g, measure, false)?;
    Ok((ff + gg - 2.0 * fg).max(0.0).sqrt())
}

/// Symmetric matrix of pairwise tree distances with a zero diagonal.
///
/// `jobs > 1` spreads the pairs over that many worker threads; the result
/// does not depend on the worker count.
pub fn distance_matrix(trees: &[Tree], measure: &Measure, jobs: usize) -> Result<Vec<Vec<f64>>> {
    let n = trees.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let compute = |&(i, j): &(usize, usize)| tree_distance(&trees[i], &trees[j], measure);
    let values: Vec<f64> = if jobs <= 1 {
        pairs.iter().map(compute).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Precondition(format!("cannot start worker pool: {}", e)))?;
        pool.install(|| pairs.par_iter().map(compute).collect::<Result<_>>())?
    };
    let mut matrix = vec![vec![0.0; n]; n];
    for (&(i, j), d) in pairs.iter().zip(values) {
        matrix[i][j] = d;
        matrix[j][i] = d;
    }
    Ok(matrix)
}
