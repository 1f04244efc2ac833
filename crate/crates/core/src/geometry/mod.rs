//! Geometric predicates used by the combination and integration algorithms.

pub mod lp;
pub mod measure;

pub use lp::{hyperplane_intersects_polyhedron, Hyperplane, HyperplaneTestResult, LinearConstraint, Polyhedron};
pub use measure::{region_measure, EmpiricalMeasure, Measure};

use crate::error::{Error, Result};
use crate::tree::region::Region;
use crate::tree::schema::FeatureSchema;
use crate::tree::split::{Side, Split};

/// Slack below which a strict inequality counts as unsatisfiable.
const STRICT_SLACK_EPS: f64 = 1e-9;

/// How a split acts on a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionOutcome {
    SplitsRegion,
    RegionInLeft,
    RegionInRight,
}

/// Relationship of two splits that both partition a region.
///
/// For the parallel cases the second split's boundary falls inside one piece
/// of the first split; the other piece lies entirely on side `rest_in` of the
/// second split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClassification {
    Crossing,
    ParallelSecondInLeft { rest_in: Side },
    ParallelSecondInRight { rest_in: Side },
    IdenticalSameOrientation,
    IdenticalSwapped,
}

/// Exact emptiness test. Axis-aligned regions are decided per feature;
/// regions with half-spaces go through a feasibility program that maximizes
/// the slack of every strict inequality.
pub fn region_is_empty(region: &Region) -> bool {
    if region.has_empty_feature() {
        return true;
    }
    if region.is_axis_aligned() {
        return false;
    }
    let n = region.numeric_intervals().count();
    let dim = n + 1; // last variable is the slack t
    let mut poly = Polyhedron::new(dim);
    let mut strict = false;
    for (k, iv) in region.numeric_intervals().enumerate() {
        let mut up = vec![0.0; dim];
        up[k] = 1.0;
        if !iv.high_closed {
            up[n] = 1.0;
            strict = true;
        }
        poly.push(up, iv.high);
        let mut down = vec![0.0; dim];
        down[k] = -1.0;
        if !iv.low_closed {
            down[n] = 1.0;
            strict = true;
        }
        poly.push(down, -iv.low);
    }
    for h in region.half_spaces() {
        let norm = h.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut row: Vec<f64> = match h.side {
            Side::Left => h.coefficients.iter().map(|c| c / norm).collect(),
            Side::Right => h.coefficients.iter().map(|c| -c / norm).collect(),
        };
        let rhs = match h.side {
            Side::Left => h.offset / norm,
            Side::Right => -h.offset / norm,
        };
        if h.side == Side::Right {
            row.push(1.0);
            strict = true;
        } else {
            row.push(0.0);
        }
        poly.push(row, rhs);
    }
    let mut cap = vec![0.0; dim];
    cap[n] = 1.0;
    poly.push(cap.clone(), 1.0);
    let mut floor = vec![0.0; dim];
    floor[n] = -1.0;
    poly.push(floor, 0.0);

    match lp::maximize(&cap, &poly) {
        lp::LpOutcome::Optimal { value, .. } => strict && value <= STRICT_SLACK_EPS,
        lp::LpOutcome::Infeasible => true,
        // bounded by construction
        lp::LpOutcome::Unbounded => false,
    }
}

/// Closure of the numeric part of a region as a polyhedron over the numeric
/// slots: the box plus every half-space with its boundary included.
pub fn region_closure(region: &Region) -> Polyhedron {
    let (low, high): (Vec<f64>, Vec<f64>) = region.numeric_intervals().map(|i| (i.low, i.high)).unzip();
    let mut poly = Polyhedron::boxed(&low, &high);
    for h in region.half_spaces() {
        match h.side {
            Side::Left => poly.push(h.coefficients.clone(), h.offset),
            Side::Right => poly.push(h.coefficients.iter().map(|c| -c).collect(), -h.offset),
        }
    }
    poly
}

fn check_split_schema(split: &Split, schema: &FeatureSchema, region: &Region) -> Result<()> {
    split.check(schema).map_err(|e| Error::SchemaMismatch(e.to_string()))?;
    if region.constraints().len() != schema.len() {
        return Err(Error::SchemaMismatch(format!(
            "region has {} features, schema has {}",
            region.constraints().len(),
            schema.len()
        )));
    }
    Ok(())
}

fn outcome_from_sides(left_nonempty: bool, right_nonempty: bool) -> Result<PartitionOutcome> {
    match (left_nonempty, right_nonempty) {
        (true, true) => Ok(PartitionOutcome::SplitsRegion),
        (true, false) => Ok(PartitionOutcome::RegionInLeft),
        (false, true) => Ok(PartitionOutcome::RegionInRight),
        (false, false) => Err(Error::EmptyRegion),
    }
}

/// Does `split` cut `region` into two non-empty pieces, and if not, which
/// side holds the region?
pub fn split_partitions_region(schema: &FeatureSchema, split: &Split, region: &Region) -> Result<PartitionOutcome> {
    check_split_schema(split, schema, region)?;
    let by_restriction = |split: &Split| -> Result<PartitionOutcome> {
        outcome_from_sides(
            !region_is_empty(&region.restrict(split, Side::Left)),
            !region_is_empty(&region.restrict(split, Side::Right)),
        )
    };
    match split {
        Split::NumericThreshold { feature, threshold } => {
            let iv = region
                .interval(*feature)
                .ok_or_else(|| Error::SchemaMismatch("region has no interval for numeric feature".into()))?;
            let outcome = outcome_from_sides(!iv.at_most(*threshold).is_empty(), !iv.above(*threshold).is_empty())?;
            if outcome == PartitionOutcome::SplitsRegion && !region.is_axis_aligned() {
                // The interval is only a bounding range once half-spaces are present.
                return by_restriction(split);
            }
            Ok(outcome)
        }
        Split::CategoricalSubset { feature, left_levels } => {
            let levels = region
                .levels(*feature)
                .ok_or_else(|| Error::SchemaMismatch("region has no level set for categorical feature".into()))?;
            let outcome = outcome_from_sides(
                !levels.restrict(left_levels, Side::Left).is_empty(),
                !levels.restrict(left_levels, Side::Right).is_empty(),
            )?;
            if outcome == PartitionOutcome::SplitsRegion && !region.is_axis_aligned() {
                return by_restriction(split);
            }
            Ok(outcome)
        }
        Split::Hyperplane { coefficients, offset } => {
            let h = Hyperplane {
                coefficients: coefficients.clone(),
                offset: *offset,
            };
            match hyperplane_intersects_polyhedron(&h, &region_closure(region))? {
                HyperplaneTestResult::EmptyPolyhedron => Err(Error::EmptyRegion),
                HyperplaneTestResult::PolyhedronInLower => Ok(PartitionOutcome::RegionInLeft),
                HyperplaneTestResult::PolyhedronInUpper => Ok(PartitionOutcome::RegionInRight),
                // Touching the closure is reported as an intersection; the
                // exact emptiness of each side settles it.
                HyperplaneTestResult::Intersects => by_restriction(split),
            }
        }
    }
}

/// Classifies two splits inside a region by which of the four cells
/// `side_u(split_u) ∩ side_v(split_v) ∩ region` are empty.
pub fn classify_split_pair(
    schema: &FeatureSchema,
    split_u: &Split,
    split_v: &Split,
    region: &Region,
) -> Result<PairClassification> {
    for s in [split_u, split_v] {
        if split_partitions_region(schema, s, region)? != PartitionOutcome::SplitsRegion {
            return Err(Error::Precondition("both splits must partition the region".into()));
        }
    }
    let sides = [Side::Left, Side::Right];
    let mut nonempty = [[false; 2]; 2];
    for (a, su) in sides.iter().enumerate() {
        let piece = region.restrict(split_u, *su);
        for (b, sv) in sides.iter().enumerate() {
            nonempty[a][b] = !region_is_empty(&piece.restrict(split_v, *sv));
        }
    }
    let count = nonempty.iter().flatten().filter(|&&x| x).count();
    match count {
        4 => Ok(PairClassification::Crossing),
        3 => {
            let (a, b) = (0..2)
                .flat_map(|a| (0..2).map(move |b| (a, b)))
                .find(|&(a, b)| !nonempty[a][b])
                .expect("one empty cell");
            // The u-piece holding the empty cell sits inside the other side of v.
            let rest_in = sides[b].opposite();
            if sides[a] == Side::Left {
                Ok(PairClassification::ParallelSecondInRight { rest_in })
            } else {
                Ok(PairClassification::ParallelSecondInLeft { rest_in })
            }
        }
        2 if nonempty[0][0] && nonempty[1][1] => Ok(PairClassification::IdenticalSameOrientation),
        2 if nonempty[0][1] && nonempty[1][0] => Ok(PairClassification::IdenticalSwapped),
        _ => Err(Error::Precondition(
            "cell pattern inconsistent with two partitioning splits".into(),
        )),
    }
}

/// `inner ⊆ outer`, decided exactly: every constraint of `outer` must leave
/// nothing of `inner` on its far side.
pub fn region_is_subset(inner: &Region, outer: &Region) -> bool {
    use crate::tree::region::{FeatureConstraint as C, Interval};
    if region_is_empty(inner) {
        return true;
    }
    for (idx, (a, b)) in inner.constraints().iter().zip(outer.constraints()).enumerate() {
        match (a, b) {
            (C::Interval(x), C::Interval(y)) => {
                if x.is_subset_of(y) {
                    continue;
                }
                if inner.is_axis_aligned() {
                    return false;
                }
                // Half-spaces may still cut the excess off.
                let below = x.intersect(&Interval {
                    low: f64::NEG_INFINITY,
                    low_closed: false,
                    high: y.low,
                    high_closed: !y.low_closed,
                });
                let above = x.intersect(&Interval {
                    low: y.high,
                    low_closed: !y.high_closed,
                    high: f64::INFINITY,
                    high_closed: false,
                });
                for excess in [below, above] {
                    if !excess.is_empty() && !region_is_empty(&inner.clone().with_interval(idx, excess)) {
                        return false;
                    }
                }
            }
            (C::Levels(x), C::Levels(y)) => {
                if !x.is_subset_of(y) {
                    return false;
                }
            }
            _ => return false,
        }
    }
    outer.half_spaces().iter().all(|h| {
        let split = Split::Hyperplane {
            coefficients: h.coefficients.clone(),
            offset: h.offset,
        };
        region_is_empty(&inner.restrict(&split, h.side.opposite()))
    })
}
