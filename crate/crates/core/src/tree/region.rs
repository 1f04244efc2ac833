use std::fmt;

use crate::tree::schema::{FeatureKind, FeatureSchema, FeatureValue};
use crate::tree::split::{hyperplane_dot, Side, Split};

/// Interval on the real line with explicit open/closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub low_closed: bool,
    pub high: f64,
    pub high_closed: bool,
}

impl Interval {
    pub fn closed(low: f64, high: f64) -> Self {
        Interval {
            low,
            low_closed: true,
            high,
            high_closed: true,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.low > self.high || (self.low == self.high && !(self.low_closed && self.high_closed))
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.low_closed { x >= self.low } else { x > self.low };
        let below = if self.high_closed {
            x <= self.high
        } else {
            x < self.high
        };
        above && below
    }

    pub fn length(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.high - self.low
        }
    }

    /// Part of the interval with `x <= threshold`.
    pub fn at_most(&self, threshold: f64) -> Interval {
        let mut out = *self;
        if threshold < self.high {
            out.high = threshold;
            out.high_closed = true;
        }
        out
    }

    /// Part of the interval with `x > threshold`.
    pub fn above(&self, threshold: f64) -> Interval {
        let mut out = *self;
        if threshold >= self.low {
            out.low = threshold;
            out.low_closed = false;
        }
        out
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        let (low, low_closed) = if self.low > other.low {
            (self.low, self.low_closed)
        } else if self.low < other.low {
            (other.low, other.low_closed)
        } else {
            (self.low, self.low_closed && other.low_closed)
        };
        let (high, high_closed) = if self.high < other.high {
            (self.high, self.high_closed)
        } else if self.high > other.high {
            (other.high, other.high_closed)
        } else {
            (self.high, self.high_closed && other.high_closed)
        };
        Interval {
            low,
            low_closed,
            high,
            high_closed,
        }
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        let low_ok = self.low > other.low || (self.low == other.low && (other.low_closed || !self.low_closed));
        let high_ok = self.high < other.high || (self.high == other.high && (other.high_closed || !self.high_closed));
        low_ok && high_ok
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.low_closed { '[' } else { '(' },
            self.low,
            self.high,
            if self.high_closed { ']' } else { ')' }
        )
    }
}

/// Admissible levels of one categorical feature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    members: Vec<bool>,
}

impl LevelSet {
    pub fn full(levels: usize) -> Self {
        LevelSet {
            members: vec![true; levels],
        }
    }

    pub fn from_indices(levels: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut members = vec![false; levels];
        for i in indices {
            members[i] = true;
        }
        LevelSet { members }
    }

    pub fn contains(&self, level: usize) -> bool {
        self.members.get(level).copied().unwrap_or(false)
    }

    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn universe(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    /// Members that are (`Side::Left`) or are not (`Side::Right`) in `left`.
    pub fn restrict(&self, left: &[usize], side: Side) -> LevelSet {
        let members = self
            .members
            .iter()
            .enumerate()
            .map(|(i, &m)| m && (left.binary_search(&i).is_ok() == (side == Side::Left)))
            .collect();
        LevelSet { members }
    }

    pub fn is_subset_of(&self, other: &LevelSet) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureConstraint {
    Interval(Interval),
    Levels(LevelSet),
}

/// A hyperplane constraint on the numeric slots: `c·x <= b` (left) or
/// `c·x > b` (right).
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    pub coefficients: Vec<f64>,
    pub offset: f64,
    pub side: Side,
}

/// The set of points reaching a node: one constraint per feature plus any
/// hyperplane constraints along the path.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    constraints: Vec<FeatureConstraint>,
    half_spaces: Vec<HalfSpace>,
}

impl Region {
    /// The whole domain of a schema.
    pub fn full(schema: &FeatureSchema) -> Self {
        let constraints = schema
            .features()
            .iter()
            .map(|f| match &f.kind {
                FeatureKind::Numeric { low, high } => FeatureConstraint::Interval(Interval::closed(*low, *high)),
                FeatureKind::Categorical { levels } => FeatureConstraint::Levels(LevelSet::full(levels.len())),
            })
            .collect();
        Region {
            constraints,
            half_spaces: Vec::new(),
        }
    }

    pub fn from_parts(constraints: Vec<FeatureConstraint>, half_spaces: Vec<HalfSpace>) -> Self {
        Region {
            constraints,
            half_spaces,
        }
    }

    pub fn constraints(&self) -> &[FeatureConstraint] {
        &self.constraints
    }

    pub fn half_spaces(&self) -> &[HalfSpace] {
        &self.half_spaces
    }

    pub fn is_axis_aligned(&self) -> bool {
        self.half_spaces.is_empty()
    }

    pub fn interval(&self, feature: usize) -> Option<&Interval> {
        match self.constraints.get(feature)? {
            FeatureConstraint::Interval(i) => Some(i),
            FeatureConstraint::Levels(_) => None,
        }
    }

    pub fn levels(&self, feature: usize) -> Option<&LevelSet> {
        match self.constraints.get(feature)? {
            FeatureConstraint::Levels(l) => Some(l),
            FeatureConstraint::Interval(_) => None,
        }
    }

    /// Builder-style replacement of one feature's interval.
    pub fn with_interval(mut self, feature: usize, interval: Interval) -> Self {
        self.constraints[feature] = FeatureConstraint::Interval(interval);
        self
    }

    pub fn with_levels(mut self, feature: usize, levels: LevelSet) -> Self {
        self.constraints[feature] = FeatureConstraint::Levels(levels);
        self
    }

    /// Intervals of the numeric features, in slot order.
    pub fn numeric_intervals(&self) -> impl Iterator<Item = &Interval> {
        self.constraints.iter().filter_map(|c| match c {
            FeatureConstraint::Interval(i) => Some(i),
            FeatureConstraint::Levels(_) => None,
        })
    }

    /// The part of this region on one side of a split. May be empty.
    pub fn restrict(&self, split: &Split, side: Side) -> Region {
        let mut out = self.clone();
        match split {
            Split::NumericThreshold { feature, threshold } => {
                if let Some(FeatureConstraint::Interval(i)) = out.constraints.get_mut(*feature) {
                    *i = match side {
                        Side::Left => i.at_most(*threshold),
                        Side::Right => i.above(*threshold),
                    };
                }
            }
            Split::CategoricalSubset { feature, left_levels } => {
                if let Some(FeatureConstraint::Levels(l)) = out.constraints.get_mut(*feature) {
                    *l = l.restrict(left_levels, side);
                }
            }
            Split::Hyperplane { coefficients, offset } => out.half_spaces.push(HalfSpace {
                coefficients: coefficients.clone(),
                offset: *offset,
                side,
            }),
        }
        out
    }

    /// Emptiness of the per-feature constraints alone, ignoring half-spaces.
    pub fn has_empty_feature(&self) -> bool {
        self.constraints.iter().any(|c| match c {
            FeatureConstraint::Interval(i) => i.is_empty(),
            FeatureConstraint::Levels(l) => l.is_empty(),
        })
    }

    /// Membership with the same boundary rules as split routing.
    pub fn contains(&self, schema: &FeatureSchema, point: &[FeatureValue]) -> bool {
        if point.len() != self.constraints.len() {
            return false;
        }
        let per_feature = self.constraints.iter().zip(point).all(|(c, v)| match (c, v) {
            (FeatureConstraint::Interval(i), FeatureValue::Numeric(x)) => i.contains(*x),
            (FeatureConstraint::Levels(l), FeatureValue::Level(k)) => l.contains(*k),
            _ => false,
        });
        per_feature
            && self.half_spaces.iter().all(|h| {
                let d = hyperplane_dot(&h.coefficients, schema, point);
                match h.side {
                    Side::Left => d <= h.offset,
                    Side::Right => d > h.offset,
                }
            })
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.constraints.iter().enumerate() {
            if !first {
                f.write_str(" × ")?;
            }
            first = false;
            match c {
                FeatureConstraint::Interval(i) => write!(f, "x{}∈{}", j, i)?,
                FeatureConstraint::Levels(l) => {
                    let v: Vec<String> = l.iter().map(|k| k.to_string()).collect();
                    write!(f, "x{}∈{{{}}}", j, v.join(","))?
                }
            }
        }
        for h in &self.half_spaces {
            let op = if h.side == Side::Left { "<=" } else { ">" };
            write!(f, " ∩ {:?}·x {} {}", h.coefficients, op, h.offset)?;
        }
        Ok(())
    }
}
