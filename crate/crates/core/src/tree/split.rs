use crate::error::{Error, Result};
use crate::tree::schema::{FeatureKind, FeatureSchema, FeatureValue};

/// Which child a point (or a piece of a region) is routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// Condition at an internal node. A point satisfying the condition goes left.
#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// `x[feature] <= threshold` goes left.
    NumericThreshold { feature: usize, threshold: f64 },
    /// `x[feature] ∈ left_levels` goes left. Levels are kept sorted and unique.
    CategoricalSubset { feature: usize, left_levels: Vec<usize> },
    /// `coefficients · x <= offset` goes left, with `x` the numeric slots.
    Hyperplane { coefficients: Vec<f64>, offset: f64 },
}

impl Split {
    pub fn numeric(feature: usize, threshold: f64) -> Self {
        Split::NumericThreshold { feature, threshold }
    }

    pub fn categorical(feature: usize, left_levels: impl IntoIterator<Item = usize>) -> Self {
        let mut left_levels: Vec<usize> = left_levels.into_iter().collect();
        left_levels.sort_unstable();
        left_levels.dedup();
        Split::CategoricalSubset { feature, left_levels }
    }

    pub fn hyperplane(coefficients: Vec<f64>, offset: f64) -> Self {
        Split::Hyperplane { coefficients, offset }
    }

    pub fn is_axis_aligned(&self) -> bool {
        !matches!(self, Split::Hyperplane { .. })
    }

    /// Checks the split against the schema.
    pub fn check(&self, schema: &FeatureSchema) -> Result<()> {
        match self {
            Split::NumericThreshold { feature, threshold } => {
                let f = schema
                    .feature(*feature)
                    .ok_or_else(|| Error::InvalidSplit(format!("feature index {} out of range", feature)))?;
                if !f.is_numeric() {
                    return Err(Error::InvalidSplit(format!(
                        "numeric threshold on categorical feature '{}'",
                        f.name
                    )));
                }
                if !threshold.is_finite() {
                    return Err(Error::InvalidSplit("threshold is not finite".into()));
                }
            }
            Split::CategoricalSubset { feature, left_levels } => {
                let f = schema
                    .feature(*feature)
                    .ok_or_else(|| Error::InvalidSplit(format!("feature index {} out of range", feature)))?;
                let n = match &f.kind {
                    FeatureKind::Categorical { levels } => levels.len(),
                    FeatureKind::Numeric { .. } => {
                        return Err(Error::InvalidSplit(format!(
                            "level subset on numeric feature '{}'",
                            f.name
                        )))
                    }
                };
                if left_levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::InvalidSplit("left levels must be sorted and unique".into()));
                }
                if left_levels.iter().any(|&l| l >= n) {
                    return Err(Error::InvalidSplit(format!(
                        "level index out of range for '{}'",
                        f.name
                    )));
                }
                if left_levels.is_empty() || left_levels.len() >= n {
                    return Err(Error::InvalidSplit(format!(
                        "left levels must be a proper non-empty subset of the levels of '{}'",
                        f.name
                    )));
                }
            }
            Split::Hyperplane { coefficients, offset } => {
                let n = schema.numeric_slots().len();
                if coefficients.len() != n {
                    return Err(Error::InvalidSplit(format!(
                        "hyperplane has {} coefficients, schema has {} numeric features",
                        coefficients.len(),
                        n
                    )));
                }
                if coefficients
                    .iter()
                    .chain(std::iter::once(offset))
                    .any(|c| !c.is_finite())
                {
                    return Err(Error::InvalidSplit("hyperplane has non-finite entries".into()));
                }
                if coefficients.iter().all(|&c| c == 0.0) {
                    return Err(Error::InvalidSplit("hyperplane coefficients are all zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Routes a point. The point is assumed to conform to the schema.
    pub fn route(&self, schema: &FeatureSchema, point: &[FeatureValue]) -> Side {
        let left = match self {
            Split::NumericThreshold { feature, threshold } => {
                point[*feature].as_numeric().is_some_and(|x| x <= *threshold)
            }
            Split::CategoricalSubset { feature, left_levels } => point[*feature]
                .as_level()
                .is_some_and(|l| left_levels.binary_search(&l).is_ok()),
            Split::Hyperplane { coefficients, offset } => hyperplane_dot(coefficients, schema, point) <= *offset,
        };
        if left {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// `c · x` over the numeric slots of a point. Routing and region membership
/// both go through here so that they agree bit for bit.
pub(crate) fn hyperplane_dot(coefficients: &[f64], schema: &FeatureSchema, point: &[FeatureValue]) -> f64 {
    coefficients
        .iter()
        .zip(schema.numeric_slots())
        .map(|(c, &i)| c * point[i].as_numeric().unwrap_or(f64::NAN))
        .sum()
}
