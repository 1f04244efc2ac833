use crate::error::{Error, Result};

/// Tolerance on the sum of a class-probability vector.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// Constant value carried by a leaf.
#[derive(Debug, Clone, PartialEq)]
pub enum LeafValue {
    Scalar(f64),
    ClassProbs(Vec<f64>),
    /// One value per source tree, produced by combining trees.
    Tuple {
        values: Vec<LeafValue>,
        source_ids: Vec<usize>,
    },
}

/// Variant of a [`LeafValue`], used to check that trees can be combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    Scalar,
    ClassProbs { classes: usize },
    Tuple,
}

impl std::fmt::Display for LeafKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeafKind::Scalar => f.write_str("scalar"),
            LeafKind::ClassProbs { classes } => write!(f, "class-probabilities[{}]", classes),
            LeafKind::Tuple => f.write_str("tuple"),
        }
    }
}

impl LeafValue {
    pub fn kind(&self) -> LeafKind {
        match self {
            LeafValue::Scalar(_) => LeafKind::Scalar,
            LeafValue::ClassProbs(p) => LeafKind::ClassProbs { classes: p.len() },
            LeafValue::Tuple { .. } => LeafKind::Tuple,
        }
    }

    /// One-hot probability vector for a hard class prediction.
    pub fn one_hot(class: usize, classes: usize) -> Self {
        let mut p = vec![0.0; classes];
        p[class] = 1.0;
        LeafValue::ClassProbs(p)
    }

    pub fn as_scalar(&self) -> Option<f64> {
        match self {
            LeafValue::Scalar(v) => Some(*v),
            _ => None,
        }
    }

    /// The per-source values of a tuple, or the value itself as a singleton.
    pub fn components(&self) -> &[LeafValue] {
        match self {
            LeafValue::Tuple { values, .. } => values,
            other => std::slice::from_ref(other),
        }
    }

    /// Checks the invariants of this value on its own.
    pub fn check(&self) -> Result<()> {
        match self {
            LeafValue::Scalar(v) => {
                if !v.is_finite() {
                    return Err(Error::InvalidValue(format!("scalar value {} is not finite", v)));
                }
            }
            LeafValue::ClassProbs(p) => {
                if p.is_empty() {
                    return Err(Error::InvalidValue("empty probability vector".into()));
                }
                if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidValue("probabilities must be finite and >= 0".into()));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
                    return Err(Error::InvalidValue(format!("probabilities sum {} ≠ 1", sum)));
                }
            }
            LeafValue::Tuple { values, source_ids } => {
                if values.is_empty() || values.len() != source_ids.len() {
                    return Err(Error::InvalidValue(
                        "tuple needs one source id per value and at least one value".into(),
                    ));
                }
                let kind = values[0].kind();
                for v in values {
                    if v.kind() == LeafKind::Tuple {
                        return Err(Error::InvalidValue("nested tuple".into()));
                    }
                    if v.kind() != kind {
                        return Err(Error::InvalidValue("tuple mixes value kinds".into()));
                    }
                    v.check()?;
                }
                let mut ids = source_ids.clone();
                ids.sort_unstable();
                if ids.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidValue("tuple source ids are not unique".into()));
                }
            }
        }
        Ok(())
    }

    /// Squared Euclidean distance between two non-tuple values of one kind.
    pub fn squared_distance(&self, other: &LeafValue) -> Result<f64> {
        match (self, other) {
            (LeafValue::Scalar(a), LeafValue::Scalar(b)) => Ok((a - b) * (a - b)),
            (LeafValue::ClassProbs(a), LeafValue::ClassProbs(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
            }
            _ => Err(Error::LeafKindMismatch(format!(
                "cannot compare {} with {}",
                self.kind(),
                other.kind()
            ))),
        }
    }
}
