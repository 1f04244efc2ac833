use std::collections::HashSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureKind {
    Numeric { low: f64, high: f64 },
    Categorical { levels: Vec<String> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub name: String,
    pub kind: FeatureKind,
}

impl Feature {
    pub fn numeric(name: impl Into<String>, low: f64, high: f64) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Numeric { low, high },
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, levels: impl IntoIterator<Item = S>) -> Self {
        Feature {
            name: name.into(),
            kind: FeatureKind::Categorical {
                levels: levels.into_iter().map(Into::into).collect(),
            },
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self.kind, FeatureKind::Numeric { .. })
    }

    pub fn level_count(&self) -> Option<usize> {
        match &self.kind {
            FeatureKind::Categorical { levels } => Some(levels.len()),
            FeatureKind::Numeric { .. } => None,
        }
    }
}

/// The domain of a tree: an ordered list of bounded numeric features and
/// finite categorical features.
///
/// Hyperplane splits address numeric features by *slot*: the position of the
/// feature among the numeric features only, in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSchema {
    features: Vec<Feature>,
    class_labels: Option<Vec<String>>,
    numeric_slots: Vec<usize>,
}

impl FeatureSchema {
    pub fn new(features: Vec<Feature>, class_labels: Option<Vec<String>>) -> Result<Self> {
        let mut names = HashSet::new();
        for f in &features {
            if !names.insert(f.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate feature name '{}'", f.name)));
            }
            match &f.kind {
                FeatureKind::Numeric { low, high } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return Err(Error::InvalidSchema(format!(
                            "numeric feature '{}' needs finite bounds low < high, got [{}, {}]",
                            f.name, low, high
                        )));
                    }
                }
                FeatureKind::Categorical { levels } => {
                    if levels.is_empty() {
                        return Err(Error::InvalidSchema(format!(
                            "categorical feature '{}' has no levels",
                            f.name
                        )));
                    }
                    let mut seen = HashSet::new();
                    for l in levels {
                        if !seen.insert(l.as_str()) {
                            return Err(Error::InvalidSchema(format!(
                                "categorical feature '{}' repeats level '{}'",
                                f.name, l
                            )));
                        }
                    }
                }
            }
        }
        if let Some(labels) = &class_labels {
            let mut seen = HashSet::new();
            if labels.is_empty() || !labels.iter().all(|l| seen.insert(l.as_str())) {
                return Err(Error::InvalidSchema("class labels must be non-empty and unique".into()));
            }
        }
        let numeric_slots = features
            .iter()
            .enumerate()
            .filter(|(_, f)| f.is_numeric())
            .map(|(i, _)| i)
            .collect();
        Ok(FeatureSchema {
            features,
            class_labels,
            numeric_slots,
        })
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, index: usize) -> Option<&Feature> {
        self.features.get(index)
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn class_labels(&self) -> Option<&[String]> {
        self.class_labels.as_deref()
    }

    /// Feature indices of the numeric features, in schema order.
    pub fn numeric_slots(&self) -> &[usize] {
        &self.numeric_slots
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn bounds(&self, index: usize) -> Option<(f64, f64)> {
        match self.features.get(index)?.kind {
            FeatureKind::Numeric { low, high } => Some((low, high)),
            FeatureKind::Categorical { .. } => None,
        }
    }
}

/// One coordinate of a point in the domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeatureValue {
    Numeric(f64),
    Level(usize),
}

impl FeatureValue {
    pub fn as_numeric(self) -> Option<f64> {
        match self {
            FeatureValue::Numeric(x) => Some(x),
            FeatureValue::Level(_) => None,
        }
    }

    pub fn as_level(self) -> Option<usize> {
        match self {
            FeatureValue::Level(l) => Some(l),
            FeatureValue::Numeric(_) => None,
        }
    }
}

impl FeatureSchema {
    /// Checks arity, kinds and bounds of a point.
    pub fn check_point(&self, point: &[FeatureValue]) -> Result<()> {
        if point.len() != self.features.len() {
            return Err(Error::Domain(format!(
                "point has {} coordinates, schema has {} features",
                point.len(),
                self.features.len()
            )));
        }
        for (f, v) in self.features.iter().zip(point) {
            match (&f.kind, v) {
                (FeatureKind::Numeric { low, high }, FeatureValue::Numeric(x)) => {
                    if !(x >= low && x <= high) {
                        return Err(Error::Domain(format!("{} = {} outside [{}, {}]", f.name, x, low, high)));
                    }
                }
                (FeatureKind::Categorical { levels }, FeatureValue::Level(l)) => {
                    if *l >= levels.len() {
                        return Err(Error::Domain(format!("{} has no level index {}", f.name, l)));
                    }
                }
                _ => return Err(Error::Domain(format!("wrong value kind for feature {}", f.name))),
            }
        }
        Ok(())
    }
}
