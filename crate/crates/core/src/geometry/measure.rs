use crate::error::{Error, Result};
use crate::tree::region::{FeatureConstraint, Region};
use crate::tree::schema::{FeatureKind, FeatureSchema, FeatureValue};

/// Tolerance on the total mass of an empirical measure.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Weighted point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    points: Vec<Vec<FeatureValue>>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn points(&self) -> &[Vec<FeatureValue>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Probability measure on the domain of a schema.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    /// Normalized length on each numeric feature, uniform weight on the
    /// levels of each categorical feature, independent across features.
    UniformBox,
    Empirical(EmpiricalMeasure),
}

impl Measure {
    pub fn uniform() -> Self {
        Measure::UniformBox
    }

    /// Point masses. Without weights every point gets `1/n`; explicit weights
    /// must be non-negative and sum to one.
    pub fn empirical(
        schema: &FeatureSchema,
        points: Vec<Vec<FeatureValue>>,
        weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidMeasure(
                "empirical measure needs at least one point".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            schema
                .check_point(p)
                .map_err(|e| Error::InvalidMeasure(format!("point {}: {}", i, e)))?;
        }
        let weights = match weights {
            Some(w) => {
                if w.len() != points.len() {
                    return Err(Error::LengthMismatch {
                        expected: points.len(),
                        actual: w.len(),
                    });
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(Error::InvalidMeasure("weights must be finite and non-negative".into()));
                }
                let total: f64 = w.iter().sum();
                if (total - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
                    return Err(Error::InvalidMeasure(format!("weights sum to {}, not 1", total)));
                }
                w
            }
            None => vec![1.0 / points.len() as f64; points.len()],
        };
        Ok(Measure::Empirical(EmpiricalMeasure { points, weights }))
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, Measure::UniformBox)
    }
}

/// `p(A)`, the mass of a region.
pub fn region_measure(schema: &FeatureSchema, region: &Region, measure: &Measure) -> Result<f64> {
    if region.constraints().len() != schema.len() {
        return Err(Error::SchemaMismatch("region does not match schema".into()));
    }
    match measure {
        Measure::UniformBox => {
            if !region.is_axis_aligned() {
                return Err(Error::UnsupportedGeometry(
                    "uniform measure of a region with hyperplane constraints".into(),
                ));
            }
            Ok(uniform_box_mass(schema, region))
        }
        Measure::Empirical(e) => Ok(e
            .points
            .iter()
            .zip(&e.weights)
            .filter(|(p, _)| region.contains(schema, p))
            .map(|(_, w)| w)
            .sum()),
    }
}

pub(crate) fn uniform_box_mass(schema: &FeatureSchema, region: &Region) -> f64 {
    let mut mass = 1.0;
    for (f, c) in schema.features().iter().zip(region.constraints()) {
        match (&f.kind, c) {
            (FeatureKind::Numeric { low, high }, FeatureConstraint::Interval(i)) => {
                mass *= i.length() / (high - low);
            }
            (FeatureKind::Categorical { levels }, FeatureConstraint::Levels(l)) => {
                mass *= l.count() as f64 / levels.len() as f64;
            }
            _ => unreachable!("region constraint kinds follow the schema"),
        }
    }
    mass
}
