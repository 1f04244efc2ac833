//! Files: canonical JSON, the flat-table import dialect, headerless CSV
//! matrices and atomic output.

pub mod flat_table;
pub mod json;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Measure;
use crate::tree::{FeatureKind, FeatureSchema, FeatureValue};

pub use flat_table::{export_flat_table, import_flat_table};
pub use json::{
    forest_from_json_str, forest_to_json_string, schema_from_json_str, tree_from_json_str, tree_to_json_string,
    trees_from_json_str, Forest,
};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {}", path.display(), e))))
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so the target never holds partial content.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load_forest(path: &Path) -> Result<Forest> {
    forest_from_json_str(&read_text(path)?).map_err(|e| annotate(path, e))
}

/// Loads a tree file or a forest file.
pub fn load_trees(path: &Path) -> Result<Forest> {
    trees_from_json_str(&read_text(path)?).map_err(|e| annotate(path, e))
}

pub fn save_forest(path: &Path, forest: &Forest) -> Result<()> {
    write_atomic(path, forest_to_json_string(forest).as_bytes())
}

fn annotate(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse(m) => Error::Parse(format!("{}: {}", path.display(), m)),
        other => other,
    }
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Rows of reals from a headerless CSV; blank lines are skipped.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("csv: {}", e)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("csv row {}: '{}' is not a number", i + 1, f)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Shortest round-trip rendering, one row per line.
pub fn format_matrix(rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// A flat list of reals, whatever the row layout.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    Ok(parse_matrix(text)?.into_iter().flatten().collect())
}

/// Points as CSV rows in schema order; categorical values by level name.
pub fn parse_points(text: &str, schema: &FeatureSchema) -> Result<Vec<Vec<FeatureValue>>> {
    let mut points = Vec::new();
    for (i, rec) in csv_reader(text).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("csv: {}", e)))?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != schema.len() {
            return Err(Error::Parse(format!(
                "data row {} has {} fields, schema has {} features",
                i + 1,
                rec.len(),
                schema.len()
            )));
        }
        let point = rec
            .iter()
            .zip(schema.features())
            .map(|(field, f)| match &f.kind {
                FeatureKind::Numeric { .. } => field
                    .parse::<f64>()
                    .map(FeatureValue::Numeric)
                    .map_err(|_| Error::Parse(format!("data row {}: '{}' is not a number", i + 1, field))),
                FeatureKind::Categorical { levels } => levels
                    .iter()
                    .position(|l| l == field)
                    .map(FeatureValue::Level)
                    .ok_or_else(|| {
                        Error::Parse(format!("data row {}: unknown level '{}' for {}", i + 1, field, f.name))
                    }),
            })
            .collect::<Result<Vec<_>>>()?;
        points.push(point);
    }
    Ok(points)
}

/// Empirical measure from a data CSV and optional weights, normalized to
/// total mass one.
pub fn load_empirical(schema: &FeatureSchema, data: &Path, weights: Option<&Path>) -> Result<Measure> {
    let points = parse_points(&read_text(data)?, schema)?;
    let weights = match weights {
        Some(p) => {
            let w = parse_vector(&read_text(p)?)?;
            let total: f64 = w.iter().sum();
            if !(total > 0.0 && total.is_finite()) {
                return Err(Error::InvalidMeasure("weights must have a positive finite sum".into()));
            }
            Some(w.into_iter().map(|x| x / total).collect::<Vec<_>>())
        }
        None => None,
    };
    Measure::empirical(schema, points, weights.map(renormalize))
}

/// Division by the sum can leave the total a few ulps away from one; fold
/// the remainder into the largest weight.
fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if let Some(k) = (0..w.len()).max_by(|&a, &b| w[a].total_cmp(&w[b])) {
        w[k] += 1.0 - total;
    }
    w
}
