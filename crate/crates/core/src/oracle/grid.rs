use crate::error::{Error, Result};
use crate::geometry::Measure;
use crate::tree::{FeatureKind, FeatureSchema, FeatureValue, Interval, LeafValue, Split, Tree};

/// Refuse grids larger than this many cells.
pub const MAX_GRID_CELLS: usize = 50_000_000;

/// Pointwise integrand built from the values of several trees at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum Combiner {
    /// Value of the single tree.
    RawValue,
    /// Product of all trees' values.
    Product,
    /// `‖v0 − v1‖²` for two trees; works for probability vectors too.
    SquaredDifference,
    /// `(Σ w_m v_m)²`.
    WeightedSumSquare(Vec<f64>),
    /// `Π (v_m − c_m)`; with the means as centres this integrates to a
    /// covariance.
    CenteredProduct(Vec<f64>),
}

impl Combiner {
    pub fn apply(&self, values: &[&LeafValue]) -> Result<f64> {
        let scalar = |v: &LeafValue| {
            v.as_scalar()
                .ok_or_else(|| Error::LeafKindMismatch(format!("combiner needs scalar leaves, found {}", v.kind())))
        };
        match self {
            Combiner::RawValue => match values {
                [v] => scalar(v),
                _ => Err(Error::Precondition("raw-value combiner takes exactly one tree".into())),
            },
            Combiner::Product => {
                if values.is_empty() {
                    return Err(Error::Precondition("product combiner needs at least one tree".into()));
                }
                values.iter().try_fold(1.0, |acc, v| Ok(acc * scalar(v)?))
            }
            Combiner::SquaredDifference => match values {
                [a, b] => a.squared_distance(b),
                _ => Err(Error::Precondition(
                    "squared-difference combiner takes exactly two trees".into(),
                )),
            },
            Combiner::WeightedSumSquare(w) => {
                if w.len() != values.len() {
                    return Err(Error::LengthMismatch {
                        expected: values.len(),
                        actual: w.len(),
                    });
                }
                let s = values
                    .iter()
                    .zip(w)
                    .try_fold(0.0, |acc, (v, w)| Ok::<f64, Error>(acc + w * scalar(v)?))?;
                Ok(s * s)
            }
            Combiner::CenteredProduct(centres) => {
                if centres.len() != values.len() {
                    return Err(Error::LengthMismatch {
                        expected: values.len(),
                        actual: centres.len(),
                    });
                }
                values
                    .iter()
                    .zip(centres)
                    .try_fold(1.0, |acc, (v, c)| Ok(acc * (scalar(v)? - c)))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Axis {
    Numeric { cells: Vec<Interval>, width: f64 },
    Levels { count: usize },
}

impl Axis {
    fn len(&self) -> usize {
        match self {
            Axis::Numeric { cells, .. } => cells.len(),
            Axis::Levels { count } => *count,
        }
    }
}

/// Product partition of the domain by every threshold of a set of
/// axis-aligned trees. Each tree is constant on each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrid {
    axes: Vec<Axis>,
}

impl CellGrid {
    pub fn new(schema: &FeatureSchema, trees: &[&Tree]) -> Result<Self> {
        CellGrid::with_extra_breakpoints(schema, trees, &[])
    }

    /// Like [`CellGrid::new`] with additional `(feature, value)` breakpoints,
    /// which refine the grid without changing any integral.
    pub fn with_extra_breakpoints(schema: &FeatureSchema, trees: &[&Tree], extra: &[(usize, f64)]) -> Result<Self> {
        let mut thresholds: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
        for tree in trees {
            for node in tree.nodes() {
                match &node.split {
                    Some(Split::NumericThreshold { feature, threshold }) => thresholds[*feature].push(*threshold),
                    Some(Split::Hyperplane { .. }) => {
                        return Err(Error::UnsupportedGeometry("cell grid over hyperplane splits".into()))
                    }
                    _ => {}
                }
            }
        }
        for &(f, t) in extra {
            thresholds
                .get_mut(f)
                .ok_or_else(|| Error::Precondition(format!("no feature {}", f)))?
                .push(t);
        }
        let axes = schema
            .features()
            .iter()
            .zip(thresholds)
            .map(|(f, ts)| match &f.kind {
                FeatureKind::Numeric { low, high } => numeric_axis(*low, *high, ts),
                FeatureKind::Categorical { levels } => Axis::Levels { count: levels.len() },
            })
            .collect();
        Ok(CellGrid { axes })
    }

    /// Total number of cells, saturating.
    pub fn cell_count(&self) -> usize {
        self.axes.iter().fold(1usize, |n, a| n.saturating_mul(a.len()))
    }

    /// A point strictly inside the cell (interval midpoints; a degenerate
    /// cell's only point).
    pub fn representative(&self, cell: &[usize]) -> Vec<FeatureValue> {
        self.axes
            .iter()
            .zip(cell)
            .map(|(axis, &k)| match axis {
                Axis::Numeric { cells, .. } => {
                    let c = &cells[k];
                    FeatureValue::Numeric(if c.low == c.high { c.low } else { 0.5 * (c.low + c.high) })
                }
                Axis::Levels { .. } => FeatureValue::Level(k),
            })
            .collect()
    }

    /// Uniform-box mass of a cell.
    pub fn uniform_mass(&self, cell: &[usize]) -> f64 {
        self.axes
            .iter()
            .zip(cell)
            .map(|(axis, &k)| match axis {
                Axis::Numeric { cells, width } => cells[k].length() / width,
                Axis::Levels { count } => 1.0 / *count as f64,
            })
            .product()
    }

    /// Cell containing an in-domain point.
    pub fn locate(&self, point: &[FeatureValue]) -> Option<Vec<usize>> {
        self.axes
            .iter()
            .zip(point)
            .map(|(axis, v)| match (axis, v) {
                (Axis::Numeric { cells, .. }, FeatureValue::Numeric(x)) => cells.iter().position(|c| c.contains(*x)),
                (Axis::Levels { count }, FeatureValue::Level(k)) if k < count => Some(*k),
                _ => None,
            })
            .collect()
    }

    /// Visits every cell in lexicographic order.
    pub fn for_each_cell<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(&[usize]) -> Result<()>,
    {
        if self.axes.iter().any(|a| a.len() == 0) {
            return Ok(());
        }
        let mut cell = vec![0usize; self.axes.len()];
        loop {
            f(&cell)?;
            let mut d = self.axes.len();
            loop {
                if d == 0 {
                    return Ok(());
                }
                d -= 1;
                cell[d] += 1;
                if cell[d] < self.axes[d].len() {
                    break;
                }
                cell[d] = 0;
            }
        }
    }
}

fn numeric_axis(low: f64, high: f64, thresholds: Vec<f64>) -> Axis {
    let at_low = thresholds.contains(&low);
    let mut points: Vec<f64> = thresholds.into_iter().filter(|&t| t > low && t < high).collect();
    points.push(low);
    points.push(high);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut cells = Vec::with_capacity(points.len());
    if at_low {
        cells.push(Interval::closed(low, low));
    }
    for (i, w) in points.windows(2).enumerate() {
        cells.push(Interval {
            low: w[0],
            low_closed: i == 0 && !at_low,
            high: w[1],
            high_closed: true,
        });
    }
    Axis::Numeric {
        cells,
        width: high - low,
    }
}

fn cell_value(grid: &CellGrid, cell: &[usize], trees: &[&Tree], combiner: &Combiner) -> Result<f64> {
    let point = grid.representative(cell);
    let values = trees
        .iter()
        .map(|t| t.evaluate(&point))
        .collect::<Result<Vec<&LeafValue>>>()?;
    combiner.apply(&values)
}

/// `∫ combiner(T_1(x), …, T_n(x)) dp(x)` by enumerating the cell grid.
pub fn grid_integral(trees: &[&Tree], combiner: &Combiner, measure: &Measure) -> Result<f64> {
    let schema = trees
        .first()
        .ok_or_else(|| Error::Precondition("grid integral needs at least one tree".into()))?
        .schema();
    if trees.iter().any(|t| t.schema() != schema) {
        return Err(Error::SchemaMismatch("trees are defined on different schemas".into()));
    }
    let grid = CellGrid::new(schema, trees)?;
    integrate_on_grid(&grid, trees, combiner, measure)
}

/// Same as [`grid_integral`] on a caller-supplied grid.
pub fn integrate_on_grid(grid: &CellGrid, trees: &[&Tree], combiner: &Combiner, measure: &Measure) -> Result<f64> {
    match measure {
        Measure::UniformBox => {
            if grid.cell_count() > MAX_GRID_CELLS {
                return Err(Error::Precondition(format!(
                    "cell grid has {} cells, more than {}",
                    grid.cell_count(),
                    MAX_GRID_CELLS
                )));
            }
            let mut total = 0.0;
            grid.for_each_cell(|cell| {
                let mass = grid.uniform_mass(cell);
                if mass > 0.0 {
                    total += cell_value(grid, cell, trees, combiner)? * mass;
                }
                Ok(())
            })?;
            Ok(total)
        }
        Measure::Empirical(e) => {
            let mut total = 0.0;
            for (p, w) in e.points().iter().zip(e.weights()) {
                let cell = grid
                    .locate(p)
                    .ok_or_else(|| Error::Domain("empirical point outside the grid".into()))?;
                total += cell_value(grid, &cell, trees, combiner)? * w;
            }
            Ok(total)
        }
    }
}
