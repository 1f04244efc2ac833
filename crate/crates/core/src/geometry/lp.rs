//! Small dense simplex solver and the hyperplane/polyhedron intersection test.
//!
//! Problems here have a handful of variables (the numeric features of a
//! schema) and a few dozen rows, so a textbook two-phase tableau with
//! Bland's rule is plenty.

use crate::error::{Error, Result};

const PIVOT_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;

/// `coefficients · x <= rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coefficients: Vec<f64>,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(coefficients: Vec<f64>, rhs: f64) -> Self {
        LinearConstraint { coefficients, rhs }
    }
}

/// `{ x ∈ R^dim : a_i · x <= b_i for all i }`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyhedron {
    pub dim: usize,
    pub constraints: Vec<LinearConstraint>,
}

impl Polyhedron {
    pub fn new(dim: usize) -> Self {
        Polyhedron {
            dim,
            constraints: Vec::new(),
        }
    }

    /// Axis-aligned box `low <= x <= high`.
    pub fn boxed(low: &[f64], high: &[f64]) -> Self {
        let dim = low.len();
        let mut p = Polyhedron::new(dim);
        for k in 0..dim {
            let mut up = vec![0.0; dim];
            up[k] = 1.0;
            p.push(up, high[k]);
            let mut down = vec![0.0; dim];
            down[k] = -1.0;
            p.push(down, -low[k]);
        }
        p
    }

    pub fn push(&mut self, coefficients: Vec<f64>, rhs: f64) {
        debug_assert_eq!(coefficients.len(), self.dim);
        self.constraints.push(LinearConstraint::new(coefficients, rhs));
    }
}

/// The hyperplane `coefficients · x = offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    pub coefficients: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperplaneTestResult {
    Intersects,
    /// Every point satisfies `c·x > b`.
    PolyhedronInUpper,
    /// Every point satisfies `c·x < b`.
    PolyhedronInLower,
    EmptyPolyhedron,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

/// Maximizes `objective · x` over a polyhedron with free variables.
pub fn maximize(objective: &[f64], polyhedron: &Polyhedron) -> LpOutcome {
    let n = polyhedron.dim;
    assert_eq!(objective.len(), n, "objective dimension");
    // x = p - q with p, q >= 0
    let c: Vec<f64> = objective.iter().copied().chain(objective.iter().map(|v| -v)).collect();
    let a: Vec<Vec<f64>> = polyhedron
        .constraints
        .iter()
        .map(|row| {
            row.coefficients
                .iter()
                .copied()
                .chain(row.coefficients.iter().map(|v| -v))
                .collect()
        })
        .collect();
    let b: Vec<f64> = polyhedron.constraints.iter().map(|r| r.rhs).collect();
    match simplex_standard(&c, &a, &b) {
        LpOutcome::Optimal { x, value } => {
            let x = (0..n).map(|j| x[j] - x[n + j]).collect();
            LpOutcome::Optimal { x, value }
        }
        other => other,
    }
}

/// Decides whether the hyperplane meets the polyhedron, and if not which
/// side the polyhedron lies on.
///
/// Solves `max c·x` subject to the polyhedron and `c·x <= b + 1`. An
/// infeasible program means the polyhedron sits beyond `b + 1`, which is
/// confirmed by the mirrored program. Otherwise an optimum below `b` puts the
/// polyhedron strictly under the hyperplane; at or above `b` the minimum of
/// `c·x` decides between intersection and the upper side.
pub fn hyperplane_intersects_polyhedron(h: &Hyperplane, polyhedron: &Polyhedron) -> Result<HyperplaneTestResult> {
    if h.coefficients.len() != polyhedron.dim {
        return Err(Error::Precondition(format!(
            "hyperplane has dimension {}, polyhedron {}",
            h.coefficients.len(),
            polyhedron.dim
        )));
    }
    let zero = vec![0.0; polyhedron.dim];
    if maximize(&zero, polyhedron) == LpOutcome::Infeasible {
        return Ok(HyperplaneTestResult::EmptyPolyhedron);
    }

    let mut capped = polyhedron.clone();
    capped.push(h.coefficients.clone(), h.offset + 1.0);
    match maximize(&h.coefficients, &capped) {
        LpOutcome::Unbounded => Err(Error::UnboundedLp),
        LpOutcome::Infeasible => {
            // Reverse the signs: max -c·x s.t. -c·x <= -b + 1.
            let neg: Vec<f64> = h.coefficients.iter().map(|v| -v).collect();
            let mut mirrored = polyhedron.clone();
            mirrored.push(neg.clone(), -h.offset + 1.0);
            match maximize(&neg, &mirrored) {
                LpOutcome::Optimal { value, .. } if -value > h.offset => Ok(HyperplaneTestResult::PolyhedronInUpper),
                LpOutcome::Unbounded => Err(Error::UnboundedLp),
                // Both capped programs infeasible on a non-empty polyhedron
                // can only come from round-off near the cap.
                _ => Ok(HyperplaneTestResult::PolyhedronInUpper),
            }
        }
        LpOutcome::Optimal { value: max, .. } => {
            if max < h.offset {
                return Ok(HyperplaneTestResult::PolyhedronInLower);
            }
            let neg: Vec<f64> = h.coefficients.iter().map(|v| -v).collect();
            match maximize(&neg, polyhedron) {
                LpOutcome::Optimal { value, .. } => {
                    let min = -value;
                    if min > h.offset {
                        Ok(HyperplaneTestResult::PolyhedronInUpper)
                    } else {
                        Ok(HyperplaneTestResult::Intersects)
                    }
                }
                LpOutcome::Unbounded => Err(Error::UnboundedLp),
                LpOutcome::Infeasible => Ok(HyperplaneTestResult::EmptyPolyhedron),
            }
        }
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    allowed: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.rows[r][c];
        for k in 0..w {
            self.rows[r][k] /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for k in 0..w {
                        row[k] -= f * pivot_row[k];
                    }
                }
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for k in 0..w {
                self.obj[k] -= f * pivot_row[k];
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations with Bland's rule. Returns false if unbounded.
    fn optimize(&mut self) -> bool {
        let rhs = self.width() - 1;
        loop {
            let entering = (0..rhs).find(|&j| self.allowed[j] && self.obj[j] < -PIVOT_EPS);
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((j, best)) => {
                            if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[j])
                            {
                                Some((i, ratio))
                            } else {
                                Some((j, best))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// `max c·z` s.t. `A z <= b`, `z >= 0`.
fn simplex_standard(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = a.len();
    let nz = c.len();
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let nart = artificial_rows.len();
    let width = nz + m + nart + 1;
    let rhs = width - 1;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = nz + m;
    for i in 0..m {
        let mut row = vec![0.0; width];
        if b[i] >= 0.0 {
            row[..nz].copy_from_slice(&a[i]);
            row[nz + i] = 1.0;
            row[rhs] = b[i];
            basis.push(nz + i);
        } else {
            for j in 0..nz {
                row[j] = -a[i][j];
            }
            row[nz + i] = -1.0;
            row[next_art] = 1.0;
            row[rhs] = -b[i];
            basis.push(next_art);
            next_art += 1;
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        obj: vec![0.0; width],
        basis,
        allowed: vec![true; width],
    };

    if nart > 0 {
        for j in nz + m..nz + m + nart {
            t.obj[j] = 1.0;
        }
        for &i in &artificial_rows {
            for k in 0..width {
                t.obj[k] -= t.rows[i][k];
            }
        }
        t.optimize();
        if t.obj[rhs] < -FEASIBILITY_EPS {
            return LpOutcome::Infeasible;
        }
        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= nz + m {
                match (0..nz + m).find(|&j| t.rows[i][j].abs() > PIVOT_EPS) {
                    Some(j) => {
                        t.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        for j in nz + m..nz + m + nart {
            t.allowed[j] = false;
        }
    }

    t.obj = vec![0.0; width];
    for j in 0..nz {
        t.obj[j] = -c[j];
    }
    for i in 0..t.rows.len() {
        let f = t.obj[t.basis[i]];
        if f != 0.0 {
            for k in 0..width {
                t.obj[k] -= f * t.rows[i][k];
            }
        }
    }
    if !t.optimize() {
        return LpOutcome::Unbounded;
    }
    let mut z = vec![0.0; nz];
    for (i, &bcol) in t.basis.iter().enumerate() {
        if bcol < nz {
            z[bcol] = t.rows[i][rhs];
        }
    }
    let value = c.iter().zip(&z).map(|(ci, zi)| ci * zi).sum();
    LpOutcome::Optimal { x: z, value }
}
