//! Classical (Torgerson) multidimensional scaling of a distance matrix.

use crate::error::{Error, Result};

/// Jacobi stops once the off-diagonal mass falls below this fraction of the
/// matrix norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Largest asymmetry accepted in an input distance matrix, relative to its
/// largest entry.
const SYMMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsEmbedding {
    /// One row per point, `dims` columns. Columns past `effective_dims` are zero.
    pub coordinates: Vec<Vec<f64>>,
    /// Eigenvalues of the double-centred Gram matrix, largest first.
    pub eigenvalues: Vec<f64>,
    /// Number of requested dimensions backed by a positive eigenvalue.
    pub effective_dims: usize,
    /// Sum of squared distance residuals over the sum of squared distances.
    pub stress: f64,
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns `(eigenvalues, eigenvectors as columns)`, unsorted.
pub fn symmetric_eigen(matrix: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let norm: f64 = a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * norm {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..n {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                for row in v.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

fn check_distance_matrix(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::Precondition("distance matrix is empty".into()));
    }
    if let Some(i) = dist.iter().position(|row| row.len() != n) {
        return Err(Error::Precondition(format!(
            "row {} has {} entries, expected {}",
            i,
            dist[i].len(),
            n
        )));
    }
    let scale = dist.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    for i in 0..n {
        if dist[i][i] != 0.0 {
            return Err(Error::Precondition(format!("diagonal entry {} is not zero", i)));
        }
        for j in 0..n {
            let d = dist[i][j];
            if !d.is_finite() || d < 0.0 {
                return Err(Error::Precondition(format!(
                    "entry ({}, {}) is not a finite non-negative distance",
                    i, j
                )));
            }
            if (d - dist[j][i]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::Precondition(format!(
                    "matrix is not symmetric at ({}, {})",
                    i, j
                )));
            }
        }
    }
    Ok(())
}

/// Embeds points in `dims` dimensions so Euclidean distances approximate
/// `dist`. Negative eigenvalues are dropped; if fewer than `dims` are
/// positive, the extra columns are zero and `effective_dims` says so.
pub fn classical_mds(dist: &[Vec<f64>], dims: usize) -> Result<MdsEmbedding> {
    check_distance_matrix(dist)?;
    let n = dist.len();
    if dims == 0 || dims > n {
        return Err(Error::Precondition(format!("dims must be between 1 and {}", n)));
    }
    let sq: Vec<Vec<f64>> = dist.iter().map(|r| r.iter().map(|d| d * d).collect()).collect();
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| -0.5 * (sq[i][j] - row_mean[i] - row_mean[j] + grand))
                .collect()
        })
        .collect();

    let (values, vectors) = symmetric_eigen(&gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
    let top = eigenvalues.first().copied().unwrap_or(0.0).abs();
    let floor = JACOBI_TOLERANCE * top.max(f64::MIN_POSITIVE);
    let effective_dims = eigenvalues.iter().take(dims).filter(|&&l| l > floor).count();

    let mut coordinates = vec![vec![0.0; dims]; n];
    for (axis, &k) in order.iter().take(effective_dims).enumerate() {
        let scale = values[k].sqrt();
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = (0..n)
            .max_by(|&a, &b| vectors[a][k].abs().total_cmp(&vectors[b][k].abs()))
            .unwrap_or(0);
        let sign = if vectors[pivot][k] < 0.0 { -1.0 } else { 1.0 };
        for (i, row) in coordinates.iter_mut().enumerate() {
            row[axis] = sign * vectors[i][k] * scale;
        }
    }

    let stress = embedding_stress(dist, &coordinates);
    Ok(MdsEmbedding {
        coordinates,
        eigenvalues,
        effective_dims,
        stress,
    })
}

/// Euclidean distances between the rows of `coords`.
pub fn pairwise_distances(coords: &[Vec<f64>]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|a| {
            coords
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                .collect()
        })
        .collect()
}

/// `Σ (d_ij − e_ij)² / Σ d_ij²` over pairs `i < j`; zero for an all-zero input.
pub fn embedding_stress(dist: &[Vec<f64>], coords: &[Vec<f64>]) -> f64 {
    let rec = pairwise_distances(coords);
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..dist.len() {
        for j in i + 1..dist.len() {
            num += (dist[i][j] - rec[i][j]).powi(2);
            den += dist[i][j] * dist[i][j];
        }
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Scatter plot of the first two coordinates as a standalone SVG document.
pub fn scatter_svg(coords: &[Vec<f64>]) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 24.0;
    let xy: Vec<(f64, f64)> = coords
        .iter()
        .map(|r| (r.first().copied().unwrap_or(0.0), r.get(1).copied().unwrap_or(0.0)))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &xy {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let span = (x1 - x0).max(y1 - y0);
    let span = if span.is_finite() && span > 0.0 { span } else { 1.0 };
    let inner = SIZE - 2.0 * MARGIN;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n\
         <rect width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE
    );
    for (i, &(x, y)) in xy.iter().enumerate() {
        let px = MARGIN + (x - x0) / span * inner;
        let py = SIZE - MARGIN - (y - y0) / span * inner;
        svg.push_str(&format!(
            "<circle cx=\"{:.3}\" cy=\"{:.3}\" r=\"3\" fill=\"steelblue\"><title>{}</title></circle>\n",
            px, py, i
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
