//! Symmetric matrix helpers with condition-number reporting.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Condition number above which a matrix is treated as singular.
pub const COND_LIMIT: f64 = 1e12;

/// Inverse of a symmetric matrix via eigendecomposition, refusing when the
/// condition number exceeds `COND_LIMIT`. Returns (inverse, condition).
pub fn sym_inverse(m: &DMatrix<f64>, name: &'static str) -> Result<(DMatrix<f64>, f64)> {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, |a, b| a.min(b.abs()));
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if !cond.is_finite() || cond > COND_LIMIT {
        let k = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let null_dir: Vec<f64> = eig.eigenvectors.column(k).iter().cloned().collect();
        return Err(Error::SingularMatrix {
            name,
            cond,
            null_dir,
        });
    }
    let mut inv_vals = eig.eigenvalues.clone();
    for v in inv_vals.iter_mut() {
        *v = 1.0 / *v;
    }
    let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    Ok((inv, cond))
}

/// Moore-Penrose pseudo-inverse for a symmetric matrix: eigenvalues below
/// `max_eig * rel_tol` are dropped. Returns (pinv, rank, condition).
pub fn sym_pinverse(m: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize, f64) {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    let cut = max * rel_tol;
    let mut rank = 0usize;
    let mut inv_vals = eig.eigenvalues.clone();
    let mut min_kept = f64::INFINITY;
    for v in inv_vals.iter_mut() {
        if v.abs() > cut {
            rank += 1;
            min_kept = min_kept.min(v.abs());
            *v = 1.0 / *v;
        } else {
            *v = 0.0;
        }
    }
    let cond = if rank > 0 { max / min_kept } else { f64::INFINITY };
    let pinv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    (pinv, rank, cond)
}

/// (1/n) sum of outer products x_t x_t'.
pub fn mean_outer(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let k = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut m = DMatrix::zeros(k, k);
    for r in rows {
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] += r[i] * r[j];
            }
        }
    }
    m / rows.len() as f64
}

/// Symmetrize (A + A')/2, squashing round-off asymmetry.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Quadratic form v' M v.
pub fn quad_form(v: &DVector<f64>, m: &DMatrix<f64>) -> f64 {
    (v.transpose() * m * v)[(0, 0)]
}

/// Check symmetric positive semidefiniteness up to a tolerance.
pub fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.iter().cloned().fold(0.0f64, |a, b| a.max(b.abs()));
    eig.eigenvalues.iter().all(|&l| l >= -tol * max.max(1.0))
}
