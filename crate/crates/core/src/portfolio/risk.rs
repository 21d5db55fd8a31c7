use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const DEFAULT_RISK_WINDOW: usize = 240;
pub const DEFAULT_RISK_FACTORS: usize = 10;

/// Sample covariance (divisor `T − 1`) of a `T × d` window.
pub fn sample_covariance(window: &DenseMatrix) -> Result<DenseMatrix> {
    let (t, d) = (window.rows(), window.cols());
    if t < 2 {
        return Err(Error::InsufficientHistory { needed: 2, got: t });
    }
    let mut mean = vec![0.0; d];
    for r in 0..t {
        for (m, v) in mean.iter_mut().zip(window.row(r)) {
            *m += v / t as f64;
        }
    }
    let mut centered = window.clone();
    for r in 0..t {
        for (v, m) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = centered.gram();
    cov.scale(1.0 / (t as f64 - 1.0));
    Ok(cov)
}

/// PCA risk model: the top `k` principal components of the sample
/// covariance plus a diagonal of residual variances,
/// `Σ = V_k Λ_k V_kᵀ + diag(S − V_k Λ_k V_kᵀ)`. PSD by construction.
pub fn statistical_risk_model(window: &DenseMatrix, k: usize) -> Result<DenseMatrix> {
    if window.rows() < k.max(2) {
        return Err(Error::InsufficientHistory {
            needed: k.max(2),
            got: window.rows(),
        });
    }
    let d = window.cols();
    let cov = sample_covariance(window)?;
    let k = k.min(d);
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_slice()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut factor = DenseMatrix::zeros(d, d);
    for &c in &order[..k] {
        let lambda = eig.eigenvalues[c].max(0.0);
        for i in 0..d {
            let vi = eig.eigenvectors[(i, c)];
            for j in 0..d {
                factor[(i, j)] += lambda * vi * eig.eigenvectors[(j, c)];
            }
        }
    }
    let mut sigma = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = 0.5 * (factor[(i, j)] + factor[(j, i)]);
            sigma[(i, j)] = v;
            sigma[(j, i)] = v;
        }
        // residual variance; the factor part never exceeds the sample
        // variance in exact arithmetic
        sigma[(i, i)] += (cov[(i, i)] - sigma[(i, i)]).max(0.0);
    }
    Ok(sigma)
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn eigenvalues_desc(m: &DenseMatrix) -> Vec<f64> {
    let n = m.rows();
    let mut ev: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(n, n, m.as_slice()))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}
