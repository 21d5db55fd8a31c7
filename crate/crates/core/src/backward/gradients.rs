use serde::{Deserialize, Serialize};

use super::{ActiveSet, BackwardSolution};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::qp::Solution;

/// Gradients of the loss with respect to every QP parameter.
///
/// `dg` and `dc` are full-size (`n` rows); rows of inactive constraints are
/// zero. `kkt_residual_norm` records how well the forward point satisfied
/// the optimality conditions; it is diagnostic only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBundle {
    pub dp: DenseMatrix,
    pub dq: Vec<f64>,
    pub da: DenseMatrix,
    pub db: Vec<f64>,
    pub dg: DenseMatrix,
    pub dc: Vec<f64>,
    pub active: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt_residual_norm: Option<f64>,
}

impl GradientBundle {
    /// Rows of `dg` belonging to active constraints.
    pub fn dg_plus(&self) -> DenseMatrix {
        self.dg.select_rows(&self.active)
    }

    pub fn dc_plus(&self) -> Vec<f64> {
        self.active.iter().map(|&i| self.dc[i]).collect()
    }

    /// All entries flattened in field order, for whole-bundle comparisons.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        v.extend_from_slice(self.dp.as_slice());
        v.extend_from_slice(&self.dq);
        v.extend_from_slice(self.da.as_slice());
        v.extend_from_slice(&self.db);
        v.extend_from_slice(self.dg.as_slice());
        v.extend_from_slice(&self.dc);
        v
    }
}

/// Symmetrized outer product `½(u vᵀ + v uᵀ)`, exactly symmetric.
pub(crate) fn sym_outer(u: &[f64], v: &[f64]) -> DenseMatrix {
    let n = u.len();
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = 0.5 * (u[i] * v[j] + v[i] * u[j]);
        }
    }
    m
}

/// Parameter gradients from the backward solution:
///
/// ```text
/// ∇P = ½(z̃ z★ᵀ + z★ z̃ᵀ)    ∇q = z̃      ∇A = ν̃ z★ᵀ + ν★ z̃ᵀ    ∇b = −ν̃
/// ∇G₊ = λ̃ z★ᵀ + λ★₊ z̃ᵀ     ∇c₊ = −λ̃
/// ```
///
/// `λ̃` here is the multiplier of `G₊z̃ = 0` in the backward QP. It already
/// carries the `D(λ★₊)` scaling that appears when the full implicit system is
/// written with complementarity rows `D(λ★)(Gz − c) = 0`.
pub fn assemble_qp_gradients(sol: &Solution, active: &ActiveSet, bs: &BackwardSolution) -> Result<GradientBundle> {
    let d = sol.z_star.len();
    let (m, n) = (sol.nu_star.len(), sol.lambda_star.len());
    if bs.z_tilde.len() != d || bs.nu_tilde.len() != m || bs.lambda_tilde.len() != active.len() {
        return Err(Error::DimensionMismatch(format!(
            "backward solution ({}, {}, {}) does not match forward solution ({d}, {}, {m})",
            bs.z_tilde.len(),
            bs.lambda_tilde.len(),
            bs.nu_tilde.len(),
            active.len()
        )));
    }
    let z = &sol.z_star;
    let zt = &bs.z_tilde;

    let mut da = DenseMatrix::outer(&bs.nu_tilde, z);
    da.add_scaled(1.0, &DenseMatrix::outer(&sol.nu_star, zt));

    let mut dg = DenseMatrix::zeros(n, d);
    let mut dc = vec![0.0; n];
    for (k, &i) in active.indices.iter().enumerate() {
        let (lt, ls) = (bs.lambda_tilde[k], sol.lambda_star[i]);
        for (j, g) in dg.row_mut(i).iter_mut().enumerate() {
            *g = lt * z[j] + ls * zt[j];
        }
        dc[i] = -lt;
    }

    Ok(GradientBundle {
        dp: sym_outer(zt, z),
        dq: zt.clone(),
        da,
        db: bs.nu_tilde.iter().map(|v| -v).collect(),
        dg,
        dc,
        active: active.indices.clone(),
        kkt_residual_norm: None,
    })
}
