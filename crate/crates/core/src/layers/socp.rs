use serde::{Deserialize, Serialize};

use crate::backward::{solve_backward, solve_implicit_system, BackwardProblem, DEFAULT_EPS_ACTIVE};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, DenseMatrix, DEFAULT_DELTA};
use crate::qp::SolverSettings;

use super::EXTERNAL_KKT_THRESHOLD;

/// Robust linear program `minimize qᵀz  s.t.  aᵢᵀz + ‖z‖₂ ≤ bᵢ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocpLayerSpec {
    pub q: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl SocpLayerSpec {
    pub fn new(q: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let spec = SocpLayerSpec { q, a, b };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b.is_empty() || self.a.len() != self.b.len() {
            return Err(Error::DimensionMismatch(format!(
                "SOCP needs m ≥ 1 constraints with matching a and b, got {} and {}",
                self.a.len(),
                self.b.len()
            )));
        }
        if self.a.iter().any(|ai| ai.len() != self.q.len()) {
            return Err(Error::DimensionMismatch("constraint vector length differs from q".into()));
        }
        let finite = self.q.iter().chain(&self.b).chain(self.a.iter().flatten()).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidProblem("non-finite SOCP data".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    /// Constraint values `aᵢᵀz + ‖z‖ − bᵢ`.
    pub fn constraint_values(&self, z: &[f64]) -> Vec<f64> {
        let nz = norm2(z);
        self.a.iter().zip(&self.b).map(|(ai, bi)| dot(ai, z) + nz - bi).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SocpTape {
    spec: SocpLayerSpec,
    z_star: Vec<f64>,
    lambda_star: Vec<f64>,
    active: Vec<usize>,
}

impl SocpTape {
    fn new(spec: SocpLayerSpec, z_star: Vec<f64>, lambda_star: Vec<f64>) -> Self {
        let eps = DEFAULT_EPS_ACTIVE * (1.0 + lambda_star.iter().fold(0.0f64, |a, l| a.max(l.abs())));
        let active = spec
            .constraint_values(&z_star)
            .iter()
            .zip(&lambda_star)
            .enumerate()
            .filter(|(_, (g, l))| **l >= eps || **g >= -eps)
            .map(|(i, _)| i)
            .collect();
        SocpTape {
            spec,
            z_star,
            lambda_star,
            active,
        }
    }

    pub fn z_star(&self) -> &[f64] {
        &self.z_star
    }

    pub fn lambda_star(&self) -> &[f64] {
        &self.lambda_star
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn spec(&self) -> &SocpLayerSpec {
        &self.spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocpGradients {
    pub dq: Vec<f64>,
    /// One vector per constraint; zero for inactive constraints.
    pub da: Vec<Vec<f64>>,
    pub db: Vec<f64>,
}

/// Closed-form forward pass for the single-ball case (`m = 1`, `a₁ = 0`):
/// `z★ = −b₁ q/‖q‖`, with `λ★ = ‖q‖` from stationarity
/// `q + λ★ z★/‖z★‖ = 0`. Other instances must come in through
/// [`attach_external_socp_solution`].
pub fn socp_layer_forward(spec: &SocpLayerSpec, _settings: &SolverSettings) -> Result<(Vec<f64>, Vec<f64>, SocpTape)> {
    spec.validate()?;
    if spec.b.len() != 1 || spec.a[0].iter().any(|&v| v != 0.0) {
        return Err(Error::UnsupportedSocp(
            "the built-in forward pass handles one constraint with a = 0; attach an external solution otherwise".into(),
        ));
    }
    let b1 = spec.b[0];
    if b1 < 0.0 {
        return Err(Error::LayerForwardFailed(crate::qp::Status::PrimalInfeasible));
    }
    let qn = norm2(&spec.q);
    let (z, lambda) = if qn == 0.0 {
        (vec![0.0; spec.dim()], vec![0.0])
    } else {
        (spec.q.iter().map(|qi| -b1 * qi / qn).collect(), vec![qn])
    };
    let tape = SocpTape::new(spec.clone(), z.clone(), lambda.clone());
    Ok((z, lambda, tape))
}

/// Stationarity, complementarity and feasibility residual of an SOCP point.
pub fn socp_kkt_residual(spec: &SocpLayerSpec, z: &[f64], lambda: &[f64]) -> f64 {
    let nz = norm2(z);
    let mut stat = spec.q.clone();
    for (ai, &li) in spec.a.iter().zip(lambda) {
        for (j, s) in stat.iter_mut().enumerate() {
            let unit = if nz > 0.0 { z[j] / nz } else { 0.0 };
            *s += li * (ai[j] + unit);
        }
    }
    let g = spec.constraint_values(z);
    let comp: f64 = g.iter().zip(lambda).map(|(gi, li)| (gi * li).powi(2)).sum();
    let infeasible = g.iter().fold(0.0f64, |a, gi| a.max(*gi));
    let negative = lambda.iter().fold(0.0f64, |a, l| a.max(-l));
    (dot(&stat, &stat) + comp).sqrt().max(infeasible).max(negative)
}

pub fn attach_external_socp_solution(spec: &SocpLayerSpec, z: &[f64], lambda: &[f64]) -> Result<SocpTape> {
    spec.validate()?;
    if z.len() != spec.dim() || lambda.len() != spec.b.len() {
        return Err(Error::DimensionMismatch("external SOCP solution does not match spec".into()));
    }
    let residual = socp_kkt_residual(spec, z, lambda);
    if !(residual <= EXTERNAL_KKT_THRESHOLD) {
        return Err(Error::InvalidExternalSolution {
            residual,
            threshold: EXTERNAL_KKT_THRESHOLD,
        });
    }
    Ok(SocpTape::new(spec.clone(), z.to_vec(), lambda.to_vec()))
}

/// Hessian of the Lagrangian, `(t₁/t₀) I − (t₁/t₀³) z★z★ᵀ`, with
/// `t₁ = Σ λ★ᵢ` and `t₀ = ‖z★‖`.
fn lagrangian_hessian(z: &[f64], t1: f64) -> DenseMatrix {
    let t0 = norm2(z);
    let d = z.len();
    let mut h = DenseMatrix::zeros(d, d);
    let (diag, rank1) = (t1 / t0, t1 / (t0 * t0 * t0));
    for i in 0..d {
        for j in 0..i {
            let v = -rank1 * z[i] * z[j];
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
        h[(i, i)] = diag - rank1 * z[i] * z[i];
    }
    h
}

/// Backward pass through the equality-constrained QP with Hessian
/// `(t₁/t₀) I − (t₁/t₀³) z★z★ᵀ` and rows `(aᵢ + z★/t₀)ᵀ z̃ = 0` for the
/// active constraints.
pub fn socp_layer_backward(tape: &SocpTape, dl_dz: &[f64]) -> Result<SocpGradients> {
    let z = &tape.z_star;
    let d = z.len();
    if dl_dz.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "incoming gradient has length {}, layer output has {d}",
            dl_dz.len()
        )));
    }
    let t0 = norm2(z);
    if t0 == 0.0 {
        return Err(Error::SingularBackwardSystem { residual: f64::INFINITY });
    }
    let t1: f64 = tape.active.iter().map(|&i| tape.lambda_star[i]).sum();
    let mut rows = Vec::with_capacity(tape.active.len() * d);
    for &i in &tape.active {
        rows.extend(tape.spec.a[i].iter().zip(z).map(|(a, zj)| a + zj / t0));
    }
    let g_plus = DenseMatrix::from_row_major(tape.active.len(), d, rows)?;
    let bp = BackwardProblem::new(lagrangian_hessian(z, t1), dl_dz.to_vec(), DenseMatrix::zeros(0, d), g_plus)?;
    let bs = solve_backward(&bp, DEFAULT_DELTA)?;

    let m = tape.spec.b.len();
    let mut da = vec![vec![0.0; d]; m];
    let mut db = vec![0.0; m];
    for (k, &i) in tape.active.iter().enumerate() {
        let (ls, lt) = (tape.lambda_star[i], bs.lambda_tilde[k]);
        da[i] = bs.z_tilde.iter().zip(z).map(|(zt, zs)| ls * zt + lt * zs).collect();
        db[i] = -lt;
    }
    Ok(SocpGradients {
        dq: bs.z_tilde,
        da,
        db,
    })
}

/// Dense ground truth for the SOCP layer from the full implicit system.
pub fn exact_socp_oracle(tape: &SocpTape, dl_dz: &[f64]) -> Result<SocpGradients> {
    let z = &tape.z_star;
    let d = z.len();
    let t0 = norm2(z);
    if t0 == 0.0 {
        return Err(Error::SingularMatrix { index: 0 });
    }
    let t1: f64 = tape.lambda_star.iter().sum();
    let m = tape.spec.b.len();
    let mut rows = Vec::with_capacity(m * d);
    for ai in &tape.spec.a {
        rows.extend(ai.iter().zip(z).map(|(a, zj)| a + zj / t0));
    }
    let jac = DenseMatrix::from_row_major(m, d, rows)?;
    let g = tape.spec.constraint_values(z);
    let os = solve_implicit_system(
        &lagrangian_hessian(z, t1),
        &jac,
        &g,
        &tape.lambda_star,
        &DenseMatrix::zeros(0, d),
        dl_dz,
    )?;
    let mut da = vec![vec![0.0; d]; m];
    let mut db = vec![0.0; m];
    for i in 0..m {
        let ls = tape.lambda_star[i];
        let scaled = ls * os.dlambda[i];
        da[i] = os.dz.iter().zip(z).map(|(dz, zs)| ls * dz + scaled * zs).collect();
        db[i] = -scaled;
    }
    Ok(SocpGradients { dq: os.dz, da, db })
}
