//! Forward solver for convex quadratic programs
//!
//! ```text
//! minimize    ½ zᵀ P z + qᵀ z
//! subject to  A z = b
//!             G z ≤ c
//! ```
//!
//! solved with operator-splitting ADMM and sharpened by an active-set polish.
//! Dual conventions: the Lagrangian is `f + νᵀ(Az − b) + λᵀ(Gz − c)`, so
//! stationarity reads `Pz + q + Aᵀν + Gᵀλ = 0` and `λ ≥ 0`.

mod admm;
mod polish;
mod residual;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, LdlFactor};

pub use admm::{admm_iterate, admm_solve, solve_qp, AdmmWorkspace, ForwardSolve};
pub use polish::{polish, polish_with_kkt, PolishedKkt};
pub use residual::{kkt_residual_norm, kkt_residuals, standard_residuals, KktResiduals, StandardResiduals};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawQpProblem", into = "RawQpProblem")]
pub struct QpProblem {
    pub p: DenseMatrix,
    pub q: Vec<f64>,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub g: DenseMatrix,
    pub c: Vec<f64>,
}

impl QpProblem {
    pub fn new(p: DenseMatrix, q: Vec<f64>, a: DenseMatrix, b: Vec<f64>, g: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        let problem = QpProblem { p, q, a, b, g, c };
        problem.validate()?;
        Ok(problem)
    }

    /// Unconstrained problem.
    pub fn unconstrained(p: DenseMatrix, q: Vec<f64>) -> Result<Self> {
        let d = q.len();
        Self::new(p, q, DenseMatrix::zeros(0, d), vec![], DenseMatrix::zeros(0, d), vec![])
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn n_eq(&self) -> usize {
        self.b.len()
    }

    pub fn n_ineq(&self) -> usize {
        self.c.len()
    }

    /// Checks dimensions, finiteness and exact symmetry of `P`. Positive
    /// semidefiniteness is checked separately by [`QpProblem::check_psd`]
    /// because it costs a factorization.
    pub fn validate(&self) -> Result<()> {
        let d = self.q.len();
        let dims_ok = self.p.rows() == d
            && self.p.cols() == d
            && self.a.cols() == d
            && self.a.rows() == self.b.len()
            && self.g.cols() == d
            && self.g.rows() == self.c.len();
        if !dims_ok {
            return Err(Error::DimensionMismatch(format!(
                "P {}x{}, q {}, A {}x{}, b {}, G {}x{}, c {}",
                self.p.rows(),
                self.p.cols(),
                d,
                self.a.rows(),
                self.a.cols(),
                self.b.len(),
                self.g.rows(),
                self.g.cols(),
                self.c.len()
            )));
        }
        let vectors_finite = self.q.iter().chain(&self.b).chain(&self.c).all(|v| v.is_finite());
        let matrices_finite = [&self.p, &self.a, &self.g]
            .iter()
            .all(|m| m.as_slice().iter().all(|v| v.is_finite()));
        if !(vectors_finite && matrices_finite) {
            return Err(Error::InvalidProblem("non-finite problem data".into()));
        }
        if !self.p.is_symmetric() {
            return Err(Error::InvalidProblem(format!(
                "P is not symmetric (max asymmetry {:e})",
                self.p.max_asymmetry()
            )));
        }
        Ok(())
    }

    /// Numerical PSD test: `P + 1e-8 I` must admit an `LDLᵀ` with positive
    /// pivots, i.e. the smallest eigenvalue is at least about `-1e-8`.
    pub fn check_psd(&self) -> Result<()> {
        let mut shifted = self.p.clone();
        shifted.add_diagonal(1e-8);
        match LdlFactor::factor(&shifted) {
            Ok(f) if f.negative_pivots() == 0 => Ok(()),
            _ => Err(Error::InvalidProblem("P is not positive semidefinite".into())),
        }
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        let pz = self.p.matvec(z);
        0.5 * crate::linalg::dot(z, &pz) + crate::linalg::dot(&self.q, z)
    }
}

#[derive(Serialize, Deserialize)]
struct RawQpProblem {
    #[serde(rename = "P")]
    p: DenseMatrix,
    q: Vec<f64>,
    #[serde(rename = "A")]
    a: DenseMatrix,
    b: Vec<f64>,
    #[serde(rename = "G")]
    g: DenseMatrix,
    c: Vec<f64>,
}

impl TryFrom<RawQpProblem> for QpProblem {
    type Error = Error;

    fn try_from(raw: RawQpProblem) -> Result<Self> {
        let d = raw.q.len();
        QpProblem::new(
            raw.p.with_cols(d)?,
            raw.q,
            raw.a.with_cols(d)?,
            raw.b,
            raw.g.with_cols(d)?,
            raw.c,
        )
    }
}

impl From<QpProblem> for RawQpProblem {
    fn from(p: QpProblem) -> Self {
        RawQpProblem {
            p: p.p,
            q: p.q,
            a: p.a,
            b: p.b,
            g: p.g,
            c: p.c,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Solved,
    SolvedInaccurate,
    MaxIterReached,
    PrimalInfeasible,
    DualInfeasible,
}

impl Status {
    pub fn is_solved(self) -> bool {
        matches!(self, Status::Solved | Status::SolvedInaccurate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub eps_prim_inf: f64,
    pub eps_dual_inf: f64,
    pub check_interval: usize,
    pub max_iter: usize,
    pub sigma: f64,
    /// Step size on inequality rows; equality rows use `rho * rho_eq_scale`.
    pub rho: f64,
    pub rho_eq_scale: f64,
    /// Rescale `rho` at residual checks when primal and dual progress
    /// drift apart. The rule uses residuals only, so runs stay reproducible.
    pub adaptive_rho: bool,
    /// Minimum change factor that triggers a refactorization.
    pub adaptive_rho_tolerance: f64,
    pub alpha_relax: f64,
    pub polish: bool,
    /// Regularization of the polishing KKT system.
    pub polish_delta: f64,
    pub refine_steps: usize,
    pub refine_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            eps_abs: 1e-3,
            eps_rel: 1e-3,
            eps_prim_inf: 1e-4,
            eps_dual_inf: 1e-4,
            check_interval: 25,
            max_iter: 4000,
            sigma: 1e-6,
            rho: 0.1,
            rho_eq_scale: 1e3,
            adaptive_rho: true,
            adaptive_rho_tolerance: 5.0,
            alpha_relax: 1.6,
            polish: true,
            polish_delta: crate::linalg::DEFAULT_DELTA,
            refine_steps: crate::linalg::DEFAULT_REFINE_STEPS,
            refine_tol: crate::linalg::DEFAULT_REFINE_TOL,
        }
    }
}

impl SolverSettings {
    /// Tolerances used for the simulated QP/LP/SOCP benchmarks.
    pub fn simulation() -> Self {
        Self::default()
    }

    /// Tighter tolerances for long-only portfolio problems, where small
    /// negative weights are not acceptable.
    pub fn portfolio() -> Self {
        SolverSettings {
            eps_abs: 1e-5,
            eps_rel: 1e-5,
            eps_prim_inf: 1e-5,
            eps_dual_inf: 1e-5,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.eps_abs,
            self.eps_rel,
            self.eps_prim_inf,
            self.eps_dual_inf,
            self.sigma,
            self.rho,
            self.rho_eq_scale,
            self.polish_delta,
            self.refine_tol,
        ];
        if positive.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidProblem("solver tolerances and step sizes must be positive".into()));
        }
        if !(self.alpha_relax > 0.0 && self.alpha_relax < 2.0) {
            return Err(Error::InvalidProblem(format!(
                "relaxation parameter must lie in (0, 2), got {}",
                self.alpha_relax
            )));
        }
        if !(self.adaptive_rho_tolerance >= 1.0) {
            return Err(Error::InvalidProblem("adaptive_rho_tolerance must be at least 1".into()));
        }
        if self.check_interval == 0 || self.max_iter == 0 {
            return Err(Error::InvalidProblem("check_interval and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub z_star: Vec<f64>,
    /// Equality duals.
    pub nu_star: Vec<f64>,
    /// Inequality duals, nonnegative.
    pub lambda_star: Vec<f64>,
    pub status: Status,
    pub iterations: usize,
    pub prim_res: f64,
    pub dual_res: f64,
    #[serde(default)]
    pub polished: bool,
}
