use serde::{Deserialize, Serialize};

use super::ActiveSet;
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseMatrix, KktSolver, KktSystem, LuFactor, DEFAULT_REFINE_STEPS, DEFAULT_REFINE_TOL};
use crate::qp::{QpProblem, Solution};

/// `minimize ½ z̃ᵀP′z̃ + q′ᵀz̃  s.t.  A′z̃ = 0, G₊z̃ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardProblem {
    pub p_prime: DenseMatrix,
    /// The incoming gradient `∂L/∂z★`.
    pub q_prime: Vec<f64>,
    pub a_prime: DenseMatrix,
    pub g_plus: DenseMatrix,
    /// Always zero.
    pub rhs_b: Vec<f64>,
    /// Always zero.
    pub rhs_c: Vec<f64>,
}

impl BackwardProblem {
    pub fn new(p_prime: DenseMatrix, q_prime: Vec<f64>, a_prime: DenseMatrix, g_plus: DenseMatrix) -> Result<Self> {
        let d = q_prime.len();
        if p_prime.rows() != d || p_prime.cols() != d || a_prime.cols() != d || g_plus.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "backward problem: P′ {}x{}, q′ {d}, A′ {}x{}, G₊ {}x{}",
                p_prime.rows(),
                p_prime.cols(),
                a_prime.rows(),
                a_prime.cols(),
                g_plus.rows(),
                g_plus.cols()
            )));
        }
        if !p_prime.is_symmetric() {
            return Err(Error::InvalidProblem("P′ is not symmetric".into()));
        }
        let (m, m_plus) = (a_prime.rows(), g_plus.rows());
        Ok(BackwardProblem {
            p_prime,
            q_prime,
            a_prime,
            g_plus,
            rhs_b: vec![0.0; m],
            rhs_c: vec![0.0; m_plus],
        })
    }

    pub fn dim(&self) -> usize {
        self.q_prime.len()
    }
}

/// For a QP layer the backward problem reuses `P` and `A` unchanged and keeps
/// the active rows of `G`.
pub fn build_backward_problem(
    problem: &QpProblem,
    sol: &Solution,
    active: &ActiveSet,
    dl_dz: &[f64],
) -> Result<BackwardProblem> {
    if dl_dz.len() != problem.dim() || sol.z_star.len() != problem.dim() {
        return Err(Error::DimensionMismatch(format!(
            "incoming gradient has length {}, problem has {} variables",
            dl_dz.len(),
            problem.dim()
        )));
    }
    if active.indices.iter().any(|&i| i >= problem.n_ineq()) {
        return Err(Error::DimensionMismatch("active index out of range".into()));
    }
    BackwardProblem::new(
        problem.p.clone(),
        dl_dz.to_vec(),
        problem.a.clone(),
        problem.g.select_rows(&active.indices),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackwardSolution {
    pub z_tilde: Vec<f64>,
    /// Multipliers of `G₊z̃ = 0`, one per active row.
    pub lambda_tilde: Vec<f64>,
    /// Multipliers of `A′z̃ = 0`.
    pub nu_tilde: Vec<f64>,
    /// `‖K t − rhs‖∞` of the refined solve.
    pub residual: f64,
}

/// Factorized backward KKT system; solves for any number of incoming
/// gradients with the same factorization.
#[derive(Debug, Clone)]
pub struct BackwardSolver {
    solver: KktSolver,
    // Set when the active and equality rows form a nonsingular square
    // matrix C. The feasible direction set is then {0}, so z̃ = 0 exactly
    // and the multipliers solve Cᵀ[λ̃; ν̃] = −q'.
    vertex: Option<LuFactor>,
}

impl BackwardSolver {
    pub fn new(p_prime: &DenseMatrix, g_plus: &DenseMatrix, a_prime: &DenseMatrix, delta: f64) -> Result<Self> {
        let system = KktSystem::assemble(p_prime, g_plus, a_prime, delta)?;
        let solver = KktSolver::new(system).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::SingularBackwardSystem { residual: f64::INFINITY },
            other => other,
        })?;
        Ok(Self::from_kkt(solver))
    }

    pub fn for_problem(bp: &BackwardProblem, delta: f64) -> Result<Self> {
        Self::new(&bp.p_prime, &bp.g_plus, &bp.a_prime, delta)
    }

    /// Wraps an already factorized system with the same block layout.
    pub fn from_kkt(solver: KktSolver) -> Self {
        let vertex = vertex_factor(solver.system());
        BackwardSolver { solver, vertex }
    }

    /// True when the constraints pin the primal direction to zero.
    pub fn is_vertex(&self) -> bool {
        self.vertex.is_some()
    }

    pub fn kkt(&self) -> &KktSolver {
        &self.solver
    }

    pub fn solve(&self, q_prime: &[f64]) -> Result<BackwardSolution> {
        let blocks = self.solver.system().blocks();
        if q_prime.len() != blocks.primal {
            return Err(Error::DimensionMismatch(format!(
                "incoming gradient has length {}, backward system has {} variables",
                q_prime.len(),
                blocks.primal
            )));
        }
        let mut rhs = vec![0.0; blocks.dim()];
        for (r, q) in rhs.iter_mut().zip(q_prime) {
            *r = -q;
        }
        if let Some(lu) = &self.vertex {
            let mut t = vec![0.0; blocks.primal];
            t.extend(lu.solve(&rhs[..blocks.primal]));
            let residual = norm_inf(&self.solver.system().residual(&t, &rhs));
            let nu_tilde = t.split_off(blocks.primal + blocks.active);
            let lambda_tilde = t.split_off(blocks.primal);
            return Ok(BackwardSolution {
                z_tilde: t,
                lambda_tilde,
                nu_tilde,
                residual,
            });
        }
        let refined = self
            .solver
            .refine_relative(&rhs, DEFAULT_REFINE_STEPS, DEFAULT_REFINE_TOL)
            .map_err(|e| match e {
                Error::RefinementStalled { residual, .. } => Error::SingularBackwardSystem { residual },
                other => other,
            })?;
        let mut t = refined.solution;
        let nu_tilde = t.split_off(blocks.primal + blocks.active);
        let lambda_tilde = t.split_off(blocks.primal);
        Ok(BackwardSolution {
            z_tilde: t,
            lambda_tilde,
            nu_tilde,
            residual: refined.residual,
        })
    }
}

fn vertex_factor(system: &KktSystem) -> Option<LuFactor> {
    let blocks = system.blocks();
    let d = blocks.primal;
    if d == 0 || blocks.active + blocks.equality != d {
        return None;
    }
    let k = system.matrix();
    // upper-right block of the symmetric KKT matrix is Cᵀ
    let mut ct = DenseMatrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            ct[(i, j)] = k[(i, d + j)];
        }
    }
    LuFactor::factor(&ct).ok()
}

/// Solves the backward QP through its regularized KKT system followed by
/// iterative refinement.
pub fn solve_backward(bp: &BackwardProblem, delta: f64) -> Result<BackwardSolution> {
    BackwardSolver::for_problem(bp, delta)?.solve(&bp.q_prime)
}
