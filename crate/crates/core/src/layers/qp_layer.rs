use std::sync::OnceLock;

use super::EXTERNAL_KKT_THRESHOLD;
use crate::backward::{
    assemble_qp_gradients, detect_active_set, ActiveSet, BackwardSolver, GradientBundle, DEFAULT_EPS_ACTIVE,
};
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DEFAULT_DELTA};
use crate::qp::{kkt_residual_norm, solve_qp, QpProblem, Solution, SolverSettings, Status};

/// Everything the backward pass needs from one forward pass.
#[derive(Debug)]
pub struct LayerTape {
    problem: QpProblem,
    solution: Solution,
    active: ActiveSet,
    delta: f64,
    solver: OnceLock<BackwardSolver>,
}

impl LayerTape {
    fn new(problem: QpProblem, solution: Solution) -> Result<Self> {
        let active = detect_active_set(&problem, &solution, DEFAULT_EPS_ACTIVE)?;
        Ok(LayerTape {
            problem,
            solution,
            active,
            delta: DEFAULT_DELTA,
            solver: OnceLock::new(),
        })
    }

    pub fn problem(&self) -> &QpProblem {
        &self.problem
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }

    pub fn active_set(&self) -> &ActiveSet {
        &self.active
    }

    /// True when the backward factorization is already available.
    pub fn has_cached_factorization(&self) -> bool {
        self.solver.get().is_some()
    }

    fn backward_solver(&self) -> Result<&BackwardSolver> {
        if let Some(s) = self.solver.get() {
            return Ok(s);
        }
        let g_plus = self.problem.g.select_rows(&self.active.indices);
        let solver = BackwardSolver::new(&self.problem.p, &g_plus, &self.problem.a, self.delta)?;
        Ok(self.solver.get_or_init(|| solver))
    }
}

/// Solves the QP (ADMM plus polish) and records the tape.
pub fn qp_layer_forward(problem: &QpProblem, settings: &SolverSettings) -> Result<(Vec<f64>, LayerTape)> {
    let forward = solve_qp(problem, settings)?;
    if forward.solution.status != Status::Solved {
        return Err(Error::LayerForwardFailed(forward.solution.status));
    }
    let tape = LayerTape::new(problem.clone(), forward.solution)?;
    // the polishing system is the backward system whenever both saw the same active rows
    if let Some(kkt) = forward.kkt {
        if kkt.active == tape.active.indices && kkt.solver.system().delta() == tape.delta {
            let _ = tape.solver.set(BackwardSolver::from_kkt(kkt.solver));
        }
    }
    Ok((tape.solution.z_star.clone(), tape))
}

pub fn qp_layer_backward(tape: &LayerTape, dl_dz: &[f64]) -> Result<GradientBundle> {
    if dl_dz.len() != tape.problem.dim() {
        return Err(Error::DimensionMismatch(format!(
            "incoming gradient has length {}, layer output has {}",
            dl_dz.len(),
            tape.problem.dim()
        )));
    }
    let bs = tape.backward_solver()?.solve(dl_dz)?;
    let mut bundle = assemble_qp_gradients(&tape.solution, &tape.active, &bs)?;
    let s = &tape.solution;
    bundle.kkt_residual_norm = Some(kkt_residual_norm(&tape.problem, &s.z_star, &s.nu_star, &s.lambda_star));
    Ok(bundle)
}

/// Builds a tape from a primal-dual point computed elsewhere. The point must
/// satisfy the KKT conditions to within [`EXTERNAL_KKT_THRESHOLD`]: stacked
/// residual norm, inequality violation and dual sign all count.
pub fn attach_external_solution(problem: &QpProblem, z: &[f64], nu: &[f64], lambda: &[f64]) -> Result<LayerTape> {
    problem.validate()?;
    if z.len() != problem.dim() || nu.len() != problem.n_eq() || lambda.len() != problem.n_ineq() {
        return Err(Error::DimensionMismatch("external solution does not match problem".into()));
    }
    let violation = problem
        .g
        .matvec(z)
        .iter()
        .zip(&problem.c)
        .fold(0.0f64, |acc, (gz, c)| acc.max(gz - c));
    let negative_dual = lambda.iter().fold(0.0f64, |acc, &l| acc.max(-l));
    let residual = kkt_residual_norm(problem, z, nu, lambda).max(violation).max(negative_dual);
    if !(residual <= EXTERNAL_KKT_THRESHOLD) {
        return Err(Error::InvalidExternalSolution {
            residual,
            threshold: EXTERNAL_KKT_THRESHOLD,
        });
    }
    let solution = Solution {
        z_star: z.to_vec(),
        nu_star: nu.to_vec(),
        lambda_star: lambda.to_vec(),
        status: Status::Solved,
        iterations: 0,
        prim_res: violation.max(norm_inf(
            &problem.a.matvec(z).iter().zip(&problem.b).map(|(a, b)| a - b).collect::<Vec<_>>(),
        )),
        dual_res: residual,
        polished: false,
    };
    LayerTape::new(problem.clone(), solution)
}
