use super::residual::{kkt_residual_norm, standard_residuals};
use super::{QpProblem, Solution, SolverSettings, Status};
use crate::linalg::{KktSolver, KktSystem};

/// Floor below which residual differences are treated as rounding noise.
const RESIDUAL_FLOOR: f64 = 1e-9;

/// The factorized active-set KKT system left behind by polishing. It is
/// returned even when the raw point was kept.
#[derive(Debug, Clone)]
pub struct PolishedKkt {
    /// Inequality rows treated as equalities, ascending.
    pub active: Vec<usize>,
    pub solver: KktSolver,
}

/// Re-solves the equality-constrained problem on the active set guessed from
/// `raw`. Returns `raw` unchanged if polishing does not improve it.
pub fn polish(problem: &QpProblem, raw: &Solution, settings: &SolverSettings) -> Solution {
    polish_with_kkt(problem, raw, settings).0
}

pub fn polish_with_kkt(
    problem: &QpProblem,
    raw: &Solution,
    settings: &SolverSettings,
) -> (Solution, Option<PolishedKkt>) {
    if !raw.status.is_solved() {
        return (raw.clone(), None);
    }

    // row i is binding when its slack is smaller than its multiplier
    let gz = problem.g.matvec(&raw.z_star);
    let guess: Vec<usize> = (0..problem.n_ineq())
        .filter(|&i| problem.c[i] - gz[i] < raw.lambda_star[i])
        .collect();
    let first = attempt(problem, raw, settings, guess.clone());
    if let Some((Some(solution), kkt)) = first {
        return (solution, Some(kkt));
    }

    // Degenerate vertices bind more rows than there are free directions;
    // retry with the rows carrying the largest multipliers.
    let room = problem.dim().saturating_sub(problem.n_eq());
    if guess.len() > room {
        let mut trimmed = guess;
        trimmed.sort_by(|&i, &j| raw.lambda_star[j].total_cmp(&raw.lambda_star[i]).then(i.cmp(&j)));
        trimmed.truncate(room);
        trimmed.sort_unstable();
        if let Some((Some(solution), kkt)) = attempt(problem, raw, settings, trimmed) {
            return (solution, Some(kkt));
        }
    }
    (raw.clone(), first.map(|(_, kkt)| kkt))
}

/// Solves the KKT system of one active-set guess. The solution is `None`
/// when it does not improve on `raw`; the factorization is returned either
/// way since it is still the right one for this active set.
fn attempt(
    problem: &QpProblem,
    raw: &Solution,
    settings: &SolverSettings,
    active: Vec<usize>,
) -> Option<(Option<Solution>, PolishedKkt)> {
    let d = problem.dim();
    let g_plus = problem.g.select_rows(&active);
    let system = KktSystem::assemble(&problem.p, &g_plus, &problem.a, settings.polish_delta).ok()?;
    let solver = KktSolver::new(system).ok()?;
    let mut rhs: Vec<f64> = problem.q.iter().map(|v| -v).collect();
    rhs.extend(active.iter().map(|&i| problem.c[i]));
    rhs.extend_from_slice(&problem.b);
    let refined = solver.refine_relative(&rhs, settings.refine_steps, settings.refine_tol).ok()?;

    let t = refined.solution;
    let z = t[..d].to_vec();
    let mut lambda = vec![0.0; problem.n_ineq()];
    for (k, &i) in active.iter().enumerate() {
        lambda[i] = t[d + k];
    }
    let nu = t[d + active.len()..].to_vec();

    let before = standard_residuals(problem, &raw.z_star, &raw.nu_star, &raw.lambda_star, settings);
    let after = standard_residuals(problem, &z, &nu, &lambda, settings);
    let kkt_before = kkt_residual_norm(problem, &raw.z_star, &raw.nu_star, &raw.lambda_star);
    let kkt_after = kkt_residual_norm(problem, &z, &nu, &lambda);

    let improves = kkt_after <= kkt_before
        && after.prim <= before.prim.max(RESIDUAL_FLOOR)
        && after.dual <= before.dual.max(RESIDUAL_FLOOR)
        && after.dual_sign <= before.dual_sign.max(RESIDUAL_FLOOR);
    let kkt = PolishedKkt { active, solver };
    if !improves {
        return Some((None, kkt));
    }

    let status = if after.converged() { Status::Solved } else { raw.status };
    let solution = Solution {
        z_star: z,
        nu_star: nu,
        lambda_star: lambda,
        status,
        iterations: raw.iterations,
        prim_res: after.prim,
        dual_res: after.dual,
        polished: true,
    };
    Some((Some(solution), kkt))
}
