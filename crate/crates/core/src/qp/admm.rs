use super::polish::{polish_with_kkt, PolishedKkt};
use super::{QpProblem, Solution, SolverSettings, Status};
use crate::error::Result;
use crate::linalg::{norm_inf, DenseMatrix, LdlFactor};

/// ADMM state for one problem. Owns its factorization and iterates; not
/// meant to be shared while iterating.
///
/// The constraints are handled uniformly as `l ≤ Cz ≤ u` with `C = [A; G]`,
/// `l = [b; −∞]`, `u = [b; c]`, so a single box projection covers both kinds.
#[derive(Debug, Clone)]
pub struct AdmmWorkspace<'a> {
    problem: &'a QpProblem,
    settings: SolverSettings,
    factor: LdlFactor,
    rho: Vec<f64>,
    rho_scalar: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    x_prev: Vec<f64>,
    y_prev: Vec<f64>,
    rhs: Vec<f64>,
    iteration: usize,
}

/// Termination residuals of the ADMM iterate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AdmmResiduals {
    prim: f64,
    dual: f64,
    eps_prim: f64,
    eps_dual: f64,
    // Normalizers for the adaptive step size.
    prim_scale: f64,
    dual_scale: f64,
}

impl AdmmResiduals {
    fn converged_within(&self, factor: f64) -> bool {
        self.prim <= factor * self.eps_prim && self.dual <= factor * self.eps_dual
    }

    fn badness(&self) -> f64 {
        (self.prim / self.eps_prim).max(self.dual / self.eps_dual)
    }
}

impl<'a> AdmmWorkspace<'a> {
    pub fn new(problem: &'a QpProblem, settings: &SolverSettings) -> Result<Self> {
        problem.validate()?;
        settings.validate()?;
        let d = problem.dim();
        let (m, n) = (problem.n_eq(), problem.n_ineq());
        let rows = m + n;

        let mut rho = vec![settings.rho * settings.rho_eq_scale; m];
        rho.extend(std::iter::repeat_n(settings.rho, n));
        let mut lower = problem.b.clone();
        lower.extend(std::iter::repeat_n(f64::NEG_INFINITY, n));
        let mut upper = problem.b.clone();
        upper.extend_from_slice(&problem.c);

        let factor = factor_admm_kkt(problem, settings.sigma, &rho)?;
        let dim = d + rows;

        Ok(AdmmWorkspace {
            problem,
            settings: settings.clone(),
            factor,
            rho,
            rho_scalar: settings.rho,
            lower,
            upper,
            x: vec![0.0; d],
            z: vec![0.0; rows],
            y: vec![0.0; rows],
            x_prev: vec![0.0; d],
            y_prev: vec![0.0; rows],
            rhs: vec![0.0; dim],
            iteration: 0,
        })
    }

    /// Current inequality-row step size.
    pub fn rho(&self) -> f64 {
        self.rho_scalar
    }

    /// Rebalances `ρ` so the normalized primal and dual residuals shrink at
    /// similar rates, refactoring only when the change exceeds the
    /// configured factor. Depends on the iterate alone, never on timing.
    fn adapt_rho(&mut self, res: &AdmmResiduals) -> Result<()> {
        const TINY: f64 = 1e-30;
        let prim = res.prim / res.prim_scale.max(TINY);
        let dual = res.dual / res.dual_scale.max(TINY);
        let proposed = (self.rho_scalar * (prim / dual.max(TINY)).sqrt()).clamp(RHO_MIN, RHO_MAX);
        let tol = self.settings.adaptive_rho_tolerance;
        if !(proposed > self.rho_scalar * tol || proposed < self.rho_scalar / tol) {
            return Ok(());
        }
        let m = self.problem.n_eq();
        for (r, rho) in self.rho.iter_mut().enumerate() {
            *rho = if r < m { proposed * self.settings.rho_eq_scale } else { proposed };
        }
        self.factor = factor_admm_kkt(self.problem, self.settings.sigma, &self.rho)?;
        self.rho_scalar = proposed;
        Ok(())
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Equality and inequality duals of the current iterate.
    pub fn duals(&self) -> (&[f64], &[f64]) {
        self.y.split_at(self.problem.n_eq())
    }

    pub fn step(&mut self) {
        let d = self.problem.dim();
        let alpha = self.settings.alpha_relax;
        let sigma = self.settings.sigma;
        self.x_prev.copy_from_slice(&self.x);
        self.y_prev.copy_from_slice(&self.y);

        for i in 0..d {
            self.rhs[i] = sigma * self.x[i] - self.problem.q[i];
        }
        for (r, slot) in self.rhs[d..].iter_mut().enumerate() {
            *slot = self.z[r] - self.y[r] / self.rho[r];
        }
        self.factor.solve_in_place(&mut self.rhs);

        for i in 0..d {
            self.x[i] = alpha * self.rhs[i] + (1.0 - alpha) * self.x[i];
        }
        for r in 0..self.z.len() {
            let nu = self.rhs[d + r];
            let z_tilde = self.z[r] + (nu - self.y[r]) / self.rho[r];
            let z_relax = alpha * z_tilde + (1.0 - alpha) * self.z[r];
            let z_new = (z_relax + self.y[r] / self.rho[r]).clamp(self.lower[r], self.upper[r]);
            self.y[r] += self.rho[r] * (z_relax - z_new);
            self.z[r] = z_new;
        }
        self.iteration += 1;
    }

    fn constraint_product(&self, v: &[f64]) -> Vec<f64> {
        let mut out = self.problem.a.matvec(v);
        out.extend(self.problem.g.matvec(v));
        out
    }

    fn constraint_product_t(&self, y: &[f64]) -> Vec<f64> {
        let (nu, lambda) = y.split_at(self.problem.n_eq());
        let mut out = self.problem.a.matvec_t(nu);
        for (o, g) in out.iter_mut().zip(self.problem.g.matvec_t(lambda)) {
            *o += g;
        }
        out
    }

    pub(crate) fn residuals(&self) -> AdmmResiduals {
        let s = &self.settings;
        let cx = self.constraint_product(&self.x);
        let prim = cx.iter().zip(&self.z).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
        let px = self.problem.p.matvec(&self.x);
        let cty = self.constraint_product_t(&self.y);
        let dual = px
            .iter()
            .zip(&cty)
            .zip(&self.problem.q)
            .fold(0.0f64, |acc, ((p, c), q)| acc.max((p + c + q).abs()));
        let prim_scale = norm_inf(&cx).max(norm_inf(&self.z));
        let dual_scale = norm_inf(&px).max(norm_inf(&cty)).max(norm_inf(&self.problem.q));
        AdmmResiduals {
            prim,
            dual,
            eps_prim: s.eps_abs + s.eps_rel * prim_scale,
            eps_dual: s.eps_abs + s.eps_rel * dual_scale,
            prim_scale,
            dual_scale,
        }
    }

    /// Certificate test on the last dual step `δy`: `Cᵀδy ≈ 0` while
    /// `uᵀδy₊ + lᵀδy₋ < 0`.
    pub fn primal_infeasible(&self) -> bool {
        let eps = self.settings.eps_prim_inf;
        let mut dy: Vec<f64> = self.y.iter().zip(&self.y_prev).map(|(a, b)| a - b).collect();
        for (r, v) in dy.iter_mut().enumerate() {
            if self.lower[r] == f64::NEG_INFINITY {
                *v = v.max(0.0);
            }
        }
        let norm = norm_inf(&dy);
        if norm <= eps {
            return false;
        }
        let support: f64 = dy
            .iter()
            .enumerate()
            .map(|(r, &v)| if v > 0.0 { self.upper[r] * v } else if v < 0.0 { self.lower[r] * v } else { 0.0 })
            .sum();
        support < -eps * norm && norm_inf(&self.constraint_product_t(&dy)) <= eps * norm
    }

    /// Certificate test on the last primal step `δx`: `Pδx ≈ 0`, `qᵀδx < 0`
    /// and `Cδx` in the recession cone of the constraint box.
    pub fn dual_infeasible(&self) -> bool {
        let eps = self.settings.eps_dual_inf;
        let dx: Vec<f64> = self.x.iter().zip(&self.x_prev).map(|(a, b)| a - b).collect();
        let norm = norm_inf(&dx);
        if norm <= eps {
            return false;
        }
        let tol = eps * norm;
        if crate::linalg::dot(&self.problem.q, &dx) >= -tol {
            return false;
        }
        if norm_inf(&self.problem.p.matvec(&dx)) > tol {
            return false;
        }
        self.constraint_product(&dx).iter().enumerate().all(|(r, &v)| {
            if self.lower[r] == f64::NEG_INFINITY {
                v <= tol
            } else {
                v.abs() <= tol
            }
        })
    }

    fn snapshot(&self) -> (Vec<f64>, Vec<f64>) {
        (self.x.clone(), self.y.clone())
    }

    fn solution_from(&self, x: Vec<f64>, y: Vec<f64>, status: Status, res: AdmmResiduals) -> Solution {
        let mut nu = y;
        let lambda = nu.split_off(self.problem.n_eq());
        Solution {
            z_star: x,
            nu_star: nu,
            lambda_star: lambda,
            status,
            iterations: self.iteration,
            prim_res: res.prim,
            dual_res: res.dual,
            polished: false,
        }
    }

    /// Runs to termination and returns the unpolished solution.
    pub fn run(mut self) -> Result<Solution> {
        let interval = self.settings.check_interval;
        let max_iter = self.settings.max_iter;
        let mut best: Option<(f64, Vec<f64>, Vec<f64>, AdmmResiduals)> = None;
        while self.iteration < max_iter {
            self.step();
            if self.iteration % interval != 0 && self.iteration != max_iter {
                continue;
            }
            let res = self.residuals();
            if res.converged_within(1.0) {
                let (x, y) = self.snapshot();
                return Ok(self.solution_from(x, y, Status::Solved, res));
            }
            if self.primal_infeasible() {
                let (x, y) = self.snapshot();
                return Ok(self.solution_from(x, y, Status::PrimalInfeasible, res));
            }
            if self.dual_infeasible() {
                let (x, y) = self.snapshot();
                return Ok(self.solution_from(x, y, Status::DualInfeasible, res));
            }
            if best.as_ref().is_none_or(|b| res.badness() < b.0) {
                let (x, y) = self.snapshot();
                best = Some((res.badness(), x, y, res));
            }
            if self.settings.adaptive_rho {
                self.adapt_rho(&res)?;
            }
        }
        let (_, x, y, res) = best.expect("at least one residual check runs");
        let status = if res.converged_within(10.0) {
            Status::SolvedInaccurate
        } else {
            Status::MaxIterReached
        };
        Ok(self.solution_from(x, y, status, res))
    }
}

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;

/// Factors `[[P + σI, Cᵀ], [C, −diag(ρ)⁻¹]]`.
fn factor_admm_kkt(problem: &QpProblem, sigma: f64, rho: &[f64]) -> Result<LdlFactor> {
    let d = problem.dim();
    let m = problem.n_eq();
    let dim = d + rho.len();
    let mut kkt = DenseMatrix::zeros(dim, dim);
    for i in 0..d {
        for j in 0..d {
            kkt[(i, j)] = problem.p[(i, j)];
        }
        kkt[(i, i)] += sigma;
    }
    for (r, &rho_r) in rho.iter().enumerate() {
        let row = if r < m { problem.a.row(r) } else { problem.g.row(r - m) };
        for (j, &v) in row.iter().enumerate() {
            kkt[(d + r, j)] = v;
            kkt[(j, d + r)] = v;
        }
        kkt[(d + r, d + r)] = -1.0 / rho_r;
    }
    LdlFactor::factor(&kkt)
}

/// ADMM iterations only, no polishing.
pub fn admm_iterate(problem: &QpProblem, settings: &SolverSettings) -> Result<Solution> {
    AdmmWorkspace::new(problem, settings)?.run()
}

/// Result of a full forward solve.
#[derive(Debug, Clone)]
pub struct ForwardSolve {
    pub solution: Solution,
    /// Factorized active-set KKT system from a successful polish. It is the
    /// same matrix the backward pass needs when the active sets agree.
    pub kkt: Option<PolishedKkt>,
}

/// Times the iterates are re-solved at tighter tolerances when polishing
/// fails to identify the active set.
const POLISH_RETRIES: usize = 2;
const RETRY_TIGHTENING: f64 = 1e-2;

/// ADMM followed by polishing (when enabled in `settings`). If polishing
/// fails, ADMM is rerun with tighter tolerances and polishing retried.
pub fn solve_qp(problem: &QpProblem, settings: &SolverSettings) -> Result<ForwardSolve> {
    let raw = admm_iterate(problem, settings)?;
    if !settings.polish || !raw.status.is_solved() {
        return Ok(ForwardSolve { solution: raw, kkt: None });
    }
    let (mut solution, mut kkt) = polish_with_kkt(problem, &raw, settings);
    let mut tight = settings.clone();
    for _ in 0..POLISH_RETRIES {
        if solution.polished {
            break;
        }
        tight.eps_abs *= RETRY_TIGHTENING;
        tight.eps_rel *= RETRY_TIGHTENING;
        let retry = admm_iterate(problem, &tight)?;
        if retry.status != Status::Solved {
            break;
        }
        (solution, kkt) = polish_with_kkt(problem, &retry, settings);
    }
    Ok(ForwardSolve { solution, kkt })
}

pub fn admm_solve(problem: &QpProblem, settings: &SolverSettings) -> Result<Solution> {
    Ok(solve_qp(problem, settings)?.solution)
}
