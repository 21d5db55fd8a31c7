use super::{QpProblem, SolverSettings};
use crate::linalg::norm_inf;

/// The stacked KKT residual `(r_dual, r_cent, r_prim)` at a primal-dual point.
#[derive(Debug, Clone, PartialEq)]
pub struct KktResiduals {
    /// `Pz + q + Aᵀν + Gᵀλ`
    pub dual: Vec<f64>,
    /// `D(λ)(Gz − c)`
    pub cent: Vec<f64>,
    /// `Az − b`
    pub prim: Vec<f64>,
}

impl KktResiduals {
    pub fn norm(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        (sq(&self.dual) + sq(&self.cent) + sq(&self.prim)).sqrt()
    }
}

pub fn kkt_residuals(problem: &QpProblem, z: &[f64], nu: &[f64], lambda: &[f64]) -> KktResiduals {
    assert_eq!(z.len(), problem.dim(), "primal length");
    assert_eq!(nu.len(), problem.n_eq(), "equality dual length");
    assert_eq!(lambda.len(), problem.n_ineq(), "inequality dual length");
    let mut dual = problem.p.matvec(z);
    for (r, (qi, (ai, gi))) in dual
        .iter_mut()
        .zip(problem.q.iter().zip(problem.a.matvec_t(nu).iter().zip(problem.g.matvec_t(lambda))))
    {
        *r += qi + ai + gi;
    }
    let gz = problem.g.matvec(z);
    let cent = gz
        .iter()
        .zip(&problem.c)
        .zip(lambda)
        .map(|((gzi, ci), li)| li * (gzi - ci))
        .collect();
    let prim = problem.a.matvec(z).iter().zip(&problem.b).map(|(az, bi)| az - bi).collect();
    KktResiduals { dual, cent, prim }
}

/// Euclidean norm of the stacked KKT residual.
pub fn kkt_residual_norm(problem: &QpProblem, z: &[f64], nu: &[f64], lambda: &[f64]) -> f64 {
    kkt_residuals(problem, z, nu, lambda).norm()
}

/// Infinity-norm residuals used for termination, with their absolute plus
/// relative thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardResiduals {
    /// Largest equality violation or positive inequality violation.
    pub prim: f64,
    /// `‖Pz + q + Aᵀν + Gᵀλ‖∞`
    pub dual: f64,
    /// Largest negative inequality dual, as a positive number.
    pub dual_sign: f64,
    pub eps_prim: f64,
    pub eps_dual: f64,
}

impl StandardResiduals {
    pub fn converged(&self) -> bool {
        self.prim <= self.eps_prim && self.dual <= self.eps_dual && self.dual_sign <= self.eps_dual
    }

    /// Converged with tolerances loosened by `factor`.
    pub fn converged_within(&self, factor: f64) -> bool {
        self.prim <= factor * self.eps_prim
            && self.dual <= factor * self.eps_dual
            && self.dual_sign <= factor * self.eps_dual
    }
}

pub fn standard_residuals(
    problem: &QpProblem,
    z: &[f64],
    nu: &[f64],
    lambda: &[f64],
    settings: &SolverSettings,
) -> StandardResiduals {
    let az = problem.a.matvec(z);
    let gz = problem.g.matvec(z);
    let mut prim = 0.0f64;
    let mut proj_norm = 0.0f64;
    for (azi, bi) in az.iter().zip(&problem.b) {
        prim = prim.max((azi - bi).abs());
        proj_norm = proj_norm.max(bi.abs());
    }
    for (gzi, ci) in gz.iter().zip(&problem.c) {
        prim = prim.max(gzi - ci);
        proj_norm = proj_norm.max(gzi.min(*ci).abs());
    }
    let cz_norm = norm_inf(&az).max(norm_inf(&gz));

    let pz = problem.p.matvec(z);
    let aty = problem.a.matvec_t(nu);
    let gty = problem.g.matvec_t(lambda);
    let cty: Vec<f64> = aty.iter().zip(&gty).map(|(x, y)| x + y).collect();
    let dual = pz
        .iter()
        .zip(&problem.q)
        .zip(&cty)
        .fold(0.0f64, |acc, ((p, q), c)| acc.max((p + q + c).abs()));
    let dual_sign = lambda.iter().fold(0.0f64, |acc, &l| acc.max(-l));

    StandardResiduals {
        prim,
        dual,
        dual_sign,
        eps_prim: settings.eps_abs + settings.eps_rel * cz_norm.max(proj_norm),
        eps_dual: settings.eps_abs
            + settings.eps_rel * norm_inf(&pz).max(norm_inf(&cty)).max(norm_inf(&problem.q)),
    }
}
