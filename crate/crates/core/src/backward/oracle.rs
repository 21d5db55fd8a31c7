use super::gradients::sym_outer;
use super::GradientBundle;
use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseMatrix, LuFactor};
use crate::qp::{QpProblem, Solution};

const ORACLE_REFINE_STEPS: usize = 5;
const ORACLE_TOL: f64 = 1e-12;

/// Solution of the full implicit-differentiation system.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    pub dz: Vec<f64>,
    /// One entry per inequality (active or not).
    pub dlambda: Vec<f64>,
    pub dnu: Vec<f64>,
}

/// Solves the transposed differentiated KKT system
///
/// ```text
/// [ H   Gᵀ D(λ)   Aᵀ ] [dz]     [∂L/∂z★]
/// [ G   D(g)      0  ] [dλ] = − [  0   ]
/// [ A   0         0  ] [dν]     [  0   ]
/// ```
///
/// with a dense LU factorization and a few refinement sweeps. `g` holds the
/// constraint values `g(z★) ≤ 0` and `jac_g` their gradients. The matrix is
/// singular when strict complementarity fails.
pub fn solve_implicit_system(
    hess: &DenseMatrix,
    jac_g: &DenseMatrix,
    g: &[f64],
    lambda: &[f64],
    a: &DenseMatrix,
    dl_dz: &[f64],
) -> Result<OracleSolution> {
    let d = hess.rows();
    let (n, m) = (jac_g.rows(), a.rows());
    if g.len() != n || lambda.len() != n || dl_dz.len() != d || jac_g.cols() != d || a.cols() != d {
        return Err(Error::DimensionMismatch("implicit system blocks disagree".into()));
    }
    let dim = d + n + m;
    let mut k = DenseMatrix::zeros(dim, dim);
    for i in 0..d {
        k.row_mut(i)[..d].copy_from_slice(hess.row(i));
    }
    for r in 0..n {
        for j in 0..d {
            let v = jac_g[(r, j)];
            k[(j, d + r)] = v * lambda[r];
            k[(d + r, j)] = v;
        }
        k[(d + r, d + r)] = g[r];
    }
    for r in 0..m {
        for j in 0..d {
            let v = a[(r, j)];
            k[(j, d + n + r)] = v;
            k[(d + n + r, j)] = v;
        }
    }

    let lu = LuFactor::factor(&k)?;
    let mut rhs = vec![0.0; dim];
    for (r, v) in rhs.iter_mut().zip(dl_dz) {
        *r = -v;
    }
    let mut x = lu.solve(&rhs);
    let scale = 1f64.max(k.norm_inf() * norm_inf(&x)).max(norm_inf(&rhs));
    for _ in 0..ORACLE_REFINE_STEPS {
        let kx = k.matvec(&x);
        let r: Vec<f64> = rhs.iter().zip(&kx).map(|(b, v)| b - v).collect();
        if norm_inf(&r) <= ORACLE_TOL * scale {
            break;
        }
        for (xi, dx) in x.iter_mut().zip(lu.solve(&r)) {
            *xi += dx;
        }
    }
    let dnu = x.split_off(d + n);
    let dlambda = x.split_off(d);
    Ok(OracleSolution { dz: x, dlambda, dnu })
}

/// Ground-truth QP gradients from the full `(d + n + m)` implicit system,
/// without any active-set reduction.
pub fn exact_backward_oracle(problem: &QpProblem, sol: &Solution, dl_dz: &[f64]) -> Result<GradientBundle> {
    if !sol.status.is_solved() {
        return Err(Error::LayerForwardFailed(sol.status));
    }
    let z = &sol.z_star;
    let slack: Vec<f64> = problem.g.matvec(z).iter().zip(&problem.c).map(|(gz, c)| gz - c).collect();
    let os = solve_implicit_system(&problem.p, &problem.g, &slack, &sol.lambda_star, &problem.a, dl_dz)?;

    let (n, d) = (problem.n_ineq(), problem.dim());
    let mut da = DenseMatrix::outer(&os.dnu, z);
    da.add_scaled(1.0, &DenseMatrix::outer(&sol.nu_star, &os.dz));
    let mut dg = DenseMatrix::zeros(n, d);
    let mut dc = vec![0.0; n];
    let mut active = Vec::new();
    for i in 0..n {
        let ls = sol.lambda_star[i];
        let scaled = ls * os.dlambda[i];
        for (j, g) in dg.row_mut(i).iter_mut().enumerate() {
            *g = scaled * z[j] + ls * os.dz[j];
        }
        dc[i] = -scaled;
        if ls != 0.0 {
            active.push(i);
        }
    }
    Ok(GradientBundle {
        dp: sym_outer(&os.dz, z),
        dq: os.dz.clone(),
        da,
        db: os.dnu.iter().map(|v| -v).collect(),
        dg,
        dc,
        active,
        kkt_residual_norm: None,
    })
}
