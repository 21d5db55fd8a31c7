//! Reference implementations shared by the integration tests. None of them
//! call into the library's solvers.
#![allow(dead_code)]

use bpqp::linalg::DenseMatrix;
use bpqp::qp::QpProblem;

/// Gaussian elimination with partial pivoting. `None` when a pivot vanishes.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

pub fn matrix_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cos(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (norm(a) * norm(b))
}

pub fn rel_err(reference: &[f64], x: &[f64]) -> f64 {
    let diff: Vec<f64> = reference.iter().zip(x).map(|(r, v)| r - v).collect();
    norm(&diff) / norm(reference).max(1e-300)
}

/// Primal-dual optimum of a strictly convex QP.
#[derive(Debug, Clone)]
pub struct OracleOptimum {
    pub z: Vec<f64>,
    pub nu: Vec<f64>,
    pub lambda: Vec<f64>,
    pub active: Vec<usize>,
}

/// Unregularized KKT matrix `[P G₊ᵀ Aᵀ; G₊ 0 0; A 0 0]` as nested rows.
pub fn kkt_rows(problem: &QpProblem, active: &[usize]) -> Vec<Vec<f64>> {
    let d = problem.dim();
    let (k, m) = (active.len(), problem.n_eq());
    let n = d + k + m;
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..d {
        for j in 0..d {
            rows[i][j] = problem.p[(i, j)];
        }
    }
    for (r, &gi) in active.iter().enumerate() {
        for j in 0..d {
            rows[d + r][j] = problem.g[(gi, j)];
            rows[j][d + r] = problem.g[(gi, j)];
        }
    }
    for r in 0..m {
        for j in 0..d {
            rows[d + k + r][j] = problem.a[(r, j)];
            rows[j][d + k + r] = problem.a[(r, j)];
        }
    }
    rows
}

/// Exhaustive active-set search: solves the equality-constrained QP for
/// every subset of inequality rows and keeps the one that is primal
/// feasible with nonnegative multipliers. Exponential in `n_ineq`.
pub fn enumerate_qp(problem: &QpProblem) -> Option<OracleOptimum> {
    let (d, n, m) = (problem.dim(), problem.n_ineq(), problem.n_eq());
    assert!(n <= 14, "enumeration oracle is exponential");
    let mut best: Option<(f64, OracleOptimum)> = None;
    for mask in 0u32..(1 << n) {
        let active: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        if active.len() + m > d {
            continue;
        }
        let mut rhs: Vec<f64> = problem.q.iter().map(|v| -v).collect();
        rhs.extend(active.iter().map(|&i| problem.c[i]));
        rhs.extend_from_slice(&problem.b);
        let Some(t) = gauss_solve(kkt_rows(problem, &active), rhs) else {
            continue;
        };
        let z = t[..d].to_vec();
        let lam_act = &t[d..d + active.len()];
        let nu = t[d + active.len()..].to_vec();
        let gz: Vec<f64> = (0..n).map(|i| dot(problem.g.row(i), &z)).collect();
        let feasible = (0..n).all(|i| gz[i] - problem.c[i] <= 1e-9 * (1.0 + problem.c[i].abs()));
        if !feasible || lam_act.iter().any(|&l| l < -1e-9) {
            continue;
        }
        let mut lambda = vec![0.0; n];
        for (k, &i) in active.iter().enumerate() {
            lambda[i] = lam_act[k].max(0.0);
        }
        let obj = objective(problem, &z);
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, OracleOptimum { z, nu, lambda, active }));
        }
    }
    best.map(|(_, o)| o)
}

pub fn objective(problem: &QpProblem, z: &[f64]) -> f64 {
    let pz: Vec<f64> = (0..problem.dim()).map(|i| dot(problem.p.row(i), z)).collect();
    0.5 * dot(z, &pz) + dot(&problem.q, z)
}

/// `z★(problem)` from the enumeration oracle.
pub fn oracle_z(problem: &QpProblem) -> Vec<f64> {
    enumerate_qp(problem).expect("oracle found no optimum").z
}

/// Central difference of `θ ↦ dl·z★(perturb(problem, θ))` at `θ = 0`.
pub fn fd_directional(problem: &QpProblem, dl: &[f64], h: f64, perturb: impl Fn(&mut QpProblem, f64)) -> f64 {
    let mut plus = problem.clone();
    perturb(&mut plus, h);
    let mut minus = problem.clone();
    perturb(&mut minus, -h);
    (dot(dl, &oracle_z(&plus)) - dot(dl, &oracle_z(&minus))) / (2.0 * h)
}

/// Smallest multiplier among active rows and smallest slack among the rest.
pub fn oracle_margin(problem: &QpProblem, opt: &OracleOptimum) -> f64 {
    let mut margin = f64::INFINITY;
    for i in 0..problem.n_ineq() {
        if opt.active.contains(&i) {
            margin = margin.min(opt.lambda[i]);
        } else {
            margin = margin.min(problem.c[i] - dot(problem.g.row(i), &opt.z));
        }
    }
    margin
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}
