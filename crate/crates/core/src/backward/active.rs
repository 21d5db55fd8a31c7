use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_inf;
use crate::qp::{QpProblem, Solution};

pub const DEFAULT_EPS_ACTIVE: f64 = 1e-6;

/// Inequality rows treated as equalities in the backward pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet {
    /// Sorted, unique row indices into `G`.
    pub indices: Vec<usize>,
    /// Subset of `indices` that bind with a (near) zero multiplier. These
    /// break strict complementarity; they are kept in the set and the
    /// regularized backward solve absorbs the rank deficiency.
    pub weakly_active: Vec<usize>,
}

impl ActiveSet {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.weakly_active.is_empty()
    }
}

/// Row `i` is active when `λ★ᵢ ≥ ε` or its slack satisfies `(Gz★ − c)ᵢ ≥ −ε`,
/// with `ε = eps_active · (1 + ‖λ★‖∞)`.
pub fn detect_active_set(problem: &QpProblem, sol: &Solution, eps_active: f64) -> Result<ActiveSet> {
    if !sol.status.is_solved() {
        return Err(Error::LayerForwardFailed(sol.status));
    }
    if sol.lambda_star.len() != problem.n_ineq() || sol.z_star.len() != problem.dim() {
        return Err(Error::DimensionMismatch("solution does not match problem".into()));
    }
    let eps = eps_active * (1.0 + norm_inf(&sol.lambda_star));
    let gz = problem.g.matvec(&sol.z_star);
    let mut indices = Vec::new();
    let mut weakly_active = Vec::new();
    for (i, (&lambda, (&gzi, &ci))) in sol.lambda_star.iter().zip(gz.iter().zip(&problem.c)).enumerate() {
        let slack = gzi - ci;
        if lambda >= eps || slack >= -eps {
            indices.push(i);
            if lambda < eps && slack.abs() < eps {
                weakly_active.push(i);
            }
        }
    }
    Ok(ActiveSet { indices, weakly_active })
}

/// Distance from degeneracy: the smallest multiplier among active rows and
/// the smallest slack among inactive rows. Infinite when there are no
/// inequality rows.
pub fn complementarity_margin(problem: &QpProblem, sol: &Solution, active: &ActiveSet) -> f64 {
    let gz = problem.g.matvec(&sol.z_star);
    let mut margin = f64::INFINITY;
    let mut next = active.indices.iter().peekable();
    for i in 0..problem.n_ineq() {
        if next.peek() == Some(&&i) {
            next.next();
            margin = margin.min(sol.lambda_star[i]);
        } else {
            margin = margin.min(problem.c[i] - gz[i]);
        }
    }
    margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::qp::Status;

    fn solution(z: f64, lambda: f64) -> Solution {
        Solution {
            z_star: vec![z],
            nu_star: vec![],
            lambda_star: vec![lambda],
            status: Status::Solved,
            iterations: 0,
            prim_res: 0.0,
            dual_res: 0.0,
            polished: true,
        }
    }

    fn one_row(g: f64, c: f64) -> QpProblem {
        QpProblem::new(
            DenseMatrix::identity(1),
            vec![2.0],
            DenseMatrix::zeros(0, 1),
            vec![],
            DenseMatrix::from_rows(&[vec![g]], 1).unwrap(),
            vec![c],
        )
        .unwrap()
    }

    #[test]
    fn binding_row_is_active() {
        let set = detect_active_set(&one_row(-1.0, -1.0), &solution(1.0, 1.0), DEFAULT_EPS_ACTIVE).unwrap();
        assert_eq!(set.indices, vec![0]);
        assert!(!set.is_degenerate());
    }

    #[test]
    fn slack_row_is_inactive() {
        // z ≤ 5 at z★ = −2
        let set = detect_active_set(&one_row(1.0, 5.0), &solution(-2.0, 0.0), DEFAULT_EPS_ACTIVE).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn touching_row_with_zero_multiplier_is_weakly_active() {
        let set = detect_active_set(&one_row(1.0, -2.0), &solution(-2.0, 0.0), DEFAULT_EPS_ACTIVE).unwrap();
        assert_eq!(set.indices, vec![0]);
        assert_eq!(set.weakly_active, vec![0]);
    }

    #[test]
    fn unsolved_input_is_rejected() {
        let mut sol = solution(1.0, 1.0);
        sol.status = Status::MaxIterReached;
        assert!(detect_active_set(&one_row(-1.0, -1.0), &sol, DEFAULT_EPS_ACTIVE).is_err());
    }
}
