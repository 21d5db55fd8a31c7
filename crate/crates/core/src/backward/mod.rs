//! Backward pass of a QP layer.
//!
//! Given the forward optimum `(z★, ν★, λ★)` and an incoming gradient
//! `∂L/∂z★`, the vector-Jacobian product with respect to every problem
//! parameter follows from the solution of one equality-constrained QP
//!
//! ```text
//! minimize    ½ z̃ᵀ P z̃ + (∂L/∂z★)ᵀ z̃
//! subject to  A z̃ = 0
//!             G₊ z̃ = 0
//! ```
//!
//! where `G₊` holds the inequality rows that bind at `z★`. The dense
//! [`exact_backward_oracle`] solves the full implicit-differentiation system
//! instead and is kept as ground truth.

mod active;
mod gradients;
mod oracle;
mod problem;

pub use active::{complementarity_margin, detect_active_set, ActiveSet, DEFAULT_EPS_ACTIVE};
pub use gradients::{assemble_qp_gradients, GradientBundle};
pub use oracle::{exact_backward_oracle, solve_implicit_system, OracleSolution};
pub use problem::{build_backward_problem, solve_backward, BackwardProblem, BackwardSolution, BackwardSolver};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// `a·b / (‖a‖ ‖b‖)`.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "cosine similarity of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (norm2(a), norm2(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(dot(a, b) / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_examples() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine_similarity(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((c - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_rejects_zero_vectors() {
        assert!(matches!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(Error::ZeroVector)));
    }
}
