//! Differentiable convex optimization layers.
//!
//! Forward passes solve a convex QP with ADMM and polish the result on the
//! detected active set. Backward passes solve one more equality-constrained
//! QP built from that active set, which yields the vector-Jacobian product
//! without forming the full KKT Jacobian.

pub mod backward;
pub mod bench;
pub mod error;
pub mod layers;
pub mod linalg;
pub mod portfolio;
pub mod problem_gen;
pub mod qp;

pub use error::{Error, Result};
