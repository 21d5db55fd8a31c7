//! Differentiable optimization layers.
//!
//! Each layer has a forward pass that returns the optimal decision together
//! with a tape, and a backward pass that maps `∂L/∂z★` to gradients with
//! respect to the layer parameters. The backward pass only reads the
//! problem data and the primal-dual optimum stored on the tape, so any
//! solver may produce the forward solution (see
//! [`attach_external_solution`]).

mod lp;
mod qp_layer;
mod socp;

pub use lp::{lp_layer_backward, lp_layer_forward, LpLayerSpec, DEFAULT_LP_EPS};
pub use qp_layer::{attach_external_solution, qp_layer_backward, qp_layer_forward, LayerTape};
pub use socp::{
    attach_external_socp_solution, exact_socp_oracle, socp_kkt_residual, socp_layer_backward, socp_layer_forward,
    SocpGradients, SocpLayerSpec, SocpTape,
};

/// Largest KKT residual accepted from an externally supplied solution.
pub const EXTERNAL_KKT_THRESHOLD: f64 = 1e-4;
