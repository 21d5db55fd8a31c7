use serde::{Deserialize, Serialize};

use super::qp_layer::{qp_layer_backward, qp_layer_forward, LayerTape};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::qp::{QpProblem, SolverSettings};

pub const DEFAULT_LP_EPS: f64 = 1e-6;

/// `minimize θᵀz + ε‖z‖²  s.t.  Az = b, Gz ≤ h`.
///
/// The quadratic term makes the optimum a differentiable function of `θ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLpSpec", into = "RawLpSpec")]
pub struct LpLayerSpec {
    pub theta: Vec<f64>,
    pub eps: f64,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub g: DenseMatrix,
    pub h: Vec<f64>,
}

impl LpLayerSpec {
    pub fn new(theta: Vec<f64>, eps: f64, a: DenseMatrix, b: Vec<f64>, g: DenseMatrix, h: Vec<f64>) -> Result<Self> {
        let spec = LpLayerSpec { theta, eps, a, b, g, h };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidProblem(format!("LP smoothing eps must be positive, got {}", self.eps)));
        }
        self.lower().map(|_| ())
    }

    /// The equivalent QP: `P = 2εI`, `q = θ`.
    pub fn lower(&self) -> Result<QpProblem> {
        let d = self.theta.len();
        let mut p = DenseMatrix::identity(d);
        p.scale(2.0 * self.eps);
        QpProblem::new(p, self.theta.clone(), self.a.clone(), self.b.clone(), self.g.clone(), self.h.clone())
    }
}

#[derive(Serialize, Deserialize)]
struct RawLpSpec {
    theta: Vec<f64>,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(rename = "A")]
    a: DenseMatrix,
    b: Vec<f64>,
    #[serde(rename = "G")]
    g: DenseMatrix,
    h: Vec<f64>,
}

fn default_eps() -> f64 {
    DEFAULT_LP_EPS
}

impl TryFrom<RawLpSpec> for LpLayerSpec {
    type Error = Error;

    fn try_from(raw: RawLpSpec) -> Result<Self> {
        let d = raw.theta.len();
        LpLayerSpec::new(raw.theta, raw.eps, raw.a.with_cols(d)?, raw.b, raw.g.with_cols(d)?, raw.h)
    }
}

impl From<LpLayerSpec> for RawLpSpec {
    fn from(s: LpLayerSpec) -> Self {
        RawLpSpec {
            theta: s.theta,
            eps: s.eps,
            a: s.a,
            b: s.b,
            g: s.g,
            h: s.h,
        }
    }
}

pub fn lp_layer_forward(spec: &LpLayerSpec, settings: &SolverSettings) -> Result<(Vec<f64>, LayerTape)> {
    qp_layer_forward(&spec.lower()?, settings)
}

/// Gradient with respect to `θ`.
pub fn lp_layer_backward(tape: &LayerTape, dl_dz: &[f64]) -> Result<Vec<f64>> {
    Ok(qp_layer_backward(tape, dl_dz)?.dq)
}
