use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{qp_layer_backward, qp_layer_forward, LayerTape};
use crate::linalg::{dot, DenseMatrix};
use crate::qp::{QpProblem, SolverSettings};

/// Long-only, fully invested mean-variance allocation
/// `maximize μᵀw − (γ/2) wᵀΣw  s.t.  1ᵀw = 1, w ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvoSpec {
    pub gamma: f64,
    pub sigma: DenseMatrix,
}

impl MvoSpec {
    pub fn new(gamma: f64, sigma: DenseMatrix) -> Result<Self> {
        let spec = MvoSpec { gamma, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidProblem(format!("risk aversion must be positive, got {}", self.gamma)));
        }
        if !self.sigma.is_square() || !self.sigma.is_symmetric() {
            return Err(Error::InvalidProblem("covariance must be square and symmetric".into()));
        }
        Ok(())
    }

    pub fn assets(&self) -> usize {
        self.sigma.rows()
    }

    /// `P = γΣ, q = −μ, A = 1ᵀ, b = 1, G = −I, c = 0`.
    pub fn lower(&self, mu: &[f64]) -> Result<QpProblem> {
        let d = self.assets();
        if mu.len() != d {
            return Err(Error::DimensionMismatch(format!("{} expected returns for {d} assets", mu.len())));
        }
        let mut p = self.sigma.clone();
        p.scale(self.gamma);
        let mut g = DenseMatrix::identity(d);
        g.scale(-1.0);
        QpProblem::new(
            p,
            mu.iter().map(|m| -m).collect(),
            DenseMatrix::from_row_major(1, d, vec![1.0; d])?,
            vec![1.0],
            g,
            vec![0.0; d],
        )
    }

    /// `f_y(w) = yᵀw − (γ/2) wᵀΣw`.
    pub fn objective(&self, y: &[f64], w: &[f64]) -> f64 {
        dot(y, w) - 0.5 * self.gamma * dot(w, &self.sigma.matvec(w))
    }

    /// `∇_w f_y(w) = y − γΣw`.
    pub fn objective_gradient(&self, y: &[f64], w: &[f64]) -> Vec<f64> {
        self.sigma.matvec(w).iter().zip(y).map(|(sw, yi)| yi - self.gamma * sw).collect()
    }
}

pub fn mvo_forward(mu_hat: &[f64], spec: &MvoSpec, settings: &SolverSettings) -> Result<(Vec<f64>, LayerTape)> {
    qp_layer_forward(&spec.lower(mu_hat)?, settings)
}

/// Gradient with respect to `μ̂`; the sign flips because `q = −μ̂`.
pub fn mvo_backward(tape: &LayerTape, dl_dw: &[f64]) -> Result<Vec<f64>> {
    Ok(qp_layer_backward(tape, dl_dw)?.dq.iter().map(|v| -v).collect())
}

/// Terms of the training loss for one day.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretLoss {
    pub loss: f64,
    /// `(f_y(ŵ) − f_y(w_y))²`.
    pub regret: f64,
    /// `‖y − μ̂‖²`.
    pub prediction: f64,
    pub dloss_dmu_hat: Vec<f64>,
    pub weights: Vec<f64>,
}

/// `(f_y(w★(μ̂)) − f_y(w★(y)))² + β‖y − μ̂‖²`. Pass `w_y` when the
/// hindsight allocation is already known to skip its solve.
pub fn regret_prediction_loss(
    mu_hat: &[f64],
    y: &[f64],
    spec: &MvoSpec,
    beta: f64,
    settings: &SolverSettings,
    w_y: Option<&[f64]>,
) -> Result<RegretLoss> {
    if mu_hat.len() != y.len() {
        return Err(Error::DimensionMismatch("prediction and realized returns differ in length".into()));
    }
    let (w_hat, tape) = mvo_forward(mu_hat, spec, settings)?;
    let hindsight;
    let w_y = match w_y {
        Some(w) => w,
        None => {
            hindsight = mvo_forward(y, spec, settings)?.0;
            &hindsight
        }
    };
    let gap = spec.objective(y, &w_hat) - spec.objective(y, w_y);
    let regret = gap * gap;
    let dl_dw: Vec<f64> = spec.objective_gradient(y, &w_hat).iter().map(|g| 2.0 * gap * g).collect();
    let mut grad = if gap == 0.0 {
        vec![0.0; y.len()]
    } else {
        mvo_backward(&tape, &dl_dw)?
    };
    let mut prediction = 0.0;
    for ((g, m), yi) in grad.iter_mut().zip(mu_hat).zip(y) {
        let r = yi - m;
        prediction += r * r;
        *g -= 2.0 * beta * r;
    }
    Ok(RegretLoss {
        loss: regret + beta * prediction,
        regret,
        prediction,
        dloss_dmu_hat: grad,
        weights: w_hat,
    })
}
