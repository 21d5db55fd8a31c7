use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{portfolio_metrics, PortfolioMetrics};
use super::mvo::{mvo_forward, regret_prediction_loss, MvoSpec};
use super::panel::ReturnsPanel;
use super::risk::{statistical_risk_model, DEFAULT_RISK_FACTORS, DEFAULT_RISK_WINDOW};
use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};
use crate::qp::SolverSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Regret plus prediction loss, differentiated through the allocation.
    E2e,
    /// Squared prediction error only; the allocation is applied afterwards.
    TwoStage,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::E2e => "e2e",
            Mode::TwoStage => "two-stage",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e2e" => Ok(Mode::E2e),
            "two-stage" | "two_stage" => Ok(Mode::TwoStage),
            other => Err(Error::InvalidProblem(format!("unknown training mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Weight of the prediction term in the e2e loss.
    pub beta: f64,
    /// Weight decay on the predictor coefficients.
    pub alpha_reg: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Days per gradient step.
    pub batch_days: usize,
    pub rebalance_every: usize,
    pub gamma: f64,
    pub risk_window: usize,
    pub risk_factors: usize,
    pub train_days: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::E2e,
            beta: 0.1,
            alpha_reg: 1e-4,
            epochs: 30,
            learning_rate: 0.02,
            batch_days: 20,
            rebalance_every: 5,
            gamma: 1.0,
            risk_window: DEFAULT_RISK_WINDOW,
            risk_factors: DEFAULT_RISK_FACTORS,
            train_days: 240,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidProblem(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if !(self.learning_rate > 0.0) || !(self.alpha_reg >= 0.0) || !(self.gamma > 0.0) {
            return Err(Error::InvalidProblem("learning rate and gamma must be positive, alpha_reg nonnegative".into()));
        }
        if self.batch_days == 0 || self.rebalance_every == 0 || self.train_days == 0 {
            return Err(Error::InvalidProblem("batch_days, rebalance_every and train_days must be positive".into()));
        }
        Ok(())
    }
}

/// `μ̂_{t,i} = θᵀx_{t,i} + b`, shared across assets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPredictor {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearPredictor {
    pub fn zeros(n_features: usize) -> Self {
        LinearPredictor {
            weights: vec![0.0; n_features],
            bias: 0.0,
        }
    }

    pub fn predict(&self, panel: &ReturnsPanel, t: usize) -> Vec<f64> {
        (0..panel.assets).map(|i| dot(&self.weights, panel.feature(t, i)) + self.bias).collect()
    }

    fn params(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let (w, b) = p.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias = b[0];
    }
}

/// Adam with the usual defaults (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.step);
        let c2 = 1.0 - Self::BETA2.powi(self.step);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::BETA1 * *m + (1.0 - Self::BETA1) * g;
            *v = Self::BETA2 * *v + (1.0 - Self::BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the untrained predictor.
    pub epoch: usize,
    /// Mean over training days of `‖y − μ̂‖²`.
    pub prediction_loss: f64,
    /// Mean over training days of the regret term.
    pub decision_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub mode: Mode,
    pub predictor: LinearPredictor,
    pub epochs: Vec<EpochLog>,
    pub test: PortfolioMetrics,
}

/// Day ranges: risk-model window, training period, test period.
struct Split {
    risk: std::ops::Range<usize>,
    train: std::ops::Range<usize>,
    test: std::ops::Range<usize>,
}

fn split(panel: &ReturnsPanel, cfg: &TrainConfig) -> Result<Split> {
    let needed = cfg.risk_window + cfg.train_days + 2 * cfg.rebalance_every;
    if panel.len() < needed {
        return Err(Error::InsufficientHistory {
            needed,
            got: panel.len(),
        });
    }
    let train_end = cfg.risk_window + cfg.train_days;
    Ok(Split {
        risk: 0..cfg.risk_window,
        train: cfg.risk_window..train_end,
        test: train_end..panel.len(),
    })
}

/// The allocation layer used throughout training and testing. `Σ` comes
/// from the risk window and stays fixed.
pub fn risk_spec(panel: &ReturnsPanel, cfg: &TrainConfig) -> Result<MvoSpec> {
    let s = split(panel, cfg)?;
    let sigma = statistical_risk_model(&panel.returns_window(s.risk), cfg.risk_factors)?;
    MvoSpec::new(cfg.gamma, sigma)
}

/// Loss of one day and its gradient with respect to `μ̂`.
fn day_loss(
    mode: Mode,
    mu: &[f64],
    y: &[f64],
    w_y: &[f64],
    spec: &MvoSpec,
    cfg: &TrainConfig,
    settings: &SolverSettings,
) -> Result<(f64, Vec<f64>)> {
    match mode {
        Mode::E2e => {
            let l = regret_prediction_loss(mu, y, spec, cfg.beta, settings, Some(w_y))?;
            Ok((l.loss, l.dloss_dmu_hat))
        }
        Mode::TwoStage => {
            let grad: Vec<f64> = mu.iter().zip(y).map(|(m, yi)| 2.0 * (m - yi)).collect();
            let loss = mu.iter().zip(y).map(|(m, yi)| (m - yi).powi(2)).sum();
            Ok((loss, grad))
        }
    }
}

fn evaluate(
    predictor: &LinearPredictor,
    panel: &ReturnsPanel,
    days: &[usize],
    hindsight: &[Vec<f64>],
    spec: &MvoSpec,
    settings: &SolverSettings,
) -> Result<(f64, f64)> {
    let (mut pred, mut dec) = (0.0, 0.0);
    for (k, &t) in days.iter().enumerate() {
        let mu = predictor.predict(panel, t);
        let y = panel.returns(t);
        pred += mu.iter().zip(y).map(|(m, yi)| (m - yi).powi(2)).sum::<f64>();
        let (w, _) = mvo_forward(&mu, spec, settings)?;
        dec += (spec.objective(y, &w) - spec.objective(y, &hindsight[k])).powi(2);
    }
    let n = days.len() as f64;
    Ok((pred / n, dec / n))
}

/// Trains a linear predictor on the training period and evaluates the
/// resulting allocations on the test period.
pub fn train_e2e(panel: &ReturnsPanel, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let settings = SolverSettings::portfolio();
    let s = split(panel, cfg)?;
    let spec = risk_spec(panel, cfg)?;
    let train_days: Vec<usize> = s.train.clone().collect();
    let hindsight = train_days
        .iter()
        .map(|&t| Ok(mvo_forward(panel.returns(t), &spec, &settings)?.0))
        .collect::<Result<Vec<_>>>()?;

    let mut predictor = LinearPredictor::zeros(panel.n_features);
    let mut params = predictor.params();
    let mut adam = Adam::new(params.len(), cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_days.len()).collect();

    let (p0, d0) = evaluate(&predictor, panel, &train_days, &hindsight, &spec, &settings)?;
    let mut epochs = vec![EpochLog {
        epoch: 0,
        prediction_loss: p0,
        decision_loss: d0,
    }];

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_days) {
            let mut grad = vec![0.0; params.len()];
            let mut batch_loss = 0.0;
            for &k in batch {
                let t = train_days[k];
                let mu = predictor.predict(panel, t);
                let (loss, dmu) = day_loss(cfg.mode, &mu, panel.returns(t), &hindsight[k], &spec, cfg, &settings)?;
                batch_loss += loss;
                for (i, g) in dmu.iter().enumerate() {
                    for (gj, xj) in grad.iter_mut().zip(panel.feature(t, i)) {
                        *gj += g * xj;
                    }
                    *grad.last_mut().expect("bias slot") += g;
                }
            }
            let n = batch.len() as f64;
            let f = panel.n_features;
            for (j, g) in grad.iter_mut().enumerate() {
                *g /= n;
                if j < f {
                    *g += 2.0 * cfg.alpha_reg * params[j];
                }
            }
            if !batch_loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            adam.update(&mut params, &grad);
            predictor.set_params(&params);
        }
        let (prediction_loss, decision_loss) = evaluate(&predictor, panel, &train_days, &hindsight, &spec, &settings)?;
        if !prediction_loss.is_finite() || !decision_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        epochs.push(EpochLog {
            epoch,
            prediction_loss,
            decision_loss,
        });
    }

    let test = backtest(&predictor, panel, s.test, &spec, cfg.rebalance_every, &settings)?;
    Ok(TrainReport {
        mode: cfg.mode,
        predictor,
        epochs,
        test,
    })
}

/// Rebalances every `every` days and holds the weights in between. Regret
/// scores the allocation implied by each day's prediction, whether or not
/// it is traded.
pub fn backtest(
    predictor: &LinearPredictor,
    panel: &ReturnsPanel,
    days: std::ops::Range<usize>,
    spec: &MvoSpec,
    every: usize,
    settings: &SolverSettings,
) -> Result<PortfolioMetrics> {
    let d = panel.assets;
    let n = days.len();
    let mut predictions = DenseMatrix::zeros(n, d);
    let mut weights = DenseMatrix::zeros(n, d);
    let mut regrets = Vec::new();
    let mut held = vec![1.0 / d as f64; d];
    for (r, t) in days.clone().enumerate() {
        let mu = predictor.predict(panel, t);
        let w = mvo_forward(&mu, spec, settings)?.0;
        let y = panel.returns(t);
        let w_y = mvo_forward(y, spec, settings)?.0;
        regrets.push((spec.objective(y, &w) - spec.objective(y, &w_y)).powi(2));
        if r % every == 0 {
            held = w;
        }
        predictions.row_mut(r).copy_from_slice(&mu);
        weights.row_mut(r).copy_from_slice(&held);
    }
    let idx: Vec<usize> = days.collect();
    portfolio_metrics(&predictions, &weights, &panel.realized_returns.select_rows(&idx), &regrets)
}
