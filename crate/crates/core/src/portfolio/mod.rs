//! Predict-then-optimize on a synthetic return panel.
//!
//! A linear predictor maps asset features to expected returns, which feed a
//! long-only mean-variance allocation. The predictor is trained either on
//! the realized decision quality (regret) through the allocation layer, or
//! on squared prediction error alone.

mod metrics;
mod mvo;
mod panel;
mod risk;
mod train;

pub use metrics::{pearson, portfolio_metrics, portfolio_returns, PortfolioMetrics, TRADING_DAYS};
pub use mvo::{mvo_backward, mvo_forward, regret_prediction_loss, MvoSpec, RegretLoss};
pub use panel::{synthetic_panel, ReturnsPanel, SyntheticConfig};
pub use risk::{
    eigenvalues_desc, sample_covariance, statistical_risk_model, DEFAULT_RISK_FACTORS, DEFAULT_RISK_WINDOW,
};
pub use train::{backtest, risk_spec, train_e2e, Adam, EpochLog, LinearPredictor, Mode, TrainConfig, TrainReport};
