use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, DenseMatrix};

pub const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioMetrics {
    pub ic: f64,
    pub icir: f64,
    pub ann_ret: f64,
    pub sharpe: f64,
    pub regret: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
fn std(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Pearson correlation across assets.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let da: Vec<f64> = a.iter().map(|x| x - ma).collect();
    let db: Vec<f64> = b.iter().map(|x| x - mb).collect();
    let denom = (dot(&da, &da) * dot(&db, &db)).sqrt();
    if denom == 0.0 {
        return Err(Error::DegenerateSeries("constant cross-section in correlation"));
    }
    Ok(dot(&da, &db) / denom)
}

/// Daily returns of holding `weights[t]` on day `t`.
pub fn portfolio_returns(weights: &DenseMatrix, realized: &DenseMatrix) -> Vec<f64> {
    (0..weights.rows()).map(|t| dot(weights.row(t), realized.row(t))).collect()
}

/// IC, ICIR, annualized return, Sharpe ratio and mean regret of a test
/// period. `predictions`, `weights` and `realized` are aligned `T × d`
/// matrices; `regrets` are the per-decision regret terms. No transaction
/// costs.
pub fn portfolio_metrics(
    predictions: &DenseMatrix,
    weights: &DenseMatrix,
    realized: &DenseMatrix,
    regrets: &[f64],
) -> Result<PortfolioMetrics> {
    let t = realized.rows();
    if predictions.rows() != t || weights.rows() != t || t == 0 {
        return Err(Error::DimensionMismatch("metric series are not aligned".into()));
    }
    let ics = (0..t)
        .map(|r| pearson(predictions.row(r), realized.row(r)))
        .collect::<Result<Vec<_>>>()?;
    let ic = mean(&ics);
    let ic_std = std(&ics);
    if ic_std == 0.0 {
        return Err(Error::DegenerateSeries("IC has zero dispersion"));
    }
    let daily = portfolio_returns(weights, realized);
    let ann_ret = mean(&daily) * TRADING_DAYS;
    let ann_vol = std(&daily) * TRADING_DAYS.sqrt();
    if ann_vol == 0.0 {
        return Err(Error::DegenerateSeries("portfolio returns have zero volatility"));
    }
    Ok(PortfolioMetrics {
        ic,
        icir: ic / ic_std,
        ann_ret,
        sharpe: ann_ret / ann_vol,
        regret: if regrets.is_empty() { f64::NAN } else { mean(regrets) },
    })
}
