use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Daily features and next-period returns for a fixed asset universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsPanel {
    pub timestamps: Vec<u32>,
    pub assets: usize,
    pub n_features: usize,
    /// `T × d × F`, row-major.
    features: Vec<f64>,
    /// `T × d`.
    pub realized_returns: DenseMatrix,
}

impl ReturnsPanel {
    pub fn new(timestamps: Vec<u32>, n_features: usize, features: Vec<f64>, realized_returns: DenseMatrix) -> Result<Self> {
        let (t, d) = (realized_returns.rows(), realized_returns.cols());
        if timestamps.len() != t || features.len() != t * d * n_features {
            return Err(Error::DimensionMismatch(format!(
                "panel with {t} days and {d} assets needs {} timestamps and {} feature values",
                t,
                t * d * n_features
            )));
        }
        if features.iter().chain(realized_returns.as_slice()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("panel contains missing or non-finite values".into()));
        }
        if timestamps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProblem("timestamps must be strictly increasing".into()));
        }
        Ok(ReturnsPanel {
            timestamps,
            assets: d,
            n_features,
            features,
            realized_returns,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Features of asset `i` on day `t`.
    pub fn feature(&self, t: usize, i: usize) -> &[f64] {
        let f = self.n_features;
        let start = (t * self.assets + i) * f;
        &self.features[start..start + f]
    }

    pub fn returns(&self, t: usize) -> &[f64] {
        self.realized_returns.row(t)
    }

    /// Rows `range` of the return matrix.
    pub fn returns_window(&self, range: std::ops::Range<usize>) -> DenseMatrix {
        let idx: Vec<usize> = range.collect();
        self.realized_returns.select_rows(&idx)
    }
}

/// Parameters of the planted-signal generator.
///
/// Each feature is `m_t + s_{t,i,k}`: a market-wide signal plus an
/// asset-specific one. Returns are
/// `vol · (market_loading · m_t + √snr · u_{t,i} + √(1 − snr) · e_{t,i})`
/// where `u = Σ_k b_k s_k / ‖b‖` is the asset-specific signal and `e` is
/// unit-variance noise with a factor structure. The market term moves every
/// asset alike, so it cannot change a fully invested allocation, yet a
/// shared linear map cannot weight it apart from `u`: fitting returns and
/// ranking assets pull the coefficients in different directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub assets: usize,
    pub days: usize,
    /// Share of the asset-specific return variance explained by features.
    pub snr: f64,
    /// Scale of the market component relative to the asset-specific part.
    pub market_loading: f64,
    pub signal_loadings: Vec<f64>,
    pub risk_factors: usize,
    pub volatility: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            assets: 20,
            days: 600,
            snr: 0.3,
            market_loading: 1.0,
            signal_loadings: vec![0.4, -0.3, 0.2],
            risk_factors: 3,
            volatility: 1.0,
            seed: 0,
        }
    }
}

/// Parses `d=20,T=600,snr=0.3`; unspecified keys keep their defaults.
impl FromStr for SyntheticConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cfg = SyntheticConfig::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidProblem(format!("expected key=value, got `{part}`")))?;
            let bad = || Error::InvalidProblem(format!("bad value for `{key}`: `{value}`"));
            match key.trim() {
                "d" => cfg.assets = value.parse().map_err(|_| bad())?,
                "T" | "t" => cfg.days = value.parse().map_err(|_| bad())?,
                "snr" => cfg.snr = value.parse().map_err(|_| bad())?,
                "vol" => cfg.volatility = value.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = value.parse().map_err(|_| bad())?,
                other => return Err(Error::InvalidProblem(format!("unknown synthetic panel key `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.assets < 2 || self.days < 2 || self.signal_loadings.is_empty() {
            return Err(Error::InvalidProblem("panel needs at least 2 assets, 2 days and 1 feature".into()));
        }
        if !(self.snr >= 0.0 && self.snr < 1.0) || !(self.volatility > 0.0) {
            return Err(Error::InvalidProblem(format!(
                "snr must lie in [0, 1) and volatility be positive, got {} and {}",
                self.snr, self.volatility
            )));
        }
        Ok(())
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn synthetic_panel(cfg: &SyntheticConfig) -> Result<ReturnsPanel> {
    cfg.validate()?;
    let (t_len, d, f) = (cfg.days, cfg.assets, cfg.signal_loadings.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let loadings: Vec<f64> = (0..d * cfg.risk_factors).map(|_| normal(&mut rng)).collect();
    let b_norm = cfg.signal_loadings.iter().map(|b| b * b).sum::<f64>().sqrt();
    let noise_var = 1.0 + loadings.iter().map(|l| l * l).sum::<f64>() / d as f64;
    let signal_scale = if b_norm > 0.0 { cfg.snr.sqrt() / b_norm } else { 0.0 };
    let noise_scale = ((1.0 - cfg.snr) / noise_var).sqrt();

    let mut features = Vec::with_capacity(t_len * d * f);
    let mut returns = Vec::with_capacity(t_len * d);
    for _ in 0..t_len {
        let market = normal(&mut rng);
        let factors: Vec<f64> = (0..cfg.risk_factors).map(|_| normal(&mut rng)).collect();
        for i in 0..d {
            let mut signal = 0.0;
            for b in &cfg.signal_loadings {
                let s = normal(&mut rng);
                features.push(market + s);
                signal += b * s;
            }
            let systematic: f64 = (0..cfg.risk_factors).map(|k| loadings[i * cfg.risk_factors + k] * factors[k]).sum();
            let noise = systematic + normal(&mut rng);
            let r = cfg.market_loading * market + signal_scale * signal + noise_scale * noise;
            returns.push(cfg.volatility * r);
        }
    }
    let realized = DenseMatrix::from_row_major(t_len, d, returns)?;
    ReturnsPanel::new((0..t_len as u32).collect(), f, features, realized)
}
