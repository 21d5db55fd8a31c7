//! Timing and accuracy sweeps over generated problem families.
//!
//! Every instance is solved once per method. Forward and backward passes are
//! timed separately with a monotonic clock; problem generation stays outside
//! the timed sections. Accuracy is the cosine similarity of `dq` (or `dθ`)
//! against the dense oracle, using `L = 1ᵀz★` as the loss.

mod fd;
mod report;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use fd::{finite_difference_audit, relative_error, socp_finite_difference_audit, DEFAULT_FD_STEP};
pub use report::{emit_report, read_csv, write_csv, write_json, ReportFormat, ReportRecord, CSV_HEADER};

use crate::backward::{cosine_similarity, exact_backward_oracle};
use crate::error::{Error, Result};
use crate::layers::{exact_socp_oracle, qp_layer_backward, qp_layer_forward, socp_layer_backward, socp_layer_forward};
use crate::problem_gen::{gen_lp, gen_qp, gen_socp, Dims, Family, GenSpec};
use crate::qp::{QpProblem, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Backward pass as an equality-constrained QP.
    Bpqp,
    /// Dense solve of the full implicit-differentiation system.
    Exact,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bpqp => "BPQP",
            Method::Exact => "Exact",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bpqp" => Ok(Method::Bpqp),
            "exact" => Ok(Method::Exact),
            other => Err(Error::InvalidProblem(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub dims: Vec<Dims>,
    pub runs: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub settings: SolverSettings,
    /// Instances per cell that get a finite-difference audit.
    pub fd_instances: usize,
    /// Cells with more variables than this skip the audit.
    pub fd_max_dim: usize,
    pub fd_step: f64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            families: vec![Family::Qp],
            dims: vec![Dims::new(10, 5, 5)],
            runs: 200,
            methods: vec![Method::Bpqp, Method::Exact],
            seed: 0,
            settings: SolverSettings::simulation(),
            fd_instances: 5,
            fd_max_dim: 100,
            fd_step: DEFAULT_FD_STEP,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidProblem("runs must be at least 1".into()));
        }
        if self.families.is_empty() || self.dims.is_empty() || self.methods.is_empty() {
            return Err(Error::InvalidProblem("families, dims and methods must be non-empty".into()));
        }
        self.settings.validate()
    }
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// NaN for an empty sample; zero spread for a single value.
    pub fn of(xs: &[f64]) -> Stat {
        if xs.is_empty() {
            return Stat {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let std = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: Family,
    pub dims: Dims,
    pub method: Method,
    pub fwd_time_s: Stat,
    pub bwd_time_s: Stat,
    pub total_time_s: Stat,
    /// Against the exact oracle; instances whose gradient vanishes
    /// identically are left out since the angle is undefined there.
    pub cos_sim: Stat,
    /// Mean over audited instances, NaN when none were audited.
    pub fd_rel_err: f64,
    pub failures: usize,
}

/// Per-instance accuracy and timing of the BPQP backward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub instance_id: u64,
    /// `None` when the gradient vanishes identically.
    pub cos_sim_dq: Option<f64>,
    /// `None` when the instance was not audited or the active set flipped.
    pub fd_rel_err: Option<f64>,
    pub backward_time_s: f64,
}

/// What one method produced on one instance.
struct Sample {
    fwd: f64,
    bwd: f64,
    dq: Vec<f64>,
}

enum Instance {
    Qp(QpProblem),
    Socp(crate::layers::SocpLayerSpec),
}

fn instance(spec: &GenSpec, k: u64) -> Result<Instance> {
    Ok(match spec.family {
        Family::Qp => Instance::Qp(gen_qp(spec, k)?),
        Family::Lp => Instance::Qp(gen_lp(spec, k)?.lower()?),
        Family::Socp => Instance::Socp(gen_socp(spec, k)?),
    })
}

fn run_method(inst: &Instance, method: Method, settings: &SolverSettings) -> Result<Sample> {
    match inst {
        Instance::Qp(problem) => {
            let ones = vec![1.0; problem.dim()];
            let t = Instant::now();
            let (_, tape) = qp_layer_forward(problem, settings)?;
            let fwd = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let dq = match method {
                Method::Bpqp => qp_layer_backward(&tape, &ones)?.dq,
                Method::Exact => exact_backward_oracle(tape.problem(), tape.solution(), &ones)?.dq,
            };
            let bwd = t.elapsed().as_secs_f64();
            Ok(Sample { fwd, bwd, dq })
        }
        Instance::Socp(spec) => {
            let ones = vec![1.0; spec.dim()];
            let t = Instant::now();
            let (_, _, tape) = socp_layer_forward(spec, settings)?;
            let fwd = t.elapsed().as_secs_f64();
            let t = Instant::now();
            let dq = match method {
                Method::Bpqp => socp_layer_backward(&tape, &ones)?.dq,
                Method::Exact => exact_socp_oracle(&tape, &ones)?.dq,
            };
            let bwd = t.elapsed().as_secs_f64();
            Ok(Sample { fwd, bwd, dq })
        }
    }
}

/// Reference gradient, recomputed so it never depends on method order.
fn oracle_dq(inst: &Instance, settings: &SolverSettings) -> Result<Vec<f64>> {
    Ok(run_method(inst, Method::Exact, settings)?.dq)
}

fn fd_audit(inst: &Instance, cfg: &BenchConfig) -> Result<f64> {
    match inst {
        Instance::Qp(p) => finite_difference_audit(p, &vec![1.0; p.dim()], cfg.fd_step, &cfg.settings),
        Instance::Socp(s) => socp_finite_difference_audit(s, &vec![1.0; s.dim()], cfg.fd_step, &cfg.settings),
    }
}

/// Cosine similarity, or `None` when either side is exactly zero (a fully
/// determined vertex, where the Jacobian itself is zero).
pub fn gradient_similarity(dq: &[f64], reference: &[f64]) -> Result<Option<f64>> {
    match cosine_similarity(dq, reference) {
        Ok(c) => Ok(Some(c)),
        Err(Error::ZeroVector) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Everything measured in one (family, dims) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub rows: Vec<BenchRow>,
    /// BPQP per-instance records.
    pub comparisons: Vec<ComparisonRow>,
}

pub fn run_cell(cfg: &BenchConfig, family: Family, dims: Dims) -> Result<CellResult> {
    cfg.validate()?;
    let spec = GenSpec::new(family, dims, cfg.seed);
    let audit = dims.d <= cfg.fd_max_dim;

    // warm-up, untimed
    if let Ok(inst) = instance(&spec, 0) {
        for &m in &cfg.methods {
            let _ = run_method(&inst, m, &cfg.settings);
        }
    }

    let mut per_method: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, usize)> =
        cfg.methods.iter().map(|_| (vec![], vec![], vec![], vec![], 0)).collect();
    let mut fd_errors = Vec::new();
    let mut comparisons = Vec::new();

    for k in 0..cfg.runs as u64 {
        let inst = instance(&spec, k)?;
        let fd = if audit && (k as usize) < cfg.fd_instances {
            fd_audit(&inst, cfg).ok()
        } else {
            None
        };
        if let Some(e) = fd {
            fd_errors.push(e);
        }
        let samples: Vec<Option<Sample>> =
            cfg.methods.iter().map(|&m| run_method(&inst, m, &cfg.settings).ok()).collect();
        let exact = cfg.methods.iter().position(|&m| m == Method::Exact);
        let reference = match exact {
            Some(i) => samples[i].as_ref().map(|s| s.dq.clone()),
            None => oracle_dq(&inst, &cfg.settings).ok(),
        };
        for ((slot, &method), sample) in per_method.iter_mut().zip(&cfg.methods).zip(samples) {
            let (fwd, bwd, total, cos, failures) = slot;
            let (Some(sample), Some(reference)) = (sample, reference.as_deref()) else {
                *failures += 1;
                continue;
            };
            let sim = gradient_similarity(&sample.dq, reference)?;
            fwd.push(sample.fwd);
            bwd.push(sample.bwd);
            total.push(sample.fwd + sample.bwd);
            cos.extend(sim);
            if method == Method::Bpqp {
                comparisons.push(ComparisonRow {
                    instance_id: k,
                    cos_sim_dq: sim,
                    fd_rel_err: fd,
                    backward_time_s: sample.bwd,
                });
            }
        }
    }

    let fd_rel_err = if fd_errors.is_empty() {
        f64::NAN
    } else {
        fd_errors.iter().sum::<f64>() / fd_errors.len() as f64
    };
    let rows = cfg
        .methods
        .iter()
        .zip(per_method)
        .map(|(&method, (fwd, bwd, total, cos, failures))| BenchRow {
            family,
            dims,
            method,
            fwd_time_s: Stat::of(&fwd),
            bwd_time_s: Stat::of(&bwd),
            total_time_s: Stat::of(&total),
            cos_sim: Stat::of(&cos),
            fd_rel_err,
            failures,
        })
        .collect();
    Ok(CellResult { rows, comparisons })
}

/// Runs every (family, dims) cell in order. Per-instance failures are
/// counted, never fatal.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    Ok(run_cells(cfg, false)?.into_iter().flat_map(|c| c.rows).collect())
}

/// Like [`run_benchmark`] but keeps per-instance records. With `parallel`,
/// cells run on separate threads; timings then compete for cores and are
/// not comparable across cells. Output order is the same either way.
pub fn run_cells(cfg: &BenchConfig, parallel: bool) -> Result<Vec<CellResult>> {
    cfg.validate()?;
    let cells: Vec<(Family, Dims)> = cfg
        .families
        .iter()
        .flat_map(|&f| cfg.dims.iter().map(move |&d| (f, d)))
        .collect();
    if !parallel {
        return cells.into_iter().map(|(f, d)| run_cell(cfg, f, d)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = cells
            .iter()
            .map(|&(f, d)| scope.spawn(move || run_cell(cfg, f, d)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("benchmark cell panicked"))
            .collect()
    })
}

/// A cell failed when some instance could not be solved or differentiated.
pub fn has_failures(rows: &[BenchRow]) -> bool {
    rows.iter().any(|r| r.failures > 0)
}
