use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bpqp::bench::{emit_report, has_failures, run_cells, BenchConfig, Method, ReportFormat};
use bpqp::portfolio::{synthetic_panel, train_e2e, Mode, SyntheticConfig, TrainConfig};
use bpqp::problem_gen::{write_batch, Dims, Family, GenSpec};
use bpqp::Error;

#[derive(Parser)]
#[command(name = "bpqp", version, about = "Differentiable QP layers: problem generation, benchmarks, portfolio demo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write seeded random problems as JSON files.
    Gen {
        #[arg(long)]
        family: Family,
        /// DxM (M equalities and M inequalities) or DxMxN.
        #[arg(long)]
        dims: Dims,
        #[arg(long, default_value_t = 200)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time forward and backward passes and check gradients against the dense oracle.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "qp")]
        family: Vec<Family>,
        #[arg(long, value_delimiter = ',', default_value = "10x5")]
        dims: Vec<Dims>,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, value_delimiter = ',', default_value = "bpqp,exact")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV, or JSON when the name ends in .json.
        #[arg(long)]
        out: PathBuf,
        /// Instances per cell that get a finite-difference audit.
        #[arg(long, default_value_t = 5)]
        fd_instances: usize,
        /// Per-instance BPQP records as JSON.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Run cells concurrently; timings become noisy.
        #[arg(long)]
        parallel: bool,
    },
    /// Train a predictor through a mean-variance layer on a synthetic panel.
    Portfolio {
        /// e.g. d=20,T=600,snr=0.3
        #[arg(long, default_value = "d=20,T=600,snr=0.3")]
        synthetic: SyntheticConfig,
        #[arg(long, default_value = "e2e")]
        mode: Mode,
        #[arg(long, default_value_t = 30)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Gen {
            family,
            dims,
            count,
            seed,
            out,
        } => {
            let written = write_batch(&GenSpec::new(family, dims, seed), count, &out)?;
            println!("wrote {} {family} problems to {}", written.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            family,
            dims,
            runs,
            methods,
            seed,
            out,
            fd_instances,
            instances,
            parallel,
        } => {
            let cfg = BenchConfig {
                families: family,
                dims,
                runs,
                methods,
                seed,
                fd_instances,
                ..BenchConfig::default()
            };
            let cells = run_cells(&cfg, parallel)?;
            let rows: Vec<_> = cells.iter().flat_map(|c| c.rows.clone()).collect();
            for r in &rows {
                println!(
                    "{:<5} {:<10} {:<6} fwd {:.3e}s  bwd {:.3e}s  cos {:.4}  failures {}",
                    r.family, r.dims, r.method, r.fwd_time_s.mean, r.bwd_time_s.mean, r.cos_sim.mean, r.failures
                );
            }
            emit_report(&rows, ReportFormat::from_path(&out), &out)?;
            if let Some(path) = instances {
                let records: Vec<_> = cells.iter().flat_map(|c| c.comparisons.clone()).collect();
                let json = serde_json::to_string_pretty(&records)?;
                std::fs::write(&path, json).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            }
            Ok(if has_failures(&rows) { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Portfolio {
            mut synthetic,
            mode,
            epochs,
            seed,
            out,
        } => {
            synthetic.seed = seed;
            let panel = synthetic_panel(&synthetic)?;
            let cfg = TrainConfig {
                mode,
                epochs,
                seed,
                ..TrainConfig::default()
            };
            let report = train_e2e(&panel, &cfg)?;
            let first = report.epochs.first().expect("initial epoch is logged");
            let last = report.epochs.last().expect("initial epoch is logged");
            println!(
                "{mode}: decision loss {:.4} -> {:.4}, test regret {:.4}, IC {:.3}, Sharpe {:.2}",
                first.decision_loss, last.decision_loss, report.test.regret, report.test.ic, report.test.sharpe
            );
            let json = serde_json::json!({ "panel": synthetic, "config": cfg, "report": report });
            std::fs::write(&out, serde_json::to_string_pretty(&json)?).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
