//! A small timing and accuracy sweep, written as CSV to stdout.

use bpqp::bench::{run_benchmark, write_csv, BenchConfig};
use bpqp::problem_gen::{Dims, Family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = BenchConfig {
        families: vec![Family::Qp, Family::Socp],
        dims: vec![Dims::new(10, 5, 5), Dims::new(50, 10, 10)],
        runs: 20,
        ..BenchConfig::default()
    };
    let rows = run_benchmark(&cfg)?;
    write_csv(&rows, std::io::stdout())?;
    Ok(())
}
