//! Seeded problem generation. Instance k of a batch depends only on
//! (seed, k), so batches can be regenerated piecemeal.

use bpqp::problem_gen::{generate, Dims, Family, GenSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dims = Dims::new(3, 1, 2);
    for family in [Family::Qp, Family::Lp, Family::Socp] {
        let spec = GenSpec::new(family, dims, 42);
        println!("{family}: {}", serde_json::to_string(&generate(&spec, 0)?)?);
    }
    Ok(())
}
