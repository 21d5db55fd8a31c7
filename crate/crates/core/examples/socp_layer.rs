//! Robust LP layer `minimize qᵀz s.t. ‖z‖ ≤ b₁`, checked against central
//! differences.

use bpqp::bench::socp_finite_difference_audit;
use bpqp::layers::{exact_socp_oracle, socp_layer_backward, socp_layer_forward};
use bpqp::problem_gen::{gen_socp, Dims, Family, GenSpec};
use bpqp::qp::SolverSettings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = SolverSettings::default();
    let spec = gen_socp(&GenSpec::new(Family::Socp, Dims::new(100, 0, 0), 7), 0)?;
    let (z, lambda, tape) = socp_layer_forward(&spec, &settings)?;
    println!("b₁ = {:.4}, ‖z★‖ = {:.4}, λ★ = {:.4}", spec.b[0], bpqp::linalg::norm2(&z), lambda[0]);

    let ones = vec![1.0; spec.dim()];
    let g = socp_layer_backward(&tape, &ones)?;
    let oracle = exact_socp_oracle(&tape, &ones)?;
    let cos = bpqp::backward::cosine_similarity(&g.dq, &oracle.dq)?;
    println!("dL/db₁ = {:.6} (oracle {:.6})", g.db[0], oracle.db[0]);
    println!("cosine similarity of dq with the dense oracle: {cos:.12}");
    let fd = socp_finite_difference_audit(&spec, &ones, 1e-6, &settings)?;
    println!("relative error of dq against central differences: {fd:.2e}");
    Ok(())
}
