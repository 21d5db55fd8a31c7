//! Backward-pass gradients against central finite differences and the
//! dense implicit-differentiation oracle on generated QPs.

use bpqp::backward::{complementarity_margin, cosine_similarity, exact_backward_oracle};
use bpqp::bench::{finite_difference_audit, DEFAULT_FD_STEP};
use bpqp::layers::{qp_layer_backward, qp_layer_forward};
use bpqp::problem_gen::{gen_qp, Dims, Family, GenSpec};
use bpqp::qp::SolverSettings;
use bpqp::Error;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let settings = SolverSettings::default();
    let spec = GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0);
    println!("{:>4} {:>10} {:>14} {:>12}", "k", "margin", "cos(oracle)", "fd rel err");
    for k in 0..10 {
        let problem = gen_qp(&spec, k)?;
        let (_, tape) = qp_layer_forward(&problem, &settings)?;
        let ones = vec![1.0; problem.dim()];
        let bpqp = qp_layer_backward(&tape, &ones)?;
        let oracle = exact_backward_oracle(&problem, tape.solution(), &ones)?;
        let cos = cosine_similarity(&bpqp.dq, &oracle.dq).map_or("undefined".to_string(), |c| format!("{c:.8}"));
        let margin = complementarity_margin(&problem, tape.solution(), tape.active_set());
        let fd = match finite_difference_audit(&problem, &ones, DEFAULT_FD_STEP, &settings) {
            Ok(e) => format!("{e:.2e}"),
            Err(Error::ActiveSetFlip { coordinate }) => format!("flip at {coordinate}"),
            Err(e) => return Err(e.into()),
        };
        println!("{k:>4} {margin:>10.2e} {cos:>14} {fd:>12}");
    }
    Ok(())
}
