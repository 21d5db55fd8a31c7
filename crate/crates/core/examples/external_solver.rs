//! Differentiating through a solution computed elsewhere.
//!
//! Any solver can produce the forward optimum; the backward pass only needs
//! the primal-dual point. Here a long, unpolished ADMM run at tight
//! tolerances plays the role of the external solver.

use bpqp::backward::cosine_similarity;
use bpqp::layers::{attach_external_solution, qp_layer_backward, qp_layer_forward};
use bpqp::problem_gen::{gen_qp, Dims, Family, GenSpec};
use bpqp::qp::{admm_solve, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 3);
    let external = SolverSettings {
        eps_abs: 1e-9,
        eps_rel: 1e-9,
        max_iter: 200_000,
        polish: false,
        ..SolverSettings::default()
    };
    for k in 0..5 {
        let problem = gen_qp(&spec, k)?;
        let (_, tape) = qp_layer_forward(&problem, &SolverSettings::default())?;
        let ones = vec![1.0; problem.dim()];
        let integrated = qp_layer_backward(&tape, &ones)?;

        let sol = admm_solve(&problem, &external)?;
        let attached = attach_external_solution(&problem, &sol.z_star, &sol.nu_star, &sol.lambda_star)?;
        let decoupled = qp_layer_backward(&attached, &ones)?;
        match cosine_similarity(&integrated.dq, &decoupled.dq) {
            Ok(c) => println!("instance {k}: cosine similarity {c:.10}"),
            Err(_) => println!("instance {k}: gradient vanishes (vertex solution)"),
        }
    }

    // a point that is not optimal is rejected
    let problem = gen_qp(&spec, 0)?;
    let sol = admm_solve(&problem, &SolverSettings::default())?;
    let mut z = sol.z_star.clone();
    z[0] += 1e-2;
    if let Err(e) = attach_external_solution(&problem, &z, &sol.nu_star, &sol.lambda_star) {
        println!("perturbed solution rejected: {e}");
    }
    Ok(())
}
