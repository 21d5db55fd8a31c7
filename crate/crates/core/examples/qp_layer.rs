//! Forward and backward pass through a small QP layer.
//!
//! minimize ½ zᵀPz + qᵀz  s.t.  z₁ + z₂ = 1, z ≥ 0

use bpqp::layers::{qp_layer_backward, qp_layer_forward};
use bpqp::linalg::DenseMatrix;
use bpqp::qp::{QpProblem, SolverSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let problem = QpProblem::new(
        DenseMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]], 2)?,
        vec![0.1, -0.1],
        DenseMatrix::from_rows(&[vec![1.0, 1.0]], 2)?,
        vec![1.0],
        DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, -1.0]], 2)?,
        vec![0.0, 0.0],
    )?;

    let (z, tape) = qp_layer_forward(&problem, &SolverSettings::default())?;
    let sol = tape.solution();
    println!("z★ = {z:?}");
    println!("ν★ = {:?}, λ★ = {:?}", sol.nu_star, sol.lambda_star);
    println!("active inequalities: {:?}", tape.active_set().indices);

    // L = z₁, so dL/dz★ = (1, 0)
    let grads = qp_layer_backward(&tape, &[1.0, 0.0])?;
    println!("dL/dq = {:?}", grads.dq);
    println!("dL/db = {:?}", grads.db);
    println!("dL/dc = {:?}", grads.dc);
    println!("dL/dP = {:?}", grads.dp.to_rows());
    println!("KKT residual at z★: {:.2e}", grads.kkt_residual_norm.unwrap_or(f64::NAN));
    Ok(())
}
