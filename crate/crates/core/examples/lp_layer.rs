//! Smoothed LP layer: minimize θᵀz + ε‖z‖² over the box 0 ≤ z ≤ 1.

use bpqp::layers::{lp_layer_backward, lp_layer_forward, LpLayerSpec};
use bpqp::linalg::DenseMatrix;
use bpqp::qp::SolverSettings;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = DenseMatrix::from_rows(
        &[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![-1.0, 0.0],
            vec![0.0, -1.0],
        ],
        2,
    )?;
    let h = vec![1.0, 1.0, 0.0, 0.0];
    let settings = SolverSettings::default();

    for theta in [vec![1.0, 1.0], vec![-1.0, 1.0]] {
        let spec = LpLayerSpec::new(theta.clone(), 1e-6, DenseMatrix::zeros(0, 2), vec![], g.clone(), h.clone())?;
        let (z, tape) = lp_layer_forward(&spec, &settings)?;
        let dtheta = lp_layer_backward(&tape, &[1.0, 1.0])?;
        println!("θ = {theta:?}: z★ = {z:?}, dL/dθ = {dtheta:?}");
    }

    // Without binding constraints the smoothing term decides the gradient:
    // z★ = −θ/(2ε), so dL/dθ = −dL/dz / (2ε).
    let spec = LpLayerSpec::new(vec![-0.2, -0.1], 0.5, DenseMatrix::zeros(0, 2), vec![], g, h)?;
    let (z, tape) = lp_layer_forward(&spec, &settings)?;
    println!("interior z★ = {z:?}, dL/dθ = {:?}", lp_layer_backward(&tape, &[1.0, 0.0])?);
    Ok(())
}
