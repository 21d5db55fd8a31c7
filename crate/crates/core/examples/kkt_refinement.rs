//! Regularized KKT solve followed by iterative refinement.
//!
//! The ±δ diagonal shift makes the quasi-definite matrix factorizable with
//! 1×1 pivots; refinement then recovers the solution of the unshifted system.

use bpqp::linalg::{factor_and_solve, iterative_refinement, DenseMatrix, KktSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // min ½ z² − z... written as the KKT system [[1, 1], [1, 0]] t = (−1, 0)
    let system = KktSystem::assemble(
        &DenseMatrix::identity(1),
        &DenseMatrix::zeros(0, 1),
        &DenseMatrix::from_rows(&[vec![1.0]], 1)?,
        1e-6,
    )?;
    let rhs = [-1.0, 0.0];
    let shifted = factor_and_solve(&system, &rhs)?;
    println!("regularized solve: {shifted:?}");
    let refined = iterative_refinement(&system, &rhs, 10, 1e-12)?;
    println!(
        "refined in {} solves: {:?} (residual {:.1e})",
        refined.steps, refined.solution, refined.residual
    );
    Ok(())
}
