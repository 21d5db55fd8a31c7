use crate::error::{Error, Result};
use crate::layers::{qp_layer_backward, qp_layer_forward, socp_layer_backward, socp_layer_forward, SocpLayerSpec};
use crate::linalg::{dot, norm2, sub};
use crate::qp::{QpProblem, SolverSettings};

pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// `‖fd − g‖ / ‖fd‖`, falling back to the larger norm when `fd` vanishes.
pub fn relative_error(fd: &[f64], g: &[f64]) -> f64 {
    let scale = norm2(fd).max(norm2(g));
    if scale == 0.0 {
        return 0.0;
    }
    let denom = if norm2(fd) > 0.0 { norm2(fd) } else { scale };
    norm2(&sub(fd, g)) / denom
}

/// Central differences of `L = dl_dzᵀ z★(q)` over every coordinate of `q`,
/// compared with the backward-pass `dq`. Returns the relative L2 error.
///
/// Each perturbed solve must keep the base active set; otherwise the
/// function is not differentiable along that coordinate at this step size
/// and [`Error::ActiveSetFlip`] is returned.
pub fn finite_difference_audit(problem: &QpProblem, dl_dz: &[f64], h: f64, settings: &SolverSettings) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidProblem(format!("finite-difference step must be positive, got {h}")));
    }
    let (_, tape) = qp_layer_forward(problem, settings)?;
    let dq = qp_layer_backward(&tape, dl_dz)?.dq;
    let base = &tape.active_set().indices;

    let mut fd = vec![0.0; problem.dim()];
    let mut shifted = problem.clone();
    for (j, slot) in fd.iter_mut().enumerate() {
        let mut loss = [0.0; 2];
        for (k, sign) in [1.0, -1.0].into_iter().enumerate() {
            shifted.q[j] = problem.q[j] + sign * h;
            let (z, t) = qp_layer_forward(&shifted, settings)?;
            if &t.active_set().indices != base {
                return Err(Error::ActiveSetFlip { coordinate: j });
            }
            loss[k] = dot(dl_dz, &z);
        }
        shifted.q[j] = problem.q[j];
        *slot = (loss[0] - loss[1]) / (2.0 * h);
    }
    Ok(relative_error(&fd, &dq))
}

/// The same audit for the closed-form SOCP layer.
pub fn socp_finite_difference_audit(
    spec: &SocpLayerSpec,
    dl_dz: &[f64],
    h: f64,
    settings: &SolverSettings,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidProblem(format!("finite-difference step must be positive, got {h}")));
    }
    let (_, _, tape) = socp_layer_forward(spec, settings)?;
    let dq = socp_layer_backward(&tape, dl_dz)?.dq;
    let mut shifted = spec.clone();
    let mut fd = vec![0.0; spec.dim()];
    for (j, slot) in fd.iter_mut().enumerate() {
        shifted.q[j] = spec.q[j] + h;
        let plus = dot(dl_dz, &socp_layer_forward(&shifted, settings)?.0);
        shifted.q[j] = spec.q[j] - h;
        let minus = dot(dl_dz, &socp_layer_forward(&shifted, settings)?.0);
        shifted.q[j] = spec.q[j];
        *slot = (plus - minus) / (2.0 * h);
    }
    Ok(relative_error(&fd, &dq))
}
