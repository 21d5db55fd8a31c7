mod common;

use bpqp::layers::{
    attach_external_socp_solution, attach_external_solution, exact_socp_oracle, lp_layer_backward, lp_layer_forward,
    qp_layer_backward, qp_layer_forward, socp_layer_backward, socp_layer_forward, LpLayerSpec, SocpLayerSpec,
};
use bpqp::linalg::DenseMatrix;
use bpqp::problem_gen::{gen_qp, gen_socp, Dims, Family, GenSpec};
use bpqp::qp::{QpProblem, SolverSettings, Status};
use bpqp::Error;
use common::{cos, dot, enumerate_qp, gauss_solve, norm, oracle_margin, rel_err};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mat(rows: &[&[f64]]) -> DenseMatrix {
    let cols = rows.first().map_or(0, |r| r.len());
    DenseMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), cols).unwrap()
}

/// `0 ≤ z ≤ 1` as `G z ≤ h`.
fn unit_box(d: usize) -> (DenseMatrix, Vec<f64>) {
    let mut rows = Vec::new();
    for i in 0..d {
        let mut up = vec![0.0; d];
        up[i] = 1.0;
        let mut down = vec![0.0; d];
        down[i] = -1.0;
        rows.push(up);
        rows.push(down);
    }
    let h = (0..d).flat_map(|_| [1.0, 0.0]).collect();
    (DenseMatrix::from_rows(&rows, d).unwrap(), h)
}

fn box_lp(theta: Vec<f64>, eps: f64) -> LpLayerSpec {
    let d = theta.len();
    let (g, h) = unit_box(d);
    LpLayerSpec::new(theta, eps, DenseMatrix::zeros(0, d), vec![], g, h).unwrap()
}

/// Vertices of `{Az = b, Gz ≤ h}` by brute force over `d − m` active rows.
fn lp_vertices(spec: &LpLayerSpec) -> Vec<Vec<f64>> {
    let d = spec.theta.len();
    let (m, n) = (spec.a.rows(), spec.g.rows());
    let k = d - m;
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let mut rows: Vec<Vec<f64>> = (0..m).map(|r| spec.a.row(r).to_vec()).collect();
        rows.extend(pick.iter().map(|&i| spec.g.row(i).to_vec()));
        let mut rhs = spec.b.clone();
        rhs.extend(pick.iter().map(|&i| spec.h[i]));
        if let Some(z) = gauss_solve(rows, rhs) {
            if (0..n).all(|i| dot(spec.g.row(i), &z) <= spec.h[i] + 1e-9) {
                out.push(z);
            }
        }
        // next combination
        let mut i = k;
        while i > 0 && pick[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
}

/// Bounded LP in `d` variables: unit box, two random cuts and `m` random
/// equalities, all passing through or around the box centre.
fn random_bounded_lp(seed: u64, d: usize, m: usize) -> LpLayerSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = || rng.random_range(-1.0..1.0);
    let centre = vec![0.5; d];
    let theta: Vec<f64> = (0..d).map(|_| u()).collect();
    let a_rows: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| u()).collect()).collect();
    let (bx, mut h) = unit_box(d);
    let mut rows = bx.to_rows();
    for _ in 0..2 {
        let r: Vec<f64> = (0..d).map(|_| u()).collect();
        h.push(dot(&r, &centre) + 0.3);
        rows.push(r);
    }
    let b = a_rows.iter().map(|r| dot(r, &centre)).collect();
    LpLayerSpec::new(
        theta,
        1e-6,
        DenseMatrix::from_rows(&a_rows, d).unwrap(),
        b,
        DenseMatrix::from_rows(&rows, d).unwrap(),
        h,
    )
    .unwrap()
}

/// Closed-form SOCP optimum written independently of the library.
fn ball_optimum(q: &[f64], b: f64) -> Vec<f64> {
    let n = norm(q);
    q.iter().map(|v| -b * v / n).collect()
}

#[test]
fn qp_layer_reexposes_solver_fixtures() {
    let s = SolverSettings::default();
    let p = QpProblem::unconstrained(mat(&[&[1.0]]), vec![2.0]).unwrap();
    let (z, _) = qp_layer_forward(&p, &s).unwrap();
    assert!((z[0] + 2.0).abs() < 1e-8);
    let infeasible = QpProblem::new(
        mat(&[&[1.0]]),
        vec![0.0],
        DenseMatrix::zeros(0, 1),
        vec![],
        mat(&[&[1.0], &[-1.0]]),
        vec![-1.0, -1.0],
    )
    .unwrap();
    assert!(matches!(
        qp_layer_forward(&infeasible, &s),
        Err(Error::LayerForwardFailed(Status::PrimalInfeasible))
    ));
}

#[test]
fn qp_layer_backward_rejects_wrong_length() {
    let p = QpProblem::unconstrained(mat(&[&[1.0]]), vec![2.0]).unwrap();
    let (_, tape) = qp_layer_forward(&p, &SolverSettings::default()).unwrap();
    assert!(matches!(qp_layer_backward(&tape, &[1.0, 2.0]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn lp_box_examples() {
    let s = SolverSettings::default();
    let (z, _) = lp_layer_forward(&box_lp(vec![1.0, 1.0], 1e-6), &s).unwrap();
    assert!(z.iter().all(|v| v.abs() < 1e-6), "{z:?}");
    let (z, _) = lp_layer_forward(&box_lp(vec![-1.0, 1.0], 1e-6), &s).unwrap();
    assert!((z[0] - 1.0).abs() < 1e-6 && z[1].abs() < 1e-6, "{z:?}");
}

#[test]
fn lp_matches_vertex_enumeration() {
    let s = SolverSettings::default();
    for (d, m) in [(4, 1), (10, 5)] {
        for seed in 0..10 {
            let spec = random_bounded_lp(seed, d, m);
            let (z, _) = lp_layer_forward(&spec, &s).unwrap();
            let best = lp_vertices(&spec)
                .iter()
                .map(|v| dot(&spec.theta, v))
                .fold(f64::INFINITY, f64::min);
            let got = dot(&spec.theta, &z);
            assert!((got - best).abs() <= spec.eps * dot(&z, &z) + 1e-6, "{d}x{m} seed {seed}: {got} vs {best}");
        }
    }
}

#[test]
fn lp_backward_examples() {
    // interior optimum of θᵀz + 0.5‖z‖² is z = −θ, so dθ = −dL/dz
    let s = SolverSettings::default();
    let spec = LpLayerSpec::new(
        vec![0.1, -0.2],
        0.5,
        DenseMatrix::zeros(0, 2),
        vec![],
        unit_box(2).0,
        vec![1.0, 1.0, 1.0, 1.0],
    )
    .unwrap();
    let (z, tape) = lp_layer_forward(&spec, &s).unwrap();
    assert!((z[0] + 0.1).abs() < 1e-8 && (z[1] - 0.2).abs() < 1e-8, "{z:?}");
    let dtheta = lp_layer_backward(&tape, &[1.0, 0.0]).unwrap();
    assert!((dtheta[0] + 1.0).abs() < 1e-8 && dtheta[1].abs() < 1e-8, "{dtheta:?}");

    // corner of the box: two active rows in two variables
    let (z, tape) = lp_layer_forward(&box_lp(vec![-1.0, 1.0], 1e-6), &s).unwrap();
    assert!((z[0] - 1.0).abs() < 1e-6);
    assert_eq!(lp_layer_backward(&tape, &[1.0, 1.0]).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn lp_backward_matches_finite_differences() {
    // large smoothing keeps the optimum on a face, where it moves with θ
    let s = SolverSettings::default();
    let spec = LpLayerSpec::new(
        vec![-0.3, 0.2, -2.0],
        0.5,
        DenseMatrix::zeros(0, 3),
        vec![],
        unit_box(3).0,
        vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0],
    )
    .unwrap();
    let dl = [1.0, -2.0, 0.5];
    let (_, tape) = lp_layer_forward(&spec, &s).unwrap();
    let dtheta = lp_layer_backward(&tape, &dl).unwrap();
    let h = 1e-5;
    let fd: Vec<f64> = (0..3)
        .map(|j| {
            let mut plus = spec.clone();
            plus.theta[j] += h;
            let mut minus = spec.clone();
            minus.theta[j] -= h;
            let zp = common::oracle_z(&plus.lower().unwrap());
            let zm = common::oracle_z(&minus.lower().unwrap());
            (dot(&dl, &zp) - dot(&dl, &zm)) / (2.0 * h)
        })
        .collect();
    assert!(rel_err(&fd, &dtheta) <= 1e-3, "{fd:?} vs {dtheta:?}");
}

#[test]
fn lp_lowering_is_bit_exact() {
    let s = SolverSettings::default();
    let spec = random_bounded_lp(5, 4, 1);
    let (z1, t1) = lp_layer_forward(&spec, &s).unwrap();
    let (z2, t2) = qp_layer_forward(&spec.lower().unwrap(), &s).unwrap();
    assert_eq!(z1, z2);
    assert_eq!(t1.solution(), t2.solution());
    let p = spec.lower().unwrap();
    assert_eq!(p.p, {
        let mut m = DenseMatrix::identity(4);
        m.scale(2e-6);
        m
    });
    assert_eq!(p.q, spec.theta);
}

#[test]
fn lp_spec_json_round_trip() {
    let spec = random_bounded_lp(1, 3, 1);
    let json = serde_json::to_string(&spec).unwrap();
    assert!(json.contains("\"A\"") && json.contains("\"G\""));
    let back: LpLayerSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    let mut value: serde_json::Value = serde_json::from_str(&json).unwrap();
    value["eps"] = serde_json::json!(-1.0);
    assert!(serde_json::from_value::<LpLayerSpec>(value.clone()).is_err());
    value.as_object_mut().unwrap().remove("eps");
    let defaulted: LpLayerSpec = serde_json::from_value(value).unwrap();
    assert_eq!(defaulted.eps, 1e-6);
}

#[test]
fn socp_closed_form_examples() {
    let s = SolverSettings::default();
    let spec = SocpLayerSpec::new(vec![3.0, 4.0], vec![vec![0.0, 0.0]], vec![5.0]).unwrap();
    let (z, lambda, _) = socp_layer_forward(&spec, &s).unwrap();
    assert!((z[0] + 3.0).abs() < 1e-12 && (z[1] + 4.0).abs() < 1e-12);
    assert!((norm(&z) - 5.0).abs() < 1e-12);
    assert!((lambda[0] - 5.0).abs() < 1e-12);

    let spec = SocpLayerSpec::new(vec![1.0, 0.0], vec![vec![0.0, 0.0]], vec![2.0]).unwrap();
    let (z, lambda, _) = socp_layer_forward(&spec, &s).unwrap();
    assert_eq!(z, vec![-2.0, 0.0]);
    assert_eq!(lambda, vec![1.0]);
}

#[test]
fn socp_random_objective_identity() {
    let spec = gen_socp(&GenSpec::new(Family::Socp, Dims::new(100, 0, 0), 0), 0).unwrap();
    let (z, _, _) = socp_layer_forward(&spec, &SolverSettings::default()).unwrap();
    let expect = -spec.b[0] * norm(&spec.q);
    assert!((dot(&spec.q, &z) - expect).abs() <= 1e-12 * expect.abs());
}

#[test]
fn socp_rejects_unsupported_instances() {
    let s = SolverSettings::default();
    let spec = SocpLayerSpec::new(vec![1.0, 0.0], vec![vec![0.5, 0.0]], vec![2.0]).unwrap();
    assert!(matches!(socp_layer_forward(&spec, &s), Err(Error::UnsupportedSocp(_))));
    let spec = SocpLayerSpec::new(vec![1.0, 0.0], vec![vec![0.0; 2], vec![0.0; 2]], vec![2.0, 3.0]).unwrap();
    assert!(matches!(socp_layer_forward(&spec, &s), Err(Error::UnsupportedSocp(_))));
    assert!(SocpLayerSpec::new(vec![1.0], vec![], vec![]).is_err());
}

#[test]
fn socp_backward_examples() {
    let s = SolverSettings::default();
    let spec = SocpLayerSpec::new(vec![1.0, 0.0], vec![vec![0.0, 0.0]], vec![2.0]).unwrap();
    let (_, _, tape) = socp_layer_forward(&spec, &s).unwrap();
    let zero = socp_layer_backward(&tape, &[0.0, 0.0]).unwrap();
    assert!(zero.dq.iter().chain(&zero.db).chain(zero.da.iter().flatten()).all(|&v| v == 0.0));

    // z★ = −b₁q/‖q‖, so ∂(1ᵀz★)/∂b₁ = −1ᵀq/‖q‖ = −1
    let g = socp_layer_backward(&tape, &[1.0, 1.0]).unwrap();
    assert!((g.db[0] + 1.0).abs() < 1e-4, "{:?}", g.db);
    let o = exact_socp_oracle(&tape, &[1.0, 1.0]).unwrap();
    assert!((o.db[0] + 1.0).abs() < 1e-8, "{:?}", o.db);
}

#[test]
fn socp_gradients_match_closed_form_differences() {
    let spec = gen_socp(&GenSpec::new(Family::Socp, Dims::new(100, 0, 0), 0), 3).unwrap();
    let (_, _, tape) = socp_layer_forward(&spec, &SolverSettings::default()).unwrap();
    let dl: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
    let g = socp_layer_backward(&tape, &dl).unwrap();
    let h = 1e-6;
    let b = spec.b[0];
    let fd_q: Vec<f64> = (0..100)
        .map(|j| {
            let mut qp = spec.q.clone();
            qp[j] += h;
            let mut qm = spec.q.clone();
            qm[j] -= h;
            (dot(&dl, &ball_optimum(&qp, b)) - dot(&dl, &ball_optimum(&qm, b))) / (2.0 * h)
        })
        .collect();
    assert!(cos(&fd_q, &g.dq) >= 0.999, "{}", cos(&fd_q, &g.dq));
    let fd_b = (dot(&dl, &ball_optimum(&spec.q, b + h)) - dot(&dl, &ball_optimum(&spec.q, b - h))) / (2.0 * h);
    assert!((fd_b - g.db[0]).abs() <= 1e-6 * (1.0 + fd_b.abs()), "{fd_b} vs {}", g.db[0]);
}

#[test]
fn socp_gradient_with_respect_to_a() {
    // aᵢᵀz + ‖z‖ ≤ b: at a = 0 the optimum moves along −b q/‖q‖ shifted by the tilt
    let spec = SocpLayerSpec::new(vec![1.0, 2.0, -0.5], vec![vec![0.0; 3]], vec![1.5]).unwrap();
    let (_, _, tape) = socp_layer_forward(&spec, &SolverSettings::default()).unwrap();
    let dl = [0.3, -1.0, 2.0];
    let ours = socp_layer_backward(&tape, &dl).unwrap();
    let oracle = exact_socp_oracle(&tape, &dl).unwrap();
    assert!(cos(&ours.da[0], &oracle.da[0]) >= 0.999999);
    assert!(rel_err(&oracle.dq, &ours.dq) < 1e-6);
}

#[test]
fn external_solution_round_trip() {
    let s = SolverSettings::default();
    let p = gen_qp(&GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0), 2).unwrap();
    let (_, tape) = qp_layer_forward(&p, &s).unwrap();
    let sol = tape.solution();
    let ext = attach_external_solution(&p, &sol.z_star, &sol.nu_star, &sol.lambda_star).unwrap();
    let dl = vec![1.0; 10];
    assert_eq!(
        qp_layer_backward(&tape, &dl).unwrap().flatten(),
        qp_layer_backward(&ext, &dl).unwrap().flatten()
    );
}

#[test]
fn perturbed_external_solution_is_rejected() {
    let p = gen_qp(&GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0), 2).unwrap();
    let (_, tape) = qp_layer_forward(&p, &SolverSettings::default()).unwrap();
    let sol = tape.solution();
    let mut z = sol.z_star.clone();
    z[0] += 1e-2;
    assert!(matches!(
        attach_external_solution(&p, &z, &sol.nu_star, &sol.lambda_star),
        Err(Error::InvalidExternalSolution { .. })
    ));
}

#[test]
fn external_oracle_solutions_agree_with_integrated_path() {
    let s = SolverSettings::default();
    let spec = GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0);
    let mut compared = 0;
    for k in 0..30 {
        let p = gen_qp(&spec, k).unwrap();
        let o = enumerate_qp(&p).unwrap();
        let ext = attach_external_solution(&p, &o.z, &o.nu, &o.lambda).unwrap();
        let (_, tape) = qp_layer_forward(&p, &s).unwrap();
        let dl = vec![1.0; 10];
        let a = qp_layer_backward(&ext, &dl).unwrap().dq;
        let b = qp_layer_backward(&tape, &dl).unwrap().dq;
        if norm(&a) == 0.0 && norm(&b) == 0.0 {
            continue;
        }
        assert!(cos(&a, &b) >= 0.999, "instance {k}: {}", cos(&a, &b));
        compared += 1;
    }
    assert!(compared >= 25);
}

#[test]
fn external_socp_solution_matches_closed_form() {
    let spec = gen_socp(&GenSpec::new(Family::Socp, Dims::new(20, 0, 0), 0), 1).unwrap();
    let z = ball_optimum(&spec.q, spec.b[0]);
    let ext = attach_external_socp_solution(&spec, &z, &[norm(&spec.q)]).unwrap();
    let (_, _, tape) = socp_layer_forward(&spec, &SolverSettings::default()).unwrap();
    let dl = vec![1.0; 20];
    let a = socp_layer_backward(&ext, &dl).unwrap();
    let b = socp_layer_backward(&tape, &dl).unwrap();
    assert!(rel_err(&b.dq, &a.dq) < 1e-10);
    let mut bad = z.clone();
    bad[0] += 0.1;
    assert!(attach_external_socp_solution(&spec, &bad, &[norm(&spec.q)]).is_err());
}

#[test]
fn layer_chain_rule_through_a_squared_loss() {
    // L(q) = ½‖z★(q) − t‖², so ∂L/∂z★ = z★ − t
    let s = SolverSettings::default();
    let spec = GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0);
    let target: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
    let loss = |p: &QpProblem| {
        let z = common::oracle_z(p);
        0.5 * z.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
    };
    let mut checked = 0;
    for k in 0..40 {
        let p = gen_qp(&spec, k).unwrap();
        if oracle_margin(&p, &enumerate_qp(&p).unwrap()) < 1e-3 {
            continue;
        }
        let (z, tape) = qp_layer_forward(&p, &s).unwrap();
        let dl: Vec<f64> = z.iter().zip(&target).map(|(a, b)| a - b).collect();
        let dq = qp_layer_backward(&tape, &dl).unwrap().dq;
        let h = 1e-5;
        let fd: Vec<f64> = (0..10)
            .map(|j| {
                let mut plus = p.clone();
                plus.q[j] += h;
                let mut minus = p.clone();
                minus.q[j] -= h;
                (loss(&plus) - loss(&minus)) / (2.0 * h)
            })
            .collect();
        if norm(&fd) < 1e-10 {
            continue;
        }
        assert!(rel_err(&fd, &dq) <= 1e-3, "instance {k}: {}", rel_err(&fd, &dq));
        checked += 1;
        if checked == 10 {
            break;
        }
    }
    assert_eq!(checked, 10);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn socp_constraint_is_tight(k in 0u64..100_000, d in 1usize..50) {
        let spec = gen_socp(&GenSpec::new(Family::Socp, Dims::new(d, 0, 0), 7), k).unwrap();
        let (z, _, _) = socp_layer_forward(&spec, &SolverSettings::default()).unwrap();
        prop_assert!((norm(&z) - spec.b[0]).abs() <= 1e-12 * spec.b[0].max(1.0));
    }

    #[test]
    fn gradients_depend_only_on_the_optimum(k in 0u64..2_000) {
        let p = gen_qp(&GenSpec::new(Family::Qp, Dims::new(10, 5, 5), 0), k).unwrap();
        let Ok((_, tape)) = qp_layer_forward(&p, &SolverSettings::default()) else {
            return Ok(());
        };
        let sol = tape.solution();
        let ext = attach_external_solution(&p, &sol.z_star, &sol.nu_star, &sol.lambda_star).unwrap();
        let dl: Vec<f64> = (0..10).map(|i| ((i as u64 + k) as f64).cos()).collect();
        prop_assert_eq!(
            qp_layer_backward(&tape, &dl).unwrap().flatten(),
            qp_layer_backward(&ext, &dl).unwrap().flatten()
        );
    }
}
