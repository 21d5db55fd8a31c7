mod common;

use bpqp::linalg::{factor_and_solve, iterative_refinement, DenseMatrix, KktBlocks, KktSystem, LdlFactor};
use common::{gauss_solve, matrix_rows};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_row_major(rows, cols, data).unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize, shift: f64) -> DenseMatrix {
    let mut p = random_matrix(rng, d, d).gram();
    p.add_diagonal(shift);
    p
}

/// A KKT system with `d` primal, `k` active and `m` equality rows.
fn random_kkt(seed: u64, d: usize, k: usize, m: usize, delta: f64) -> KktSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = random_spd(&mut rng, d, 0.1);
    let g = random_matrix(&mut rng, k, d);
    let a = random_matrix(&mut rng, m, d);
    KktSystem::assemble(&p, &g, &a, delta).unwrap()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn shifted_identity_solve() {
    let sys = KktSystem::new(
        DenseMatrix::identity(2),
        KktBlocks {
            primal: 2,
            active: 0,
            equality: 0,
        },
        1e-6,
    )
    .unwrap();
    let t = factor_and_solve(&sys, &[1.0, 2.0]).unwrap();
    let expect = [1.0 / (1.0 + 1e-6), 2.0 / (1.0 + 1e-6)];
    for (x, e) in t.iter().zip(expect) {
        assert!((x - e).abs() < 1e-12, "{x} vs {e}");
    }
}

#[test]
fn two_by_two_kkt_matches_cramer() {
    // [1 1; 1 0] shifted to [1+δ 1; 1 −δ]
    let delta = 1e-6;
    let p = DenseMatrix::from_rows(&[vec![1.0]], 1).unwrap();
    let a = DenseMatrix::from_rows(&[vec![1.0]], 1).unwrap();
    let sys = KktSystem::assemble(&p, &DenseMatrix::zeros(0, 1), &a, delta).unwrap();
    let rhs = [1.0, 1.0];
    let t = factor_and_solve(&sys, &rhs).unwrap();
    let det = (1.0 + delta) * (-delta) - 1.0;
    let x = (rhs[0] * (-delta) - rhs[1]) / det;
    let y = ((1.0 + delta) * rhs[1] - rhs[0]) / det;
    assert!((t[0] - x).abs() < 1e-12 && (t[1] - y).abs() < 1e-12);
}

#[test]
fn regularized_solve_matches_gaussian_elimination() {
    for seed in 0..20 {
        let sys = random_kkt(seed, 4, 1, 1, 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let rhs: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = factor_and_solve(&sys, &rhs).unwrap();
        let reference = gauss_solve(matrix_rows(&sys.regularized()), rhs).unwrap();
        for (x, r) in t.iter().zip(&reference) {
            assert!((x - r).abs() <= 1e-10 * (1.0 + r.abs()), "seed {seed}: {x} vs {r}");
        }
    }
}

#[test]
fn zero_delta_needs_at_most_one_refinement_step() {
    let sys = random_kkt(3, 4, 1, 1, 0.0);
    let rhs = vec![1.0, -2.0, 0.5, 0.0, 1.0, -1.0];
    let r = iterative_refinement(&sys, &rhs, 10, 1e-12).unwrap();
    assert!(r.steps <= 1, "took {} steps", r.steps);
}

#[test]
fn refinement_reaches_unregularized_solution() {
    let p = DenseMatrix::from_rows(&[vec![1.0]], 1).unwrap();
    let a = DenseMatrix::from_rows(&[vec![1.0]], 1).unwrap();
    let sys = KktSystem::assemble(&p, &DenseMatrix::zeros(0, 1), &a, 1e-6).unwrap();
    let r = iterative_refinement(&sys, &[1.0, 1.0], 10, 1e-12).unwrap();
    // exact solution of [1 1; 1 0] t = [1; 1] is (1, 0)
    assert!((r.solution[0] - 1.0).abs() < 1e-12);
    assert!(r.solution[1].abs() < 1e-12);
}

#[test]
fn refinement_on_random_kkt_converges_quickly() {
    for seed in 0..10 {
        let sys = random_kkt(seed, 6, 2, 2, 1e-6);
        let rhs: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let r = iterative_refinement(&sys, &rhs, 5, 1e-10).unwrap();
        let res = sys.residual(&r.solution, &rhs);
        assert!(inf_norm(&res) <= 1e-10, "seed {seed}: residual {}", inf_norm(&res));
        assert!(r.steps <= 5);
        let reference = gauss_solve(matrix_rows(sys.matrix()), rhs).unwrap();
        assert!(common::rel_err(&reference, &r.solution) < 1e-9);
    }
}

#[test]
fn asymmetric_matrix_is_rejected() {
    let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, -1.0]], 2).unwrap();
    let blocks = KktBlocks {
        primal: 1,
        active: 0,
        equality: 1,
    };
    assert!(KktSystem::new(m, blocks, 1e-6).is_err());
}

#[test]
fn quasi_definite_inertia() {
    let sys = random_kkt(7, 8, 3, 2, 1e-6);
    let f = LdlFactor::factor(&sys.regularized()).unwrap();
    assert_eq!(f.negative_pivots(), 5);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(64) })]

    #[test]
    fn ldl_residual_is_small(seed in 0u64..10_000, d in 1usize..9, k in 0usize..4, m in 0usize..3) {
        prop_assume!(k + m <= d);
        let sys = random_kkt(seed, d, k, m, 1e-6);
        let rhs: Vec<f64> = (0..sys.dim()).map(|i| ((seed as f64) + i as f64).cos()).collect();
        let t = factor_and_solve(&sys, &rhs).unwrap();
        let kt = sys.regularized().matvec(&t);
        let res: Vec<f64> = kt.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        prop_assert!(inf_norm(&res) <= 1e-9 * (1.0 + inf_norm(&t)));
    }

    #[test]
    fn factor_and_solve_is_deterministic(seed in 0u64..10_000) {
        let sys = random_kkt(seed, 5, 2, 1, 1e-6);
        let rhs = vec![0.3; sys.dim()];
        let a = factor_and_solve(&sys, &rhs).unwrap();
        let b = factor_and_solve(&sys, &rhs).unwrap();
        prop_assert_eq!(a, b);
    }
}
