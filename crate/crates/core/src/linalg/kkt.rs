use super::{norm_inf, DenseMatrix, LdlFactor};
use crate::error::{Error, Result};

/// Block sizes of a KKT matrix: primal variables, active inequality rows,
/// equality rows (in that order along the diagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KktBlocks {
    pub primal: usize,
    pub active: usize,
    pub equality: usize,
}

impl KktBlocks {
    pub fn dim(&self) -> usize {
        self.primal + self.active + self.equality
    }
}

/// The symmetric KKT matrix
///
/// ```text
/// [ P   G₊ᵀ  Aᵀ ]
/// [ G₊  0    0  ]
/// [ A   0    0  ]
/// ```
///
/// together with the regularization used to factor it: `+delta` on the primal
/// diagonal and `-delta` on both constraint blocks.
#[derive(Debug, Clone)]
pub struct KktSystem {
    kkt: DenseMatrix,
    delta: f64,
    blocks: KktBlocks,
}

impl KktSystem {
    pub fn assemble(p: &DenseMatrix, g_plus: &DenseMatrix, a: &DenseMatrix, delta: f64) -> Result<Self> {
        let d = p.rows();
        if !p.is_square() || g_plus.cols() != d || a.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "KKT blocks: P {}x{}, G+ {}x{}, A {}x{}",
                p.rows(),
                p.cols(),
                g_plus.rows(),
                g_plus.cols(),
                a.rows(),
                a.cols()
            )));
        }
        let blocks = KktBlocks {
            primal: d,
            active: g_plus.rows(),
            equality: a.rows(),
        };
        let n = blocks.dim();
        let mut kkt = DenseMatrix::zeros(n, n);
        for i in 0..d {
            for j in 0..=i {
                let v = p[(i, j)];
                kkt[(i, j)] = v;
                kkt[(j, i)] = v;
            }
        }
        let mut put_rows = |offset: usize, m: &DenseMatrix| {
            for r in 0..m.rows() {
                for c in 0..d {
                    let v = m[(r, c)];
                    kkt[(offset + r, c)] = v;
                    kkt[(c, offset + r)] = v;
                }
            }
        };
        put_rows(d, g_plus);
        put_rows(d + blocks.active, a);
        Self::new(kkt, blocks, delta)
    }

    pub fn new(kkt: DenseMatrix, blocks: KktBlocks, delta: f64) -> Result<Self> {
        if kkt.rows() != blocks.dim() || !kkt.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "KKT matrix is {}x{}, blocks need {}",
                kkt.rows(),
                kkt.cols(),
                blocks.dim()
            )));
        }
        if !kkt.is_symmetric() {
            return Err(Error::InvalidProblem("KKT matrix is not symmetric".into()));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::InvalidProblem(format!("regularization must be >= 0, got {delta}")));
        }
        Ok(KktSystem { kkt, delta, blocks })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.kkt
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn blocks(&self) -> KktBlocks {
        self.blocks
    }

    pub fn dim(&self) -> usize {
        self.blocks.dim()
    }

    /// `K + ΔK`.
    pub fn regularized(&self) -> DenseMatrix {
        let mut m = self.kkt.clone();
        for i in 0..self.dim() {
            m[(i, i)] += if i < self.blocks.primal { self.delta } else { -self.delta };
        }
        m
    }

    pub fn factor(&self) -> Result<LdlFactor> {
        LdlFactor::factor(&self.regularized())
    }

    /// `rhs - K t` against the unregularized matrix.
    pub fn residual(&self, t: &[f64], rhs: &[f64]) -> Vec<f64> {
        let kt = self.kkt.matvec(t);
        rhs.iter().zip(kt).map(|(b, v)| b - v).collect()
    }
}

/// Outcome of an iteratively refined solve.
#[derive(Debug, Clone)]
pub struct Refined {
    pub solution: Vec<f64>,
    /// Number of solves with the factorization, including the first.
    pub steps: usize,
    /// `‖K t − rhs‖∞` at return.
    pub residual: f64,
}

/// A KKT system with its regularized factorization, reusable across
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct KktSolver {
    system: KktSystem,
    factor: LdlFactor,
}

impl KktSolver {
    pub fn new(system: KktSystem) -> Result<Self> {
        let factor = system.factor()?;
        Ok(KktSolver { system, factor })
    }

    pub fn system(&self) -> &KktSystem {
        &self.system
    }

    /// Solves `(K + ΔK) t̂ = rhs`.
    pub fn solve_regularized(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        self.check_len(rhs)?;
        Ok(self.factor.solve(rhs))
    }

    /// Recovers the solution of the unregularized system through
    /// `t ← t + (K + ΔK)⁻¹ (rhs − K t)` until `‖K t − rhs‖∞ ≤ tol`.
    pub fn refine(&self, rhs: &[f64], max_steps: usize, tol: f64) -> Result<Refined> {
        self.refine_with(rhs, max_steps, |_| tol)
    }

    /// Like [`KktSolver::refine`] but with `tol` measured relative to
    /// `max(1, ‖rhs‖∞, ‖K‖∞ ‖t‖∞)`, which keeps the target above the rounding
    /// floor of large, badly scaled systems.
    pub fn refine_relative(&self, rhs: &[f64], max_steps: usize, tol: f64) -> Result<Refined> {
        let k_norm = self.system.matrix().norm_inf();
        let rhs_norm = norm_inf(rhs);
        self.refine_with(rhs, max_steps, |t| tol * 1f64.max(rhs_norm).max(k_norm * norm_inf(t)))
    }

    fn refine_with(&self, rhs: &[f64], max_steps: usize, threshold: impl Fn(&[f64]) -> f64) -> Result<Refined> {
        self.check_len(rhs)?;
        let mut t = self.factor.solve(rhs);
        let mut steps = 1;
        let mut r = self.system.residual(&t, rhs);
        let mut res = norm_inf(&r);
        let mut no_progress = 0;
        loop {
            if res <= threshold(&t) {
                return Ok(self.polish_residual(rhs, t, r, res, steps, max_steps));
            }
            if steps >= max_steps.max(1) || !res.is_finite() {
                return Err(Error::RefinementStalled { steps, residual: res });
            }
            self.factor.solve_in_place(&mut r);
            for (ti, dti) in t.iter_mut().zip(&r) {
                *ti += dti;
            }
            steps += 1;
            r = self.system.residual(&t, rhs);
            let next = norm_inf(&r);
            if next >= res {
                no_progress += 1;
                if no_progress >= 3 {
                    return Err(Error::RefinementStalled { steps, residual: next });
                }
            } else {
                no_progress = 0;
            }
            res = next;
        }
    }

    /// Past the threshold, keeps refining while each step at least halves
    /// the residual.
    fn polish_residual(
        &self,
        rhs: &[f64],
        mut t: Vec<f64>,
        mut r: Vec<f64>,
        mut res: f64,
        mut steps: usize,
        max_steps: usize,
    ) -> Refined {
        while steps < max_steps && res > 0.0 {
            self.factor.solve_in_place(&mut r);
            let next_t: Vec<f64> = t.iter().zip(&r).map(|(ti, dti)| ti + dti).collect();
            let next_r = self.system.residual(&next_t, rhs);
            let next = norm_inf(&next_r);
            if !(next <= 0.5 * res) {
                break;
            }
            (t, r, res) = (next_t, next_r, next);
            steps += 1;
        }
        Refined {
            solution: t,
            steps,
            residual: res,
        }
    }

    fn check_len(&self, rhs: &[f64]) -> Result<()> {
        if rhs.len() != self.system.dim() {
            return Err(Error::DimensionMismatch(format!(
                "rhs has length {}, KKT system has dimension {}",
                rhs.len(),
                self.system.dim()
            )));
        }
        Ok(())
    }
}

/// Solves `(K + ΔK) t̂ = rhs` with a fresh factorization.
pub fn factor_and_solve(system: &KktSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    KktSolver::new(system.clone())?.solve_regularized(rhs)
}

/// Solves `K t = rhs` to `‖K t − rhs‖∞ ≤ tol` by refining the regularized
/// solution.
pub fn iterative_refinement(system: &KktSystem, rhs: &[f64], max_steps: usize, tol: f64) -> Result<Refined> {
    KktSolver::new(system.clone())?.refine(rhs, max_steps, tol)
}
