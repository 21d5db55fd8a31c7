use super::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// `LDLᵀ` factorization with 1x1 diagonal pivots and no row exchanges.
///
/// Stable for quasi-definite matrices (positive definite leading block,
/// negative definite trailing block), which is what the regularized KKT
/// systems in this crate are.
#[derive(Debug, Clone)]
pub struct LdlFactor {
    n: usize,
    // unit lower triangle, row-major; entries on and above the diagonal are unused
    l: Vec<f64>,
    d: Vec<f64>,
}

impl LdlFactor {
    /// Factors a symmetric matrix. Only the lower triangle is read.
    pub fn factor(matrix: &DenseMatrix) -> Result<Self> {
        assert!(matrix.is_square(), "LDL factorization needs a square matrix");
        let n = matrix.rows();
        let pivot_floor = (n.max(1) as f64) * f64::EPSILON * matrix.max_abs().max(f64::MIN_POSITIVE);
        let mut l = vec![0.0; n * n];
        let mut d = vec![0.0; n];

        for i in 0..n {
            let a_row = matrix.row(i);
            // row i of L holds w_k = L_ik d_k while it is being built
            let (done, rest) = l.split_at_mut(i * n);
            let w = &mut rest[..i];
            for j in 0..i {
                let lj = &done[j * n..j * n + j];
                w[j] = a_row[j] - dot(&w[..j], lj);
            }
            let mut pivot = a_row[i];
            for k in 0..i {
                let lik = w[k] / d[k];
                pivot -= lik * w[k];
                w[k] = lik;
            }
            if !pivot.is_finite() || pivot.abs() <= pivot_floor {
                return Err(Error::SingularMatrix { index: i });
            }
            d[i] = pivot;
        }
        Ok(LdlFactor { n, l, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.d
    }

    /// Number of negative pivots (the inertia's negative count).
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|&&v| v < 0.0).count()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        assert_eq!(x.len(), self.n, "rhs length does not match factorization");
        let n = self.n;
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &x[..i]);
            x[i] -= s;
        }
        for (xi, di) in x.iter_mut().zip(&self.d) {
            *xi /= di;
        }
        for i in (0..n).rev() {
            let xi = x[i];
            if xi != 0.0 {
                let row = &self.l[i * n..i * n + i];
                for (xk, lik) in x[..i].iter_mut().zip(row) {
                    *xk -= lik * xi;
                }
            }
        }
    }
}
