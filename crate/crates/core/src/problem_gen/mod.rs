//! Seeded random problem families.
//!
//! Instance `k` of a batch draws from its own ChaCha8 stream keyed by
//! `(seed, k)`, so any instance can be regenerated without the ones before it.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::{LpLayerSpec, SocpLayerSpec};
use crate::linalg::DenseMatrix;
use crate::qp::QpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Qp,
    Lp,
    Socp,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Qp => "qp",
            Family::Lp => "lp",
            Family::Socp => "socp",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "qp" => Ok(Family::Qp),
            "lp" => Ok(Family::Lp),
            "socp" => Ok(Family::Socp),
            other => Err(Error::InvalidProblem(format!("unknown problem family `{other}`"))),
        }
    }
}

/// Problem dimensions: variables, equality rows, inequality rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub d: usize,
    pub m_eq: usize,
    pub n_ineq: usize,
}

impl Dims {
    pub fn new(d: usize, m_eq: usize, n_ineq: usize) -> Self {
        Dims { d, m_eq, n_ineq }
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.m_eq == self.n_ineq {
            write!(f, "{}x{}", self.d, self.m_eq)
        } else {
            write!(f, "{}x{}x{}", self.d, self.m_eq, self.n_ineq)
        }
    }
}

/// Parses `100x20` (20 equalities and 20 inequalities) or `100x20x40`.
impl FromStr for Dims {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidProblem(format!("cannot parse dimensions `{s}`, expected DxM or DxMxN"));
        let parts = s
            .trim()
            .split(['x', 'X'])
            .map(|p| p.parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let dims = match parts[..] {
            [d, m] => Dims::new(d, m, m),
            [d, m, n] => Dims::new(d, m, n),
            _ => return Err(bad()),
        };
        if dims.d == 0 {
            return Err(bad());
        }
        Ok(dims)
    }
}

pub const DEFAULT_GEN_DELTA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub dims: Dims,
    pub seed: u64,
    /// LP smoothing weight.
    pub eps: f64,
    /// Diagonal shift added to the QP Gram matrix.
    pub delta: f64,
}

impl GenSpec {
    pub fn new(family: Family, dims: Dims, seed: u64) -> Self {
        GenSpec {
            family,
            dims,
            seed,
            eps: crate::layers::DEFAULT_LP_EPS,
            delta: DEFAULT_GEN_DELTA,
        }
    }

    /// Random stream for instance `index` of the batch.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        rng
    }

    fn check(&self, family: Family) -> Result<()> {
        if self.family != family {
            return Err(Error::InvalidProblem(format!(
                "generator for {family} called with a {} spec",
                self.family
            )));
        }
        if self.dims.d == 0 {
            return Err(Error::InvalidProblem("dimension d must be at least 1".into()));
        }
        Ok(())
    }
}

fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_row_major(rows, cols, normal_vec(rng, rows * cols)).expect("length matches shape")
}

/// `P = P'ᵀP' + δI`, with `c = Gz'` so the feasible set contains `z'`.
pub fn gen_qp(spec: &GenSpec, index: u64) -> Result<QpProblem> {
    spec.check(Family::Qp)?;
    let Dims { d, m_eq, n_ineq } = spec.dims;
    let mut rng = spec.rng(index);
    let p_root = normal_matrix(&mut rng, d, d);
    let a = normal_matrix(&mut rng, m_eq, d);
    let b = normal_vec(&mut rng, m_eq);
    let g = normal_matrix(&mut rng, n_ineq, d);
    let z0 = normal_vec(&mut rng, d);
    let q = normal_vec(&mut rng, d);
    let mut p = p_root.gram();
    p.add_diagonal(spec.delta);
    let c = g.matvec(&z0);
    QpProblem::new(p, q, a, b, g, c)
}

/// Smoothed LP with `h = Gz'`.
pub fn gen_lp(spec: &GenSpec, index: u64) -> Result<LpLayerSpec> {
    spec.check(Family::Lp)?;
    let Dims { d, m_eq, n_ineq } = spec.dims;
    let mut rng = spec.rng(index);
    let theta = normal_vec(&mut rng, d);
    let a = normal_matrix(&mut rng, m_eq, d);
    let b = normal_vec(&mut rng, m_eq);
    let g = normal_matrix(&mut rng, n_ineq, d);
    let z0 = normal_vec(&mut rng, d);
    let h = g.matvec(&z0);
    LpLayerSpec::new(theta, spec.eps, a, b, g, h)
}

/// Single ball constraint `‖z‖ ≤ b₁` with `b₁ > 0` (redrawn until positive).
pub fn gen_socp(spec: &GenSpec, index: u64) -> Result<SocpLayerSpec> {
    spec.check(Family::Socp)?;
    let d = spec.dims.d;
    let mut rng = spec.rng(index);
    let q = normal_vec(&mut rng, d);
    let b1 = loop {
        let v: f64 = rng.sample(StandardNormal);
        if v > 0.0 {
            break v;
        }
    };
    SocpLayerSpec::new(q, vec![vec![0.0; d]], vec![b1])
}

/// Any generated instance, serialized with its family's schema.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Instance {
    Qp(QpProblem),
    Lp(LpLayerSpec),
    Socp(SocpLayerSpec),
}

pub fn generate(spec: &GenSpec, index: u64) -> Result<Instance> {
    Ok(match spec.family {
        Family::Qp => Instance::Qp(gen_qp(spec, index)?),
        Family::Lp => Instance::Lp(gen_lp(spec, index)?),
        Family::Socp => Instance::Socp(gen_socp(spec, index)?),
    })
}

/// Writes `count` instances as `{family}_{dims}_{index:04}.json` into `dir`.
pub fn write_batch(spec: &GenSpec, count: u64, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(count as usize);
    for k in 0..count {
        let path = dir.join(format!("{}_{}_{k:04}.json", spec.family, spec.dims));
        let json = serde_json::to_string(&generate(spec, k)?)?;
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_round_trip() {
        let d: Dims = "100x20".parse().unwrap();
        assert_eq!(d, Dims::new(100, 20, 20));
        assert_eq!(d.to_string(), "100x20");
        let d: Dims = "500x100x200".parse().unwrap();
        assert_eq!(d.to_string(), "500x100x200");
        assert!("0x5".parse::<Dims>().is_err());
        assert!("10".parse::<Dims>().is_err());
        assert!("10xa".parse::<Dims>().is_err());
    }

    #[test]
    fn wrong_family_is_rejected() {
        let spec = GenSpec::new(Family::Lp, Dims::new(3, 1, 1), 0);
        assert!(gen_qp(&spec, 0).is_err());
    }

    #[test]
    fn streams_are_independent_of_order() {
        let spec = GenSpec::new(Family::Qp, Dims::new(4, 2, 2), 9);
        let third = gen_qp(&spec, 3).unwrap();
        for k in 0..3 {
            gen_qp(&spec, k).unwrap();
        }
        assert_eq!(gen_qp(&spec, 3).unwrap(), third);
        assert_ne!(gen_qp(&spec, 2).unwrap(), third);
    }
}
