//! Ensemble samplers and the Monte Carlo estimator.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
#[cfg(feature = "rayon")]
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::contraction::eval_contraction;
use crate::ensemble::EnsembleKind;
use crate::error::{Error, Result};
use crate::expansion::ExpressionSpec;
use crate::quaternion::{QMat, Quat};

/// Samples per independently seeded stream.
pub const CHUNK: u64 = 1024;

/// Quaternion with independent N(0, 1/4) components.
pub fn standard_quaternion<R: Rng + ?Sized>(rng: &mut R) -> Quat<f64> {
    let g = Normal::new(0.0, 0.5).unwrap();
    Quat::new(g.sample(rng), g.sample(rng), g.sample(rng), g.sample(rng))
}

pub fn standard_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> QMat<f64> {
    QMat::from_fn(rows, cols, |_, _| standard_quaternion(rng))
}

/// G/√N.
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QMat<f64> {
    standard_gaussian(n, n, rng).scale(&(1.0 / (n as f64).sqrt()))
}

/// (G + G*)/√(2N).
pub fn sample_gse<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QMat<f64> {
    let g = standard_gaussian(n, n, rng);
    g.add(&g.adjoint()).scale(&(1.0 / (2.0 * n as f64).sqrt()))
}

/// G*DG/N with G an M×N standard Gaussian matrix.
pub fn sample_wishart<R: Rng + ?Sized>(n: usize, d: &QMat<f64>, rng: &mut R) -> Result<QMat<f64>> {
    if !d.is_square() {
        return Err(Error::Malformed("Wishart D must be square".into()));
    }
    let g = standard_gaussian(d.rows(), n, rng);
    Ok(g.adjoint().matmul(&d.matmul(&g)).scale(&(1.0 / n as f64)))
}

fn inner(u: &[Quat<f64>], v: &[Quat<f64>]) -> Quat<f64> {
    let mut s = Quat::zero();
    for (a, b) in u.iter().zip(v) {
        s += &a.conj() * b;
    }
    s
}

fn orthonormalize(cols: &mut [Vec<Quat<f64>>]) {
    for j in 0..cols.len() {
        for i in 0..j {
            let p = inner(&cols[i], &cols[j]);
            let proj: Vec<Quat<f64>> = cols[i].iter().map(|u| u * &p).collect();
            for (v, w) in cols[j].iter_mut().zip(proj) {
                *v = v.clone() - w;
            }
        }
        let norm = inner(&cols[j], &cols[j]).a.sqrt();
        for v in cols[j].iter_mut() {
            *v = v.scale(&(1.0 / norm));
        }
    }
}

/// Haar symplectic matrix by modified Gram–Schmidt on a Ginibre sample,
/// with a second pass when the columns drift from orthonormality.
pub fn sample_haar<R: Rng + ?Sized>(n: usize, rng: &mut R) -> QMat<f64> {
    let g = standard_gaussian(n, n, rng);
    let mut cols: Vec<Vec<Quat<f64>>> = (0..n).map(|j| (0..n).map(|i| g.get(i, j).clone()).collect()).collect();
    orthonormalize(&mut cols);
    let u = QMat::from_fn(n, n, |i, j| cols[j][i].clone());
    if u.adjoint().matmul(&u).max_abs_diff(&QMat::identity(n)) > 1e-8 {
        orthonormalize(&mut cols);
        return QMat::from_fn(n, n, |i, j| cols[j][i].clone());
    }
    u
}

/// Draw one matrix of the given ensemble.
pub fn sample_kind<R: Rng + ?Sized>(kind: &EnsembleKind, n: usize, rng: &mut R) -> Result<QMat<f64>> {
    Ok(match kind {
        EnsembleKind::Ginibre => sample_ginibre(n, rng),
        EnsembleKind::Gse => sample_gse(n, rng),
        EnsembleKind::Wishart { d, .. } => sample_wishart(n, &d.to_f64(), rng)?,
        EnsembleKind::HaarSymplectic => sample_haar(n, rng),
        EnsembleKind::Identity => QMat::identity(n),
        EnsembleKind::Empirical(_) => return Err(Error::Unsupported("sampling an empirical ensemble".into())),
    })
}

/// Monte Carlo mean of a real statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub sample_count: u64,
    pub seed: u64,
}

impl MCEstimate {
    pub fn to_json(&self) -> Value {
        json!({"mean": self.mean, "se": self.std_error, "n": self.sample_count, "seed": self.seed})
    }

    /// From per-sample sums Σx and Σx².
    pub fn from_sums(sum: f64, sumsq: f64, count: u64, seed: u64) -> Self {
        let c = count as f64;
        let mean = sum / c;
        let var = if count > 1 { ((sumsq - c * mean * mean) / (c - 1.0)).max(0.0) } else { 0.0 };
        MCEstimate { mean, std_error: (var / c).sqrt(), sample_count: count, seed }
    }
}

/// Re ntr of the expression (the scalar itself when it is one) per draw.
/// Every color is resampled independently for each draw; stream `k` of the
/// seed produces samples `k·CHUNK ..`, so results do not depend on threads.
pub fn mc_expectation(spec: &ExpressionSpec, n: usize, samples: u64, seed: u64) -> Result<MCEstimate> {
    if samples == 0 {
        return Err(Error::Malformed("at least one sample is needed".into()));
    }
    let slots = spec.oracle_slots()?;
    let (pr, pt) = spec.premaps()?;
    let kinds: BTreeMap<u32, EnsembleKind> = slots.iter().map(|s| (s.color, s.kind.clone())).collect();
    let ys: Vec<Option<QMat<f64>>> = slots.iter().map(|s| s.y.as_ref().map(QMat::to_f64)).collect();
    for y in ys.iter().flatten() {
        if y.rows() != n || y.cols() != n {
            return Err(Error::Malformed(format!("fixed Y is {}×{}, expected {n}×{n}", y.rows(), y.cols())));
        }
    }
    let chunks = samples.div_ceil(CHUNK);
    let run_chunk = |k: u64| -> Result<(f64, f64, u64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let count = CHUNK.min(samples - k * CHUNK);
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let mut drawn: BTreeMap<u32, QMat<f64>> = BTreeMap::new();
            for (c, kind) in &kinds {
                drawn.insert(*c, sample_kind(kind, n, &mut rng)?);
            }
            let mats: Vec<QMat<f64>> = slots
                .iter()
                .zip(&ys)
                .map(|(sl, y)| {
                    let x = &drawn[&sl.color];
                    let x = if sl.eps < 0 { x.adjoint() } else { x.clone() };
                    match y {
                        Some(y) => x.matmul(y),
                        None => x,
                    }
                })
                .collect();
            let v = eval_contraction(&pr, &pt, &mats)?;
            let x = if v.rows() == 1 { v.get(0, 0).a } else { v.ntr()?.a };
            s += x;
            s2 += x * x;
        }
        Ok((s, s2, count))
    };
    let parts: Vec<(f64, f64, u64)> = crate::if_rayon!(
        (0..chunks).into_par_iter().map(run_chunk).collect::<Result<Vec<_>>>()?,
        (0..chunks).map(run_chunk).collect::<Result<Vec<_>>>()?
    );
    let (mut s, mut s2, mut c) = (0.0, 0.0, 0u64);
    for (a, b, k) in parts {
        s += a;
        s2 += b;
        c += k;
    }
    Ok(MCEstimate::from_sums(s, s2, c, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Manifest;

    #[test]
    fn samplers_have_their_symmetries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = sample_gse(3, &mut rng);
        assert!(t.max_abs_diff(&t.adjoint()) < 1e-15);
        for n in 1..=4 {
            let u = sample_haar(n, &mut rng);
            assert!(u.adjoint().matmul(&u).max_abs_diff(&QMat::identity(n)) < 1e-10);
            assert!(u.matmul(&u.adjoint()).max_abs_diff(&QMat::identity(n)) < 1e-10);
        }
        let w = sample_wishart(2, &QMat::identity(3), &mut rng).unwrap();
        assert!(w.max_abs_diff(&w.adjoint()) < 1e-12);
    }

    #[test]
    fn component_variance_is_a_quarter() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = 200_000;
        let mut s = [0.0f64; 4];
        for _ in 0..k {
            let q = standard_quaternion(&mut rng);
            for (acc, x) in s.iter_mut().zip([q.a, q.b, q.c, q.d]) {
                *acc += x * x;
            }
        }
        for v in s {
            assert!((v / k as f64 - 0.25).abs() < 0.005);
        }
    }

    #[test]
    fn mc_is_reproducible_and_close() {
        let spec = ExpressionSpec::from_expr("E[Re(tr(X1 X1))]", Manifest::single(1, EnsembleKind::Gse)).unwrap();
        let a = mc_expectation(&spec, 2, 20_000, 7).unwrap();
        let b = mc_expectation(&spec, 2, 20_000, 7).unwrap();
        assert_eq!(a, b);
        assert!(((a.mean - 0.75) / a.std_error).abs() < 5.0);
        let u = ExpressionSpec::from_expr("E[Re(tr(X1 X1*))]", Manifest::single(1, EnsembleKind::HaarSymplectic)).unwrap();
        let e = mc_expectation(&u, 3, 100, 1).unwrap();
        assert!((e.mean - 1.0).abs() < 1e-12 && e.std_error < 1e-6);
    }
}
