use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::SampledFunction;
use crate::error::{Error, Result};

/// Random point sets for [`kernel_s_beta_test`]: `Re z` uniform, `Im z`
/// log-uniform.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSampling {
    pub max_points: usize,
    pub trials: usize,
    pub seed: u64,
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    /// PSD means `min eigenvalue >= -psd_tol * max |K_ij|`.
    pub psd_tol: f64,
}

impl Default for KernelSampling {
    fn default() -> Self {
        Self {
            max_points: 6,
            trials: 100,
            seed: 42,
            re_range: (-5.0, 5.0),
            im_range: (0.1, 10.0),
            psd_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTestReport {
    pub beta: f64,
    /// Point set of the worst trial.
    pub points: Vec<Complex64>,
    pub min_eigenvalue: f64,
    /// `max |K_ij|` of the worst trial.
    pub scale: f64,
    pub psd: bool,
    /// Eigenvector of the smallest eigenvalue in the worst trial.
    pub witness_vector: Vec<Complex64>,
    pub trials: usize,
}

impl KernelTestReport {
    pub fn scaled_min(&self) -> f64 {
        if self.scale > 0.0 {
            self.min_eigenvalue / self.scale
        } else {
            self.min_eigenvalue
        }
    }
}

fn cot(beta: f64) -> f64 {
    if (beta - FRAC_PI_2).abs() <= 1e-15 {
        0.0
    } else {
        1.0 / beta.tan()
    }
}

/// `K[k][l] = (z_k f(z_k) - conj(z_l) f(conj z_l)) / (z_k - conj z_l)
///            - cot(beta) f(conj z_l) f(z_k)`, using `f(conj z) = conj f(z)`.
pub fn kernel_matrix(points: &[Complex64], values: &[Complex64], beta: f64) -> DMatrix<Complex64> {
    let c = cot(beta);
    let n = points.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| {
        let (zk, fk) = (points[i], values[i]);
        let (zl, fl) = (points[j].conj(), values[j].conj());
        (zk * fk - zl * fl) / (zk - zl) - c * fl * fk
    });
    // remove rounding asymmetry
    let kh = k.adjoint();
    k = (k + kh) * Complex64::new(0.5, 0.0);
    k
}

/// Smallest eigenvalue and its eigenvector of a Hermitian matrix, through
/// the real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`.
fn hermitian_min_eigen(k: &DMatrix<Complex64>) -> (f64, Vec<Complex64>) {
    let n = k.nrows();
    let emb = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let (a, b) = (k[(i % n, j % n)].re, k[(i % n, j % n)].im);
        match (i < n, j < n) {
            (true, true) | (false, false) => a,
            (true, false) => -b,
            (false, true) => b,
        }
    });
    let eig = SymmetricEigen::new(emb);
    let (idx, min) = eig
        .eigenvalues
        .iter()
        .copied()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty matrix");
    let v = eig.eigenvectors.column(idx);
    let vec = (0..n).map(|i| Complex64::new(v[i], v[i + n])).collect();
    (min, vec)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= FRAC_PI_2 + 1e-15) {
        return Err(Error::Precondition(format!(
            "kernel test needs beta in (0, pi/2], got {beta}"
        )));
    }
    Ok(())
}

/// Kernel test on one fixed point set.
pub fn kernel_s_beta_on(
    f: &SampledFunction,
    beta: f64,
    points: &[Complex64],
    psd_tol: f64,
) -> Result<KernelTestReport> {
    check_beta(beta)?;
    if points.is_empty() {
        return Err(Error::Precondition(
            "kernel test needs at least one point".into(),
        ));
    }
    if let Some(z) = points.iter().find(|z| !(z.im > 0.0)) {
        return Err(Error::Precondition(format!(
            "kernel point {z} is not in the upper half-plane"
        )));
    }
    let values = points
        .iter()
        .map(|&z| f.eval(z))
        .collect::<Result<Vec<_>>>()?;
    let k = kernel_matrix(points, &values, beta);
    let scale = k.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let (min_eigenvalue, witness_vector) = hermitian_min_eigen(&k);
    Ok(KernelTestReport {
        beta,
        points: points.to_vec(),
        min_eigenvalue,
        scale,
        psd: min_eigenvalue >= -psd_tol * scale,
        witness_vector,
        trials: 1,
    })
}

fn random_point_set(rng: &mut ChaCha8Rng, s: &KernelSampling) -> Vec<Complex64> {
    let n = rng.gen_range(1..=s.max_points);
    let (lo, hi) = (s.im_range.0.ln(), s.im_range.1.ln());
    let mut pts: Vec<Complex64> = Vec::with_capacity(n);
    while pts.len() < n {
        let z = Complex64::new(
            rng.gen_range(s.re_range.0..=s.re_range.1),
            rng.gen_range(lo..=hi).exp(),
        );
        // coincident points make the matrix degenerate; draw again
        if pts.iter().all(|p| (p - z).norm() > 1e-8) {
            pts.push(z);
        }
    }
    pts
}

/// Smallest scaled eigenvalue of `K_beta` over `trials` random point sets.
/// Point sets are drawn sequentially from the seed before the trials run in
/// parallel, so the result does not depend on scheduling.
pub fn kernel_s_beta_test(
    f: &SampledFunction,
    beta: f64,
    sampling: &KernelSampling,
) -> Result<KernelTestReport> {
    check_beta(beta)?;
    if sampling.max_points == 0 || sampling.trials == 0 {
        return Err(Error::Precondition(
            "kernel test needs points and trials".into(),
        ));
    }
    if !(sampling.im_range.0 > 0.0 && sampling.im_range.1 >= sampling.im_range.0) {
        return Err(Error::Precondition("kernel points need Im z > 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let sets: Vec<Vec<Complex64>> = (0..sampling.trials)
        .map(|_| random_point_set(&mut rng, sampling))
        .collect();
    let reports = sets
        .par_iter()
        .map(|pts| kernel_s_beta_on(f, beta, pts, sampling.psd_tol))
        .collect::<Vec<_>>();
    let mut worst: Option<KernelTestReport> = None;
    for r in reports {
        let r = r?;
        if worst
            .as_ref()
            .is_none_or(|w| r.scaled_min() < w.scaled_min())
        {
            worst = Some(r);
        }
    }
    let mut worst = worst.expect("at least one trial");
    worst.trials = sampling.trials;
    Ok(worst)
}
