//! Sampled membership tests for the Herglotz-Nevanlinna and Stieltjes
//! classes, the sectorial classes `S^beta` and `S^{beta1,beta2}`, and the
//! accretivity / sectoriality criteria of Schrödinger L-systems.

mod angles;
mod kernel;
mod suite;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::lsystem::LSystemDescriptor;
use crate::mfunc::{LimitValue, MFunctionEvaluator, SpectralPoint};

pub use angles::{
    accretivity_and_sectoriality, beta_from_beta12_abt, classify_s_beta12, negative_axis_limits,
    theorem15_angles, theorem16_beta, Accretivity,
};
pub use kernel::{
    kernel_matrix, kernel_s_beta_on, kernel_s_beta_test, KernelSampling, KernelTestReport,
};
pub use suite::{verify_example_suite, SuiteOptions};

pub type SampledFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// Where a sampled function is meant to be evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainNote {
    UpperHalfPlane,
    NegativeRealAxis,
    Both,
}

/// A deterministic black-box function `z -> V(z)`.
#[derive(Clone)]
pub struct SampledFunction {
    name: String,
    domain: DomainNote,
    f: SampledFn,
}

impl fmt::Debug for SampledFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl SampledFunction {
    pub fn new(
        name: impl Into<String>,
        domain: DomainNote,
        f: impl Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            domain,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> DomainNote {
        self.domain
    }

    /// Evaluate, tagging any failure with the offending point.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        (self.f)(z).map_err(|e| e.at(z))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("{c}"), DomainNote::Both, move |_| {
            Ok(Complex64::new(c, 0.0))
        })
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn m_infinity(eval: &MFunctionEvaluator) -> Self {
        let e = eval.clone();
        Self::new("m_inf", DomainNote::Both, move |z| {
            e.m_infinity(SpectralPoint(z))
        })
    }

    pub fn neg_m_infinity(eval: &MFunctionEvaluator) -> Self {
        let e = eval.clone();
        Self::new("-m_inf", DomainNote::Both, move |z| {
            e.m_infinity(SpectralPoint(z)).map(|m| -m)
        })
    }

    pub fn inv_m_infinity(eval: &MFunctionEvaluator) -> Self {
        let e = eval.clone();
        Self::new("1/m_inf", DomainNote::Both, move |z| {
            let m = e.m_infinity(SpectralPoint(z))?;
            if m.norm() == 0.0 {
                return Err(Error::Pole {
                    z,
                    what: "m_infinity vanishes".into(),
                });
            }
            Ok(1.0 / m)
        })
    }

    pub fn neg_m_alpha(eval: &MFunctionEvaluator, alpha: f64) -> Self {
        let e = eval.clone();
        Self::new(
            format!("-m_alpha(alpha={alpha})"),
            DomainNote::Both,
            move |z| e.m_alpha(alpha, SpectralPoint(z)).map(|m| -m),
        )
    }

    /// Impedance function of an L-system.
    pub fn impedance(sys: &LSystemDescriptor, eval: &MFunctionEvaluator) -> Self {
        let (s, e) = (sys.clone(), eval.clone());
        Self::new(
            format!("V[mu={},h={}]", sys.mu(), sys.h()),
            DomainNote::Both,
            move |z| crate::lsystem::impedance(&s, SpectralPoint(z), &e),
        )
    }
}

/// Outcome of a sampled test. `worst_margin` is the smallest scaled margin
/// seen (negative below `-tol` means failure) and `witness` the point where
/// it occurred.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub worst_margin: f64,
    pub witness: Option<Complex64>,
    pub witness_value: Option<Complex64>,
    /// Which condition the witness tests.
    pub condition: String,
}

impl Verdict {
    fn new() -> Self {
        Self {
            pass: true,
            worst_margin: f64::INFINITY,
            witness: None,
            witness_value: None,
            condition: String::new(),
        }
    }

    fn observe(&mut self, margin: f64, z: Complex64, v: Option<Complex64>, condition: &str) {
        if margin < self.worst_margin || self.witness.is_none() {
            self.worst_margin = margin;
            self.witness = Some(z);
            self.witness_value = v;
            self.condition = condition.to_string();
        }
    }

    fn finish(mut self, tol: f64) -> Self {
        self.pass = self.worst_margin >= -tol;
        self
    }
}

/// Sampling grids: tensor grid in the upper half-plane, log-spaced points on
/// the negative real axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub re_points: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub im_points: usize,
    /// Negative-axis points run from `-real_min` to `-real_max`.
    pub real_min: f64,
    pub real_max: f64,
    pub real_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            re_min: -5.0,
            re_max: 5.0,
            re_points: 11,
            im_min: 0.1,
            im_max: 10.0,
            im_points: 7,
            real_min: 1e-6,
            real_max: 1e6,
            real_points: 25,
        }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.log10(), b.log10(), n)
        .into_iter()
        .map(|e| 10f64.powf(e))
        .collect()
}

impl GridSpec {
    /// Keys `grid.re_min`, `grid.re_points`, ..., `grid.real_points`.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let mut g = Self::default();
        for (key, slot) in [
            ("grid.re_min", &mut g.re_min),
            ("grid.re_max", &mut g.re_max),
            ("grid.im_min", &mut g.im_min),
            ("grid.im_max", &mut g.im_max),
            ("grid.real_min", &mut g.real_min),
            ("grid.real_max", &mut g.real_max),
        ] {
            if let Some(v) = kv.get_f64(key)? {
                *slot = v;
            }
        }
        for (key, slot) in [
            ("grid.re_points", &mut g.re_points),
            ("grid.im_points", &mut g.im_points),
            ("grid.real_points", &mut g.real_points),
        ] {
            if let Some(v) = kv.get_usize(key)? {
                *slot = v;
            }
        }
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.im_min > 0.0 && self.im_max >= self.im_min) {
            return Err(Error::Precondition(
                "complex grid needs 0 < im_min <= im_max".into(),
            ));
        }
        if !(self.real_min > 0.0 && self.real_max >= self.real_min) {
            return Err(Error::Precondition(
                "negative-axis grid needs 0 < real_min <= real_max".into(),
            ));
        }
        if self.re_max < self.re_min {
            return Err(Error::Precondition(
                "complex grid needs re_min <= re_max".into(),
            ));
        }
        if self.re_points * self.im_points + self.real_points == 0 {
            return Err(Error::Precondition("empty grid".into()));
        }
        Ok(())
    }

    /// Row-major over `Im z`, then `Re z`.
    pub fn complex_points(&self) -> Vec<Complex64> {
        let re = linspace(self.re_min, self.re_max, self.re_points);
        let im = logspace(self.im_min, self.im_max, self.im_points);
        im.iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y)))
            .collect()
    }

    /// Ascending, i.e. from `-real_max` towards `-real_min`.
    pub fn negative_real_points(&self) -> Vec<f64> {
        let mut v: Vec<f64> = logspace(self.real_min, self.real_max, self.real_points)
            .into_iter()
            .map(|s| -s)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Evaluate in parallel, keeping input order so the first error reported
/// is always the same one.
fn eval_all(f: &SampledFunction, points: &[Complex64]) -> Vec<Result<Complex64>> {
    points.par_iter().map(|&z| f.eval(z)).collect()
}

/// `Im f(z) >= -tol max(1, |f(z)|)` on an upper half-plane grid.
pub fn herglotz_test(f: &SampledFunction, grid: &[Complex64], tol: f64) -> Result<Verdict> {
    if let Some(z) = grid.iter().find(|z| !(z.im > 0.0)) {
        return Err(Error::Precondition(format!(
            "Herglotz grid point {z} is not in the upper half-plane"
        )));
    }
    let mut v = Verdict::new();
    for (z, fz) in grid.iter().zip(eval_all(f, grid)) {
        let fz = fz?;
        v.observe(fz.im / fz.norm().max(1.0), *z, Some(fz), "Im f(z) >= 0");
    }
    Ok(v.finish(tol))
}

/// Sampled Stieltjes test: `Im[z f(z)] / Im z >= 0` on `complex_grid`, and
/// on the negative axis `f` finite, real, nonnegative and nondecreasing.
/// A pole on the negative axis is a failure with that point as witness.
pub fn stieltjes_test(
    f: &SampledFunction,
    complex_grid: &[Complex64],
    real_grid: &[f64],
    tol: f64,
) -> Result<Verdict> {
    if let Some(z) = complex_grid.iter().find(|z| !(z.im > 0.0)) {
        return Err(Error::Precondition(format!(
            "Stieltjes grid point {z} is not in the upper half-plane"
        )));
    }
    if let Some(x) = real_grid.iter().find(|x| !(**x < 0.0)) {
        return Err(Error::Precondition(format!(
            "negative-axis grid point {x} is not negative"
        )));
    }
    let mut v = Verdict::new();
    for (z, fz) in complex_grid.iter().zip(eval_all(f, complex_grid)) {
        let fz = fz?;
        let scale = (fz.norm() * z.norm() / z.im).max(1.0);
        v.observe(
            (z * fz).im / z.im / scale,
            *z,
            Some(fz),
            "Im[z f(z)]/Im z >= 0",
        );
    }

    let mut xs = real_grid.to_vec();
    xs.sort_by(f64::total_cmp);
    let points: Vec<Complex64> = xs.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut prev: Option<f64> = None;
    for (z, fz) in points.iter().zip(eval_all(f, &points)) {
        let fz = match fz {
            Ok(fz) => fz,
            Err(e) if is_pole(&e) => {
                v.observe(
                    f64::NEG_INFINITY,
                    *z,
                    None,
                    "holomorphic on the negative axis",
                );
                prev = None;
                continue;
            }
            Err(e) => return Err(e),
        };
        if !(fz.re.is_finite() && fz.im.is_finite()) {
            v.observe(
                f64::NEG_INFINITY,
                *z,
                Some(fz),
                "finite on the negative axis",
            );
            continue;
        }
        let scale = fz.norm().max(1.0);
        v.observe(
            -fz.im.abs() / scale,
            *z,
            Some(fz),
            "real on the negative axis",
        );
        v.observe(
            fz.re / scale,
            *z,
            Some(fz),
            "f(x) >= 0 on the negative axis",
        );
        if let Some(p) = prev {
            let s = scale.max(p.abs());
            v.observe(
                (fz.re - p) / s,
                *z,
                Some(fz),
                "nondecreasing on the negative axis",
            );
        }
        prev = Some(fz.re);
    }
    Ok(v.finish(tol))
}

fn is_pole(e: &Error) -> bool {
    match e {
        Error::Pole { .. } => true,
        Error::AtPoint { source, .. } => is_pole(source),
        _ => false,
    }
}

/// Render an angle as a small rational multiple of pi when it is one.
pub fn angle_label(beta: f64) -> String {
    if beta.abs() < 1e-3 {
        return "0".into();
    }
    for den in 1..=12u32 {
        let num = beta / std::f64::consts::PI * den as f64;
        let k = num.round();
        if k >= 1.0 && (num - k).abs() < 1e-3 * den as f64 && gcd(k as u32, den) == 1 {
            let k = k as u32;
            return match (k, den) {
                (1, 1) => "pi".into(),
                (1, d) => format!("pi/{d}"),
                (k, 1) => format!("{k}pi"),
                (k, d) => format!("{k}pi/{d}"),
            };
        }
    }
    format!("{beta:.6}")
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Options for [`classify_system`].
#[derive(Debug, Clone)]
pub struct ClassifyOptions {
    pub grid: GridSpec,
    pub tol: f64,
    /// Kernel test at `beta2`; skipped when `None`.
    pub kernel: Option<KernelSampling>,
    pub limit_terms: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            tol: 1e-9,
            kernel: Some(KernelSampling::default()),
            limit_terms: 8,
        }
    }
}

/// Classification of an L-system through its impedance function.
#[derive(Debug, Clone, Serialize)]
pub struct SectorialClassification {
    pub function: String,
    pub is_herglotz: Verdict,
    pub is_stieltjes: Verdict,
    /// `f(-inf)` and `f(-0)`, when `f` passed the Stieltjes test.
    pub limits: Option<(LimitValue, LimitValue)>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    /// `tan beta = tan beta1 + 2 sqrt(tan beta1 tan beta2)`
    pub beta_theorem16: Option<f64>,
    /// `tan beta = tan beta2 + 2 sqrt(tan beta1 (tan beta2 - tan beta1))`
    pub beta_abt: Option<f64>,
    /// Kernel test at `beta2`; reported, not asserted.
    pub kernel_at_beta2: Option<KernelTestReport>,
    pub m0: LimitValue,
    pub accretivity: Accretivity,
    pub accretive: Option<bool>,
    pub sectorial: Option<bool>,
    pub extremal: Option<bool>,
}

impl SectorialClassification {
    /// `S^{b1,b2}` for Stieltjes functions, `none` otherwise.
    pub fn class_label(&self) -> String {
        match (self.beta1, self.beta2) {
            (Some(b1), Some(b2)) => format!("S^{{{},{}}}", angle_label(b1), angle_label(b2)),
            _ => "none".into(),
        }
    }
}

pub fn classify_system(
    sys: &LSystemDescriptor,
    eval: &MFunctionEvaluator,
    opts: &ClassifyOptions,
) -> Result<SectorialClassification> {
    opts.grid.validate()?;
    let f = SampledFunction::impedance(sys, eval);
    let complex = opts.grid.complex_points();
    let real = opts.grid.negative_real_points();
    let is_herglotz = herglotz_test(&f, &complex, opts.tol)?;
    let is_stieltjes = stieltjes_test(&f, &complex, &real, opts.tol)?;

    let (mut limits, mut beta1, mut beta2) = (None, None, None);
    let (mut beta_theorem16, mut beta_abt, mut kernel_at_beta2) = (None, None, None);
    if is_stieltjes.pass {
        let l = negative_axis_limits(&f, opts.limit_terms)?;
        let (b1, b2) = classify_s_beta12(l)?;
        limits = Some(l);
        beta1 = Some(b1);
        beta2 = Some(b2);
        beta_theorem16 = theorem16_beta(b1, b2).ok();
        beta_abt = beta_from_beta12_abt(b1, b2).ok();
        if let (Some(k), true) = (&opts.kernel, b2 > 0.0) {
            kernel_at_beta2 = Some(kernel_s_beta_test(&f, b2, k)?);
        }
    }

    let m0 = sys.m0(eval)?;
    let accretivity = accretivity_and_sectoriality(sys, m0);
    Ok(SectorialClassification {
        function: f.name().to_string(),
        is_herglotz,
        is_stieltjes,
        limits,
        beta1,
        beta2,
        beta_theorem16,
        beta_abt,
        kernel_at_beta2,
        m0,
        accretive: accretivity.accretive,
        sectorial: accretivity.sectorial,
        extremal: accretivity.extremal,
        accretivity,
    })
}
