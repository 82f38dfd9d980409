//! Weyl–Titchmarsh functions of `-y'' + q y` on `[ell, inf)`.
//!
//! `m_infinity(z)` is the coefficient for which `phi_2 + m_infinity phi_1`
//! is square integrable, where `phi_1(ell) = 0, phi_1'(ell) = 1` and
//! `phi_2(ell) = -1, phi_2'(ell) = 0`. Equivalently `m_infinity = -u(ell)` with
//! `u` the logarithmic derivative of the decaying solution. The rotated
//! functions `m_alpha` use `theta_alpha + m_alpha phi_alpha`; `alpha = pi`
//! reproduces `m_infinity`.
//!
//! Two numerical routes are provided:
//!
//! * off the real axis, the Dirichlet point `-theta(X)/phi(X)` of the Weyl
//!   circle at a truncation point `X`, whose radius
//!   `(2 |Im z| int_ell^X |phi|^2)^{-1}` bounds the error;
//! * on the negative real axis, backward integration of the decaying solution
//!   from its WKB data at `X`, which is stable in that direction.

mod cauchy;
mod extrapolate;
mod potential;
mod spline;

use num_complex::Complex64;
use serde::Serialize;

pub use cauchy::{initial_data, sin_cos_snapped, solve_cauchy, CauchySolutionPair};
pub use extrapolate::{
    extrapolate_limit, towards_minus_infinity, towards_zero, Extrapolation, LimitValue,
};
pub use potential::{parse_two_columns, Potential, PotentialFn, PotentialKind, PotentialSpec};

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::ode::{Stepper, Tolerances};
use cauchy::{check_alpha, check_potential_at, SingleSystem, WeylSystem};

/// Spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPoint(pub Complex64);

impl SpectralPoint {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn real(x: f64) -> Self {
        Self(Complex64::new(x, 0.0))
    }

    pub fn z(self) -> Complex64 {
        self.0
    }
}

impl From<Complex64> for SpectralPoint {
    fn from(z: Complex64) -> Self {
        Self(z)
    }
}

/// Square root with `arg` in `[0, 2 pi)`, so `Im sqrt(z) >= 0` and
/// `sqrt(-s) = i sqrt(s)`.
pub fn sqrt_upper(z: Complex64) -> Complex64 {
    let r = z.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// Closed form for `q = 2/x^2` on `[1, inf)`: `1 - i z / (sqrt z + i)`.
pub fn bessel_three_halves_m(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let k = sqrt_upper(z);
    Complex64::new(1.0, 0.0) - i * z / (k + i)
}

/// Closed form for `q = 0`: `sqrt(-z)` with positive real part.
pub fn free_m(z: Complex64) -> Complex64 {
    -Complex64::i() * sqrt_upper(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Numeric,
    ClosedForm,
}

/// How an estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    ClosedForm,
    WeylDisk,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MEstimate {
    pub value: Complex64,
    /// Bound on `|value - m(z)|`; twice the Weyl radius on the disk route,
    /// last change under doubling of `X` on the backward route, 0 for closed
    /// forms.
    pub error_bound: f64,
    /// Truncation point actually used (`ell` for closed forms).
    pub truncation_x: f64,
    pub route: Route,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluatorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Target Weyl disk radius.
    pub disk_tol: f64,
    /// Relative stopping tolerance on the backward route.
    pub real_tol: f64,
    /// `X` grows as `ell + max(ell, 1) * 2^k` for `k <= max_doublings`.
    pub max_doublings: u32,
    /// Number of geometric samples used by the limit extrapolation.
    pub limit_terms: usize,
    pub max_steps: usize,
}

impl Default for EvaluatorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            disk_tol: 1e-8,
            real_tol: 1e-10,
            max_doublings: 20,
            limit_terms: 8,
            max_steps: 5_000_000,
        }
    }
}

impl EvaluatorSettings {
    /// Override defaults from flat `key=value` pairs; unknown keys are ignored
    /// so that one config block can serve several components.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let mut s = Self::default();
        if let Some(v) = kv.get_f64("rtol")? {
            s.rtol = v;
        }
        if let Some(v) = kv.get_f64("atol")? {
            s.atol = v;
        }
        if let Some(v) = kv.get_f64("disk_tol")? {
            s.disk_tol = v;
        }
        if let Some(v) = kv.get_f64("real_tol")? {
            s.real_tol = v;
        }
        if let Some(v) = kv.get_usize("max_doublings")? {
            s.max_doublings = v as u32;
        }
        if let Some(v) = kv.get_usize("limit_terms")? {
            s.limit_terms = v;
        }
        if let Some(v) = kv.get_usize("max_steps")? {
            s.max_steps = v;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rtol", self.rtol),
            ("atol", self.atol),
            ("disk_tol", self.disk_tol),
            ("real_tol", self.real_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Precondition(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.limit_terms < 3 {
            return Err(Error::Precondition("limit_terms must be at least 3".into()));
        }
        Ok(())
    }

    fn tolerances(&self) -> Tolerances {
        Tolerances {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

const RESCALE_AT: f64 = 1e100;
const POLE_EPS: f64 = 1e-13;

fn schedule(ell: f64, span0: f64, k: u32) -> f64 {
    ell + span0 * 2f64.powi(k as i32)
}

fn rescale_if_large<const N: usize>(y: &mut [Complex64; N], solution_len: usize) -> Option<f64> {
    let big = y[..solution_len]
        .iter()
        .map(|c| c.norm())
        .fold(0.0f64, f64::max);
    if big > RESCALE_AT {
        for c in y[..solution_len].iter_mut() {
            *c /= big;
        }
        for c in y[solution_len..].iter_mut() {
            *c /= big * big;
        }
        Some(big)
    } else {
        None
    }
}

/// Weyl-circle point at the Dirichlet boundary condition, with doubling of
/// the truncation point until the disk radius falls below `disk_tol`.
fn weyl_disk(
    potential: &Potential,
    alpha: f64,
    z: Complex64,
    settings: &EvaluatorSettings,
) -> Result<MEstimate> {
    check_alpha(alpha)?;
    check_potential_at(potential, potential.ell())?;
    let ell = potential.ell();
    let span0 = ell.max(1.0);
    let d = initial_data(alpha);
    let y0 = [d[0], d[1], d[2], d[3], Complex64::new(0.0, 0.0)];
    let sys = WeylSystem { q: potential, z };
    let mut st = Stepper::new(&sys, ell, y0, settings.tolerances())?;
    let mut log_scale = 0.0;
    let two_im = 2.0 * z.im.abs();
    let mut radius = f64::INFINITY;
    let mut x = ell;
    for k in 0..=settings.max_doublings {
        x = schedule(ell, span0, k);
        st.advance_with(x, |_, y| match rescale_if_large(y, 4) {
            Some(s) => {
                log_scale += s.ln();
                true
            }
            None => false,
        })?;
        let y = st.state();
        let integral = y[4].re;
        if integral > 0.0 {
            radius = (-(two_im * integral).ln() - 2.0 * log_scale).exp();
        }
        if radius < settings.disk_tol {
            if y[2].norm() == 0.0 {
                return Err(Error::Pole {
                    z,
                    what: "phi vanishes at the truncation point".into(),
                });
            }
            return Ok(MEstimate {
                value: -y[0] / y[2],
                error_bound: 2.0 * radius,
                truncation_x: x,
                route: Route::WeylDisk,
            });
        }
    }
    Err(Error::Convergence {
        x,
        radius,
        tol: settings.disk_tol,
    })
}

/// Logarithmic derivative at `ell` of the solution decaying at infinity, for
/// real `z` below the spectrum.
fn backward_log_derivative(
    potential: &Potential,
    z: f64,
    settings: &EvaluatorSettings,
) -> Result<(f64, f64, f64)> {
    let ell = potential.ell();
    check_potential_at(potential, ell)?;
    let base = ell.max(1.0);
    let local = (potential.eval(ell) - z).abs().max(f64::MIN_POSITIVE);
    let span0 = base * (4.0 / local.sqrt()).min(1.0);
    let x_max = schedule(ell, base, settings.max_doublings);
    let sys = SingleSystem {
        q: potential,
        z: Complex64::new(z, 0.0),
    };
    let mut prev: Option<f64> = None;
    let mut last_change = f64::INFINITY;
    let mut x = ell;
    for k in 0.. {
        x = schedule(ell, span0, k);
        if x > x_max {
            break;
        }
        let kappa2 = potential.eval(x) - z;
        if !kappa2.is_finite() {
            return Err(Error::IntegrationDomain { x });
        }
        if kappa2 <= 0.0 {
            return Err(Error::Domain(format!(
                "z = {z} is not below q at the truncation point X = {x}"
            )));
        }
        let y0 = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-kappa2.sqrt(), 0.0),
        ];
        let mut st = Stepper::new(&sys, x, y0, settings.tolerances())?;
        st.advance_with(ell, |_, y| rescale_if_large(y, 2).is_some())?;
        let y = st.state();
        if y[0].norm() == 0.0 {
            return Err(Error::Pole {
                z: Complex64::new(z, 0.0),
                what: "decaying solution vanishes at ell".into(),
            });
        }
        let u = (y[1] / y[0]).re;
        if let Some(p) = prev {
            last_change = (u - p).abs();
            if last_change <= settings.real_tol * u.abs().max(1.0) {
                return Ok((u, last_change, x));
            }
        }
        prev = Some(u);
    }
    Err(Error::Convergence {
        x,
        radius: last_change,
        tol: settings.real_tol,
    })
}

fn check_spectral_domain(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("z = {z} is not finite")));
    }
    if z.im == 0.0 && z.re >= 0.0 {
        return Err(Error::Domain(format!(
            "z = {} lies on [0, inf); use Im z != 0 or z < 0",
            z.re
        )));
    }
    Ok(())
}

/// Apply the linear-fractional map taking `m_infinity` to `m_alpha`.
/// Returns the value and `|d m_alpha / d m_infinity|`.
pub fn lft_alpha(alpha: f64, m: Complex64, z: Complex64) -> Result<(Complex64, f64)> {
    let (s, c) = sin_cos_snapped(alpha);
    if s == 0.0 && c == -1.0 {
        return Ok((m, 1.0));
    }
    let num = Complex64::new(s, 0.0) + m * c;
    let den = Complex64::new(c, 0.0) - m * s;
    if den.norm() <= POLE_EPS * num.norm().max(f64::MIN_POSITIVE) || den.norm() == 0.0 {
        return Err(Error::Pole {
            z,
            what: format!("cos(alpha) - m_infinity sin(alpha) vanishes for alpha = {alpha}"),
        });
    }
    Ok((num / den, 1.0 / den.norm_sqr()))
}

/// Immutable evaluator for `m_infinity` and `m_alpha`.
#[derive(Debug, Clone)]
pub struct MFunctionEvaluator {
    potential: Potential,
    settings: EvaluatorSettings,
    mode: Mode,
}

impl MFunctionEvaluator {
    pub fn numeric(potential: Potential, settings: EvaluatorSettings) -> Result<Self> {
        settings.validate()?;
        Ok(Self {
            potential,
            settings,
            mode: Mode::Numeric,
        })
    }

    /// Closed-form evaluator; available for `2/x^2` on `[1, inf)` and `q = 0`.
    pub fn closed_form(potential: Potential) -> Result<Self> {
        if !potential.has_closed_form() {
            return Err(Error::Precondition(format!(
                "no closed form for {:?} with ell = {}",
                potential.kind(),
                potential.ell()
            )));
        }
        Ok(Self {
            potential,
            settings: EvaluatorSettings::default(),
            mode: Mode::ClosedForm,
        })
    }

    /// Closed form when available, numeric otherwise.
    pub fn auto(potential: Potential, settings: EvaluatorSettings) -> Result<Self> {
        if potential.has_closed_form() {
            let mut e = Self::closed_form(potential)?;
            e.settings = settings;
            Ok(e)
        } else {
            Self::numeric(potential, settings)
        }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn settings(&self) -> &EvaluatorSettings {
        &self.settings
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn m_infinity_estimate(&self, z: SpectralPoint) -> Result<MEstimate> {
        let z = z.0;
        check_spectral_domain(z)?;
        match self.mode {
            Mode::ClosedForm => {
                let value = match self.potential.kind() {
                    PotentialKind::Free => free_m(z),
                    _ => bessel_three_halves_m(z),
                };
                Ok(MEstimate {
                    value,
                    error_bound: 0.0,
                    truncation_x: self.potential.ell(),
                    route: Route::ClosedForm,
                })
            }
            Mode::Numeric if z.im != 0.0 => {
                weyl_disk(&self.potential, std::f64::consts::PI, z, &self.settings)
                    .map_err(|e| e.at(z))
            }
            Mode::Numeric => {
                let (u, err, x) = backward_log_derivative(&self.potential, z.re, &self.settings)
                    .map_err(|e| e.at(z))?;
                Ok(MEstimate {
                    value: Complex64::new(-u, 0.0),
                    error_bound: err,
                    truncation_x: x,
                    route: Route::Backward,
                })
            }
        }
    }

    pub fn m_infinity(&self, z: SpectralPoint) -> Result<Complex64> {
        self.m_infinity_estimate(z).map(|e| e.value)
    }

    /// `m_alpha` through the linear-fractional transform of `m_infinity`.
    pub fn m_alpha_estimate(&self, alpha: f64, z: SpectralPoint) -> Result<MEstimate> {
        check_alpha(alpha)?;
        let base = self.m_infinity_estimate(z)?;
        let (value, gain) = lft_alpha(alpha, base.value, z.0)?;
        Ok(MEstimate {
            value,
            error_bound: base.error_bound * gain,
            ..base
        })
    }

    pub fn m_alpha(&self, alpha: f64, z: SpectralPoint) -> Result<Complex64> {
        self.m_alpha_estimate(alpha, z).map(|e| e.value)
    }

    fn real_samples(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter()
            .map(|&x| {
                let m = self.m_infinity(SpectralPoint::real(x))?;
                Ok(m.re)
            })
            .collect()
    }

    /// `m_infinity(-0)` extrapolated along `-10^{-k}`.
    pub fn m_infinity_limit_at_zero(&self) -> Result<LimitValue> {
        let s = self.real_samples(&towards_zero(self.settings.limit_terms))?;
        extrapolate_limit(&s, &Extrapolation::default())
    }

    /// `m_infinity(-inf)` extrapolated along `-10^{k}`.
    pub fn m_infinity_limit_at_minus_infinity(&self) -> Result<LimitValue> {
        let s = self.real_samples(&towards_minus_infinity(self.settings.limit_terms))?;
        extrapolate_limit(&s, &Extrapolation::default())
    }
}

/// Weyl disk radius `(2 |Im z| int_ell^X |phi_alpha|^2)^{-1}` at `x_end`.
pub fn disk_radius_at(
    potential: &Potential,
    alpha: f64,
    z: SpectralPoint,
    x_end: f64,
    settings: &EvaluatorSettings,
) -> Result<f64> {
    check_alpha(alpha)?;
    let z = z.0;
    if z.im == 0.0 {
        return Err(Error::Domain("the Weyl disk needs Im z != 0".into()));
    }
    let d = initial_data(alpha);
    let y0 = [d[0], d[1], d[2], d[3], Complex64::new(0.0, 0.0)];
    let sys = WeylSystem { q: potential, z };
    let mut st = Stepper::new(&sys, potential.ell(), y0, settings.tolerances())?;
    let mut log_scale = 0.0;
    st.advance_with(x_end, |_, y| match rescale_if_large(y, 4) {
        Some(s) => {
            log_scale += s.ln();
            true
        }
        None => false,
    })?;
    let integral = st.state()[4].re;
    if integral <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-(2.0 * z.im.abs() * integral).ln() - 2.0 * log_scale).exp())
}

/// `m_alpha` computed directly from the rotated boundary data, without the
/// linear-fractional transform.
pub fn m_alpha_direct(
    potential: &Potential,
    alpha: f64,
    z: SpectralPoint,
    settings: &EvaluatorSettings,
) -> Result<MEstimate> {
    let z = z.0;
    if z.im == 0.0 {
        return Err(Error::Domain("the direct route needs Im z != 0".into()));
    }
    check_spectral_domain(z)?;
    weyl_disk(potential, alpha, z, settings).map_err(|e| e.at(z))
}

#[cfg(test)]
mod tests;
