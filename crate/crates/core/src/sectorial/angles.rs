use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use super::SampledFunction;
use crate::error::{Error, Result};
use crate::lsystem::{ExtendedReal, LSystemDescriptor};
use crate::mfunc::{
    extrapolate_limit, towards_minus_infinity, towards_zero, Extrapolation, LimitValue,
};

const ANGLE_SLACK: f64 = 1e-12;

fn real_samples(f: &SampledFunction, xs: &[f64]) -> Result<Vec<f64>> {
    xs.iter()
        .map(|&x| f.eval(Complex64::new(x, 0.0)).map(|v| v.re))
        .collect()
}

/// `(f(-inf), f(-0))` extrapolated along `-10^{k}` and `-10^{-k}`.
pub fn negative_axis_limits(f: &SampledFunction, terms: usize) -> Result<(LimitValue, LimitValue)> {
    let cfg = Extrapolation::default();
    let at_minus_inf = extrapolate_limit(&real_samples(f, &towards_minus_infinity(terms))?, &cfg)?;
    let at_zero = extrapolate_limit(&real_samples(f, &towards_zero(terms))?, &cfg)?;
    Ok((at_minus_inf, at_zero))
}

fn limit_angle(l: LimitValue, which: &str) -> Result<f64> {
    match l {
        LimitValue::PosInfinity => Ok(FRAC_PI_2),
        LimitValue::NegInfinity => Err(Error::Domain(format!(
            "limit at {which} is -inf; not a Stieltjes function"
        ))),
        LimitValue::Finite(v) if v < -1e-9 * v.abs().max(1.0) => Err(Error::Domain(format!(
            "limit at {which} is {v} < 0; not a Stieltjes function"
        ))),
        LimitValue::Finite(v) => Ok(v.max(0.0).atan()),
    }
}

/// `beta1 = arctan f(-inf)`, `beta2 = arctan f(-0)`, with `+inf -> pi/2`.
pub fn classify_s_beta12(limits: (LimitValue, LimitValue)) -> Result<(f64, f64)> {
    let b1 = limit_angle(limits.0, "-inf")?;
    let b2 = limit_angle(limits.1, "-0")?;
    if b1 > b2 + 1e-9 {
        return Err(Error::Domain(format!(
            "beta1 = {b1} exceeds beta2 = {b2}; samples are not those of a Stieltjes function"
        )));
    }
    Ok((b1, b2.max(b1)))
}

/// Class angles of `-m_alpha`: `tan beta1 = cot alpha`,
/// `tan beta2 = (tan alpha + m0) / (m0 tan alpha - 1)`.
///
/// Requires the sectoriality condition `tan alpha > 1/m0` with `m0 > 0`.
pub fn theorem15_angles(alpha: f64, m0: f64) -> Result<(f64, f64)> {
    if !(m0 > 0.0 && m0.is_finite()) {
        return Err(Error::Domain(format!("need finite m0 > 0, got {m0}")));
    }
    let t = alpha.tan();
    if !(t > 1.0 / m0) {
        return Err(Error::Domain(format!(
            "sectoriality condition tan(alpha) > 1/m0 fails: tan({alpha}) = {t}, 1/m0 = {}",
            1.0 / m0
        )));
    }
    let b1 = (1.0 / t).atan();
    let b2 = ((t + m0) / (t * m0 - 1.0)).atan();
    let gap = b2 - b1;
    if !(gap > 0.0 && gap < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "beta2 - beta1 = {gap} lies outside (0, pi/2)"
        )));
    }
    Ok((b1, b2))
}

fn check_pair(b1: f64, b2: f64) -> Result<()> {
    if !(b1 >= -ANGLE_SLACK && b1 <= b2 + ANGLE_SLACK && b2 <= FRAC_PI_2 + ANGLE_SLACK) {
        return Err(Error::Domain(format!(
            "need 0 <= beta1 <= beta2 <= pi/2, got ({b1}, {b2})"
        )));
    }
    Ok(())
}

/// `tan beta = tan beta1 + 2 sqrt(tan beta1 tan beta2)`, for
/// `0 <= beta1 <= beta2 < pi/2`. At `beta1 = 0` this is 0 whatever `beta2`.
pub fn theorem16_beta(beta1: f64, beta2: f64) -> Result<f64> {
    check_pair(beta1, beta2)?;
    if beta2 >= FRAC_PI_2 - ANGLE_SLACK {
        return Err(Error::Domain("beta2 must be below pi/2".into()));
    }
    let (t1, t2) = (beta1.max(0.0).tan(), beta2.tan());
    Ok((t1 + 2.0 * (t1 * t2).sqrt()).atan())
}

/// `tan beta = tan beta2 + 2 sqrt(tan beta1 (tan beta2 - tan beta1))`, for
/// `beta1 <= beta2 < pi/2`.
pub fn beta_from_beta12_abt(beta1: f64, beta2: f64) -> Result<f64> {
    check_pair(beta1, beta2)?;
    if beta2 >= FRAC_PI_2 - ANGLE_SLACK {
        return Err(Error::Domain(
            "beta2 = pi/2 is excluded by the hypothesis of this formula".into(),
        ));
    }
    let (t1, t2) = (beta1.max(0.0).tan(), beta2.tan());
    Ok((t2 + 2.0 * (t1 * (t2 - t1).max(0.0)).sqrt()).atan())
}

/// Accretivity and sectoriality of the main operator `T_h` and of the
/// L-system, from `m0 = m_infinity(-0)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Accretivity {
    pub m0: LimitValue,
    /// `Re h >= -m0`
    pub main_accretive: bool,
    /// `Re h > -m0`
    pub main_sectorial: bool,
    /// Exact angle of `T_h`: `tan theta = Im h / (Re h + m0)`.
    pub theta: Option<f64>,
    pub tan_theta: Option<f64>,
    /// Smallest accretive `mu`: `(Im h)^2 / (m0 + Re h) + Re h`.
    pub mu_min: Option<f64>,
    pub accretive: Option<bool>,
    pub sectorial: Option<bool>,
    /// Accretive but not sectorial for any angle below pi/2.
    pub extremal: Option<bool>,
    /// Exact angle of the L-system where it is known (`mu = inf`).
    pub lsystem_angle: Option<f64>,
    pub note: Option<String>,
}

pub fn accretivity_and_sectoriality(sys: &LSystemDescriptor, m0: LimitValue) -> Accretivity {
    let h = sys.h();
    let m0v = match m0 {
        LimitValue::Finite(v) => v,
        LimitValue::PosInfinity => {
            return Accretivity {
                m0,
                main_accretive: true,
                main_sectorial: true,
                theta: None,
                tan_theta: None,
                mu_min: None,
                accretive: None,
                sectorial: None,
                extremal: None,
                lsystem_angle: None,
                note: Some(
                    "m0 is infinite: only the mu-independent statements about T_h are made".into(),
                ),
            };
        }
        LimitValue::NegInfinity => {
            return Accretivity {
                m0,
                main_accretive: false,
                main_sectorial: false,
                theta: None,
                tan_theta: None,
                mu_min: None,
                accretive: Some(false),
                sectorial: Some(false),
                extremal: Some(false),
                lsystem_angle: None,
                note: Some("m0 = -inf: the symmetric operator is not nonnegative".into()),
            };
        }
    };
    let shift = h.re + m0v;
    let main_accretive = shift >= 0.0;
    let main_sectorial = shift > 0.0;
    let (tan_theta, theta) = if main_sectorial {
        let t = h.im / shift;
        (Some(t), Some(t.atan()))
    } else if main_accretive {
        (Some(f64::INFINITY), Some(FRAC_PI_2))
    } else {
        (None, None)
    };
    let mu_min = main_sectorial.then(|| h.im * h.im / shift + h.re);
    let (accretive, sectorial, extremal, lsystem_angle) = match (sys.mu(), mu_min) {
        (ExtendedReal::Infinity, _) => (
            main_accretive,
            main_sectorial,
            main_accretive && !main_sectorial,
            theta.filter(|_| main_sectorial),
        ),
        (ExtendedReal::Finite(mu), Some(mm)) => {
            let eps = 1e-12 * mm.abs().max(1.0);
            let on_boundary = (mu - mm).abs() <= eps;
            let acc = mu >= mm || on_boundary;
            (acc, acc && !on_boundary, on_boundary, None)
        }
        (ExtendedReal::Finite(_), None) => (false, false, false, None),
    };
    Accretivity {
        m0,
        main_accretive,
        main_sectorial,
        theta,
        tan_theta,
        mu_min,
        accretive: Some(accretive),
        sectorial: Some(sectorial),
        extremal: Some(extremal),
        lsystem_angle,
        note: None,
    }
}
