//! Limits of real sequences sampled along geometric abscissae.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A real number or one of the two infinities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LimitValue {
    Finite(f64),
    PosInfinity,
    NegInfinity,
}

impl LimitValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            LimitValue::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            LimitValue::Finite(v) => v,
            LimitValue::PosInfinity => f64::INFINITY,
            LimitValue::NegInfinity => f64::NEG_INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        !matches!(self, LimitValue::Finite(_))
    }
}

impl fmt::Display for LimitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LimitValue::Finite(v) => write!(f, "{v}"),
            LimitValue::PosInfinity => f.write_str("inf"),
            LimitValue::NegInfinity => f.write_str("-inf"),
        }
    }
}

impl Serialize for LimitValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LimitValue::Finite(v) => s.serialize_f64(*v),
            LimitValue::PosInfinity => s.serialize_str("inf"),
            LimitValue::NegInfinity => s.serialize_str("-inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LimitValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LimitValue::Finite(v)),
            Raw::Str(s) => match s.as_str() {
                "inf" | "+inf" => Ok(LimitValue::PosInfinity),
                "-inf" => Ok(LimitValue::NegInfinity),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}

/// Settings for [`extrapolate_limit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    /// Magnitudes beyond this are reported as infinite.
    pub overflow_guard: f64,
    /// Differences below `noise * max(1, |a|)` do not count against monotonicity.
    pub noise: f64,
    /// Final difference below `plateau * max(1, |a|)` ends the search.
    pub plateau: f64,
    /// Geometric ratios of successive differences at or above this value
    /// are read as divergence.
    pub divergence_ratio: f64,
}

impl Default for Extrapolation {
    fn default() -> Self {
        Self {
            overflow_guard: 1e12,
            noise: 1e-9,
            plateau: 1e-11,
            divergence_ratio: 0.95,
        }
    }
}

/// Extrapolate the limit of a monotone sequence sampled on a geometric
/// abscissa (e.g. `x_k = -10^{-k}`).
///
/// The final three samples are combined with Aitken's delta-squared rule,
/// which is exact for an error of the form `c r^k`, i.e. for any power-law
/// approach on a geometric grid.
pub fn extrapolate_limit(samples: &[f64], cfg: &Extrapolation) -> Result<LimitValue> {
    if samples.len() < 3 {
        return Err(Error::Extrapolation(format!(
            "need at least three samples, got {}",
            samples.len()
        )));
    }
    if let Some(v) = samples.iter().find(|v| v.is_nan()) {
        return Err(Error::Extrapolation(format!("sample is {v}")));
    }
    let last = *samples.last().unwrap();
    if last.is_infinite() || last.abs() > cfg.overflow_guard {
        return Ok(if last > 0.0 {
            LimitValue::PosInfinity
        } else {
            LimitValue::NegInfinity
        });
    }

    let mut sign = 0.0;
    for (k, w) in samples.windows(2).enumerate() {
        let d = w[1] - w[0];
        let floor = cfg.noise * w[1].abs().max(w[0].abs()).max(1.0);
        if d.abs() <= floor {
            continue;
        }
        if sign != 0.0 && d.signum() != sign {
            return Err(Error::Extrapolation(format!(
                "sequence is not monotone at sample {}: {} -> {}",
                k + 1,
                w[0],
                w[1]
            )));
        }
        sign = d.signum();
    }

    let n = samples.len();
    let (a, b, c) = (samples[n - 3], samples[n - 2], samples[n - 1]);
    let d1 = b - a;
    let d2 = c - b;
    let scale = c.abs().max(1.0);
    if d2.abs() <= cfg.plateau * scale {
        return Ok(LimitValue::Finite(c));
    }
    if d1 == 0.0 {
        return Err(Error::Extrapolation(
            "sequence restarted after a plateau".into(),
        ));
    }
    let r = d2 / d1;
    if r >= cfg.divergence_ratio {
        return Ok(if d2 > 0.0 {
            LimitValue::PosInfinity
        } else {
            LimitValue::NegInfinity
        });
    }
    Ok(LimitValue::Finite(c + d2 * r / (1.0 - r)))
}

/// Sample points `-10^{-k}`, `k = 1..=terms`.
pub fn towards_zero(terms: usize) -> Vec<f64> {
    (1..=terms).map(|k| -(10f64.powi(-(k as i32)))).collect()
}

/// Sample points `-10^{k}`, `k = 1..=terms`.
pub fn towards_minus_infinity(terms: usize) -> Vec<f64> {
    (1..=terms).map(|k| -(10f64.powi(k as i32))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lim(f: impl Fn(f64) -> f64, xs: &[f64]) -> Result<LimitValue> {
        let s: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
        extrapolate_limit(&s, &Extrapolation::default())
    }

    #[test]
    fn square_root_approach_is_exact() {
        let v = lim(|x| 2.0 + (-x).sqrt(), &towards_zero(8)).unwrap();
        assert!((v.as_f64() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn linear_approach() {
        let v = lim(|x| 1.0 - 3.0 * x, &towards_zero(5)).unwrap();
        assert!((v.as_f64() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn growth_is_divergence() {
        assert_eq!(
            lim(|x| (-x).sqrt(), &towards_minus_infinity(8)).unwrap(),
            LimitValue::PosInfinity
        );
        assert_eq!(
            lim(|x| x.abs().ln(), &towards_minus_infinity(8)).unwrap(),
            LimitValue::PosInfinity
        );
        assert_eq!(
            lim(|x| x, &towards_minus_infinity(8)).unwrap(),
            LimitValue::NegInfinity
        );
    }

    #[test]
    fn non_monotone_is_rejected() {
        let err = extrapolate_limit(&[1.0, 2.0, 1.5, 1.7], &Extrapolation::default());
        assert!(matches!(err, Err(Error::Extrapolation(_))));
    }

    #[test]
    fn constant_sequence_plateaus() {
        assert_eq!(
            extrapolate_limit(&[3.0; 4], &Extrapolation::default()).unwrap(),
            LimitValue::Finite(3.0)
        );
    }

    #[test]
    fn serde_encoding() {
        let v = vec![LimitValue::Finite(1.5), LimitValue::PosInfinity];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf"]"#);
        let back: Vec<LimitValue> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }
}
