//! Schrödinger L-systems `Theta_{mu,h}`: main operator `T_h` with boundary
//! condition `h y(ell) = y'(ell)` (`Im h > 0`), state-space operator
//! parameterised by the extended real `mu`, and one-dimensional channel.
//!
//! Transfer and impedance functions are expressed through `m_infinity`.

use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::json;

use crate::error::{Error, Result};
use crate::mfunc::{LimitValue, MFunctionEvaluator, Potential, PotentialSpec, SpectralPoint};
use crate::report::{complex_json, Check, Report};

const POLE_EPS: f64 = 1e-13;

/// A real number or the single projective point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            ExtendedReal::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, ExtendedReal::Infinity)
    }

    /// `+-inf` collapse onto the point at infinity; NaN is rejected.
    pub fn from_f64(v: f64) -> Result<Self> {
        if v.is_nan() {
            Err(Error::Precondition("extended real cannot be NaN".into()))
        } else if v.is_infinite() {
            Ok(ExtendedReal::Infinity)
        } else {
            Ok(ExtendedReal::Finite(v))
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::Infinity => f.write_str("inf"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedReal::Finite(v) => s.serialize_f64(*v),
            ExtendedReal::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match LimitValue::deserialize(d)? {
            LimitValue::Finite(v) => Ok(ExtendedReal::Finite(v)),
            _ => Ok(ExtendedReal::Infinity),
        }
    }
}

/// Boundary parameter `h` of the main operator, `Im h > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParam(Complex64);

impl BoundaryParam {
    pub fn new(h: Complex64) -> Result<Self> {
        if !(h.re.is_finite() && h.im.is_finite()) {
            return Err(Error::Precondition(format!("h = {h} is not finite")));
        }
        if h.im <= 0.0 {
            return Err(Error::Precondition(format!(
                "L-systems are built for dissipative T_h only (Im h > 0), got h = {h}"
            )));
        }
        Ok(Self(h))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

/// Coefficients of `delta(x - ell)` and `delta'(x - ell)` in the channel
/// vector, before the channel gain is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryVector {
    pub mu_coeff: f64,
    pub prime_coeff: f64,
}

/// Quasi-kernel parameter `xi = (mu Re h - |h|^2) / (mu - Re h)`.
///
/// This is an involution of the extended real line: `mu = Re h` and
/// `mu = inf` are exchanged.
pub fn quasi_kernel_parameter(mu: ExtendedReal, h: BoundaryParam) -> ExtendedReal {
    let h = h.0;
    match mu {
        ExtendedReal::Infinity => ExtendedReal::Finite(h.re),
        ExtendedReal::Finite(mu) => {
            let den = mu - h.re;
            if den.abs() <= f64::EPSILON * mu.abs().max(h.re.abs()) {
                ExtendedReal::Infinity
            } else {
                ExtendedReal::Finite((mu * h.re - h.norm_sqr()) / den)
            }
        }
    }
}

/// Descriptor of `Theta_{mu,h}`. Immutable apart from a write-once cache of
/// `m_infinity(-0)`.
#[derive(Debug)]
pub struct LSystemDescriptor {
    potential: Potential,
    mu: ExtendedReal,
    h: BoundaryParam,
    xi: ExtendedReal,
    channel_gain: f64,
    boundary_vector: BoundaryVector,
    m0: OnceLock<LimitValue>,
}

impl Clone for LSystemDescriptor {
    fn clone(&self) -> Self {
        let m0 = OnceLock::new();
        if let Some(v) = self.m0.get() {
            let _ = m0.set(*v);
        }
        Self {
            potential: self.potential.clone(),
            mu: self.mu,
            h: self.h,
            xi: self.xi,
            channel_gain: self.channel_gain,
            boundary_vector: self.boundary_vector,
            m0,
        }
    }
}

/// Build `Theta_{mu,h}`. `ell` must match the potential's left endpoint.
pub fn make_lsystem(
    potential: Potential,
    ell: f64,
    mu: ExtendedReal,
    h: Complex64,
) -> Result<LSystemDescriptor> {
    if ell != potential.ell() {
        return Err(Error::Precondition(format!(
            "ell = {ell} does not match the potential's left endpoint {}",
            potential.ell()
        )));
    }
    if let ExtendedReal::Finite(v) = mu {
        if !v.is_finite() {
            return Err(Error::Precondition(format!("mu = {v} is not finite")));
        }
    }
    let h = BoundaryParam::new(h)?;
    let (channel_gain, boundary_vector) = match mu {
        ExtendedReal::Infinity => (
            1.0,
            BoundaryVector {
                mu_coeff: 1.0,
                prime_coeff: 0.0,
            },
        ),
        ExtendedReal::Finite(m) => (
            h.0.im.sqrt() / (Complex64::new(m, 0.0) - h.0).norm(),
            BoundaryVector {
                mu_coeff: m,
                prime_coeff: 1.0,
            },
        ),
    };
    Ok(LSystemDescriptor {
        potential,
        mu,
        h,
        xi: quasi_kernel_parameter(mu, h),
        channel_gain,
        boundary_vector,
        m0: OnceLock::new(),
    })
}

impl LSystemDescriptor {
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn ell(&self) -> f64 {
        self.potential.ell()
    }

    pub fn mu(&self) -> ExtendedReal {
        self.mu
    }

    pub fn h(&self) -> Complex64 {
        self.h.0
    }

    pub fn xi(&self) -> ExtendedReal {
        self.xi
    }

    pub fn channel_gain(&self) -> f64 {
        self.channel_gain
    }

    pub fn boundary_vector(&self) -> BoundaryVector {
        self.boundary_vector
    }

    /// The system `Theta_{xi,h}` paired with this one through the
    /// quasi-kernel involution.
    pub fn dual(&self) -> Result<LSystemDescriptor> {
        make_lsystem(self.potential.clone(), self.ell(), self.xi, self.h.0)
    }

    /// `m_infinity(-0)`, computed with `eval` on first use and cached.
    pub fn m0(&self, eval: &MFunctionEvaluator) -> Result<LimitValue> {
        if let Some(v) = self.m0.get() {
            return Ok(*v);
        }
        let v = eval.m_infinity_limit_at_zero()?;
        Ok(*self.m0.get_or_init(|| v))
    }

    pub fn m0_cached(&self) -> Option<LimitValue> {
        self.m0.get().copied()
    }

    /// Seed the cache with a known value (e.g. from a closed form).
    pub fn with_m0(self, m0: LimitValue) -> Self {
        let _ = self.m0.set(m0);
        self
    }

    /// Impedance function for a given value `m = m_infinity(z)`.
    pub fn impedance_from_m(&self, m: Complex64, z: Complex64) -> Result<Complex64> {
        let h = self.h.0;
        let (num, den) = match self.mu {
            ExtendedReal::Infinity => (Complex64::new(h.im, 0.0), m + h.re),
            ExtendedReal::Finite(mu) => (
                (m + mu) * h.im,
                m * (mu - h.re) + (mu * h.re - h.norm_sqr()),
            ),
        };
        divide(num, den, z, "impedance denominator vanishes")
    }

    /// Transfer function for a given value `m = m_infinity(z)`.
    pub fn transfer_from_m(&self, m: Complex64, z: Complex64) -> Result<Complex64> {
        let h = self.h.0;
        let ratio = divide(m + h.conj(), m + h, z, "m_infinity + h vanishes")?;
        Ok(match self.mu {
            ExtendedReal::Infinity => ratio,
            ExtendedReal::Finite(mu) => {
                let mu = Complex64::new(mu, 0.0);
                (mu - h) / (mu - h.conj()) * ratio
            }
        })
    }
}

fn divide(num: Complex64, den: Complex64, z: Complex64, what: &str) -> Result<Complex64> {
    if den.norm() == 0.0 || den.norm() < POLE_EPS * num.norm() {
        return Err(Error::Pole {
            z,
            what: what.to_string(),
        });
    }
    Ok(num / den)
}

/// `V(z) = ((m + mu) Im h) / ((mu - Re h) m + mu Re h - |h|^2)`, or
/// `Im h / (m + Re h)` for `mu = inf`.
pub fn impedance(
    sys: &LSystemDescriptor,
    z: SpectralPoint,
    eval: &MFunctionEvaluator,
) -> Result<Complex64> {
    let m = eval.m_infinity(z)?;
    sys.impedance_from_m(m, z.0)
}

/// `W(z) = (mu - h)/(mu - conj h) * (m + conj h)/(m + h)`, or the second
/// factor alone for `mu = inf`.
pub fn transfer(
    sys: &LSystemDescriptor,
    z: SpectralPoint,
    eval: &MFunctionEvaluator,
) -> Result<Complex64> {
    let m = eval.m_infinity(z)?;
    sys.transfer_from_m(m, z.0)
}

/// `W = (1 - iV) / (1 + iV)`.
pub fn transfer_from_impedance(v: Complex64) -> Result<Complex64> {
    let i = Complex64::i();
    let one = Complex64::new(1.0, 0.0);
    divide(
        one - i * v,
        one + i * v,
        v,
        "1 + iV vanishes (z field holds V)",
    )
}

/// `V = i (W + 1)^{-1} (W - 1)`.
pub fn impedance_from_transfer(w: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    divide(
        Complex64::i() * (w - one),
        w + one,
        w,
        "W + 1 vanishes (z field holds W)",
    )
}

/// Residuals of the `mu <-> xi` duality at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityReport {
    pub z: Complex64,
    pub mu: f64,
    pub xi: ExtendedReal,
    pub impedance_mu: Complex64,
    pub impedance_xi: Complex64,
    pub transfer_mu: Complex64,
    pub transfer_xi: Complex64,
    /// `|V_mu + 1/V_xi|`
    pub impedance_residual: f64,
    /// `|W_mu + W_xi|`
    pub transfer_residual: f64,
}

pub fn duality_check(
    sys_mu: &LSystemDescriptor,
    z: SpectralPoint,
    eval: &MFunctionEvaluator,
) -> Result<DualityReport> {
    let mu = sys_mu
        .mu
        .finite()
        .ok_or_else(|| Error::Precondition("duality check needs a finite mu".into()))?;
    if sys_mu.xi.is_infinite() {
        return Err(Error::Precondition(format!(
            "mu = {mu} equals Re h; the dual system sits at infinity"
        )));
    }
    let dual = sys_mu.dual()?;
    let m = eval.m_infinity(z)?;
    let v_mu = sys_mu.impedance_from_m(m, z.0)?;
    let v_xi = dual.impedance_from_m(m, z.0)?;
    let w_mu = sys_mu.transfer_from_m(m, z.0)?;
    let w_xi = dual.transfer_from_m(m, z.0)?;
    let inv_v_xi = divide(
        Complex64::new(1.0, 0.0),
        v_xi,
        z.0,
        "dual impedance vanishes",
    )?;
    Ok(DualityReport {
        z: z.0,
        mu,
        xi: sys_mu.xi,
        impedance_mu: v_mu,
        impedance_xi: v_xi,
        transfer_mu: w_mu,
        transfer_xi: w_xi,
        impedance_residual: (v_mu + inv_v_xi).norm(),
        transfer_residual: (w_mu + w_xi).norm(),
    })
}

/// Randomised checks of the `mu <-> xi` duality, the `V <-> W` Möbius maps
/// and the realization identities, for one evaluator.
pub fn verify_duality_suite(eval: &MFunctionEvaluator, trials: usize, seed: u64) -> Report {
    let mut report = Report::new();
    let potential = eval.potential().clone();
    let ell = potential.ell();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let i = Complex64::i();
    let build = |mu: ExtendedReal, h: Complex64| make_lsystem(potential.clone(), ell, mu, h);

    // duality residuals over random (mu, h, z)
    let mut worst: Option<DualityReport> = None;
    let mut done = 0;
    let mut attempts = 0;
    while done < trials && attempts < 20 * trials.max(1) {
        attempts += 1;
        let h = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0));
        let mu: f64 = rng.gen_range(-5.0..5.0);
        let z = Complex64::new(rng.gen_range(-5.0..5.0), rng.gen_range(0.1..5.0));
        if (mu - h.re).abs() < 1e-3 {
            continue;
        }
        let r = build(ExtendedReal::Finite(mu), h)
            .and_then(|s| duality_check(&s, SpectralPoint(z), eval));
        match r {
            Ok(r) => {
                done += 1;
                let score = r.impedance_residual.max(r.transfer_residual);
                if worst.is_none_or(|w| score > w.impedance_residual.max(w.transfer_residual)) {
                    worst = Some(r);
                }
            }
            Err(Error::Pole { .. }) => {}
            Err(Error::AtPoint { source, .. }) if matches!(*source, Error::Pole { .. }) => {}
            Err(e) => {
                report.push(Check::errored("duality.residuals", &e));
                return report;
            }
        }
    }
    if let Some(w) = worst {
        let witness = json!({ "mu": w.mu, "xi": w.xi, "z": complex_json(w.z), "trials": done });
        report.push(
            Check::at_most("duality.impedance_residual", w.impedance_residual, 1e-10)
                .with_witness(witness.clone()),
        );
        report.push(
            Check::at_most("duality.transfer_residual", w.transfer_residual, 1e-10)
                .with_witness(witness),
        );
    }

    // involution of the quasi-kernel parameter
    let mut worst_inv = 0.0f64;
    for _ in 0..trials.max(20) {
        let h = BoundaryParam(Complex64::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.1..2.0),
        ));
        let mu: f64 = rng.gen_range(-50.0..50.0);
        let back = quasi_kernel_parameter(quasi_kernel_parameter(ExtendedReal::Finite(mu), h), h);
        let err = match back {
            ExtendedReal::Finite(b) => (b - mu).abs() / mu.abs().max(1.0),
            ExtendedReal::Infinity => f64::INFINITY,
        };
        worst_inv = worst_inv.max(err);
    }
    report.push(Check::at_most("duality.xi_involution", worst_inv, 1e-12));

    // transfer against the Möbius image of the impedance: 10 systems x 10 points
    let mut worst_mob = 0.0f64;
    let mut count = 0;
    'systems: for k in 0..10 {
        let h = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0));
        let mu = if k == 0 {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(rng.gen_range(-5.0..5.0))
        };
        let sys = match build(mu, h) {
            Ok(s) => s,
            Err(_) => continue 'systems,
        };
        for _ in 0..10 {
            let z = SpectralPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(0.1..5.0));
            let pair = impedance(&sys, z, eval)
                .and_then(|v| Ok((transfer_from_impedance(v)?, transfer(&sys, z, eval)?)));
            if let Ok((w_v, w)) = pair {
                worst_mob = worst_mob.max((w_v - w).norm() / w.norm().max(1.0));
                count += 1;
            }
        }
    }
    report.push(
        Check::at_most("mobius.transfer_vs_impedance", worst_mob, 1e-10)
            .with_witness(json!({ "points": count })),
    );

    let mut worst_rt = 0.0f64;
    for _ in 0..100 {
        let v = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        if let Ok(back) = transfer_from_impedance(v).and_then(impedance_from_transfer) {
            worst_rt = worst_rt.max((back - v).norm() / v.norm().max(1.0));
        }
    }
    report.push(Check::at_most("mobius.round_trip", worst_rt, 1e-12));

    // realization identities on a 10 x 10 grid and for five angles
    let grid: Vec<SpectralPoint> = (0..10)
        .flat_map(|a| {
            (0..10).map(move |b| {
                SpectralPoint::new(
                    -5.0 + a as f64 * 10.0 / 9.0,
                    10f64.powf(-1.0 + b as f64 * 2.0 / 9.0),
                )
            })
        })
        .collect();
    let realization = || -> Result<(f64, f64, f64)> {
        let s0 = build(ExtendedReal::Finite(0.0), i)?;
        let sinf = build(ExtendedReal::Infinity, i)?;
        let (mut e0, mut einf, mut ealpha) = (0.0f64, 0.0f64, 0.0f64);
        for &z in &grid {
            let m = eval.m_infinity(z)?;
            e0 = e0.max((s0.impedance_from_m(m, z.0)? + m).norm());
            einf = einf.max((sinf.impedance_from_m(m, z.0)? - 1.0 / m).norm());
        }
        for alpha in [0.3, 0.7, 1.0, 1.3, 2.5] {
            let s = build(ExtendedReal::Finite(f64::tan(alpha)), i)?;
            for &z in grid.iter().step_by(7) {
                let ma = eval.m_alpha(alpha, z)?;
                ealpha = ealpha.max((impedance(&s, z, eval)? + ma).norm());
            }
        }
        Ok((e0, einf, ealpha))
    };
    match realization() {
        Ok((e0, einf, ealpha)) => {
            report.push(Check::at_most("realization.mu=0", e0, 1e-10));
            report.push(Check::at_most("realization.mu=inf", einf, 1e-10));
            report.push(Check::at_most("realization.mu=tan_alpha", ealpha, 1e-10));
        }
        Err(e) => report.push(Check::errored("realization", &e)),
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DescriptorJson {
    ell: f64,
    potential: PotentialSpec,
    mu: ExtendedReal,
    h: ComplexJson,
    xi: ExtendedReal,
    channel_gain: f64,
}

impl LSystemDescriptor {
    pub fn to_json(&self) -> Result<String> {
        let doc = DescriptorJson {
            ell: self.ell(),
            potential: self.potential.to_spec()?,
            mu: self.mu,
            h: ComplexJson {
                re: self.h.0.re,
                im: self.h.0.im,
            },
            xi: self.xi,
            channel_gain: self.channel_gain,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Rebuild from JSON; the stored `xi` and `channel_gain` must agree with
    /// the values implied by `mu` and `h`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DescriptorJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let potential = Potential::try_from(doc.potential)?;
        let sys = make_lsystem(
            potential,
            doc.ell,
            doc.mu,
            Complex64::new(doc.h.re, doc.h.im),
        )?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        let xi_ok = match (sys.xi, doc.xi) {
            (ExtendedReal::Infinity, ExtendedReal::Infinity) => true,
            (ExtendedReal::Finite(a), ExtendedReal::Finite(b)) => close(a, b),
            _ => false,
        };
        if !xi_ok || !close(sys.channel_gain, doc.channel_gain) {
            return Err(Error::Parse(format!(
                "inconsistent descriptor: stored xi = {}, gain = {}; expected xi = {}, gain = {}",
                doc.xi, doc.channel_gain, sys.xi, sys.channel_gain
            )));
        }
        Ok(sys)
    }
}
