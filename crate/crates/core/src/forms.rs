//! Quadratic forms of the dissipative Bessel L-system `Theta_{inf,i}` with
//! `q = 2/x^2` on `[1, inf)`:
//!
//! `Re (A y, y) = ||y'||^2 + 2 ||y/x||^2`, `Im (A y, y) = |y(1)|^2`.
//!
//! The sector inequality `Re >= |Im|` holds with equality exactly on
//! multiples of `1/x`.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::mfunc::parse_two_columns;
use crate::report::{Check, Report};

/// One summand of an analytic test function.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Term {
    /// `sum_j coeffs[j] (x-1)^j * exp(-decay (x-1))`, `decay > 0`.
    ExpPoly { coeffs: Vec<f64>, decay: f64 },
    /// `amplitude * x^(-exponent)`, `exponent > 1/2`.
    Power { amplitude: f64, exponent: f64 },
}

impl Term {
    fn value_and_slope(&self, x: f64) -> (f64, f64) {
        match self {
            Term::ExpPoly { coeffs, decay } => {
                let s = x - 1.0;
                let e = (-decay * s).exp();
                if e == 0.0 {
                    return (0.0, 0.0);
                }
                let mut p = 0.0;
                let mut dp = 0.0;
                for a in coeffs.iter().rev() {
                    dp = dp * s + p;
                    p = p * s + a;
                }
                (p * e, (dp - decay * p) * e)
            }
            Term::Power {
                amplitude,
                exponent,
            } => {
                let y = amplitude * x.powf(-exponent);
                (y, -exponent * y / x)
            }
        }
    }
}

/// A real test function on `[1, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Analytic {
        terms: Vec<Term>,
    },
    /// Samples on a grid starting at 1; the tail beyond the last point is
    /// extrapolated as a power law.
    Sampled {
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

impl TestFunction {
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        for t in &terms {
            match t {
                Term::ExpPoly { coeffs, decay } => {
                    if !(*decay > 0.0 && decay.is_finite()) {
                        return Err(Error::Precondition(format!(
                            "exponential decay must be positive, got {decay}"
                        )));
                    }
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        return Err(Error::Precondition("non-finite coefficient".into()));
                    }
                }
                Term::Power {
                    amplitude,
                    exponent,
                } => {
                    if !(*exponent > 0.5 && exponent.is_finite()) {
                        return Err(Error::Precondition(format!(
                            "x^(-p) is not square integrable for p = {exponent}"
                        )));
                    }
                    if !amplitude.is_finite() {
                        return Err(Error::Precondition("non-finite amplitude".into()));
                    }
                }
            }
        }
        Ok(TestFunction::Analytic { terms })
    }

    /// `y = 1/x`, the equality case.
    pub fn reciprocal() -> Self {
        TestFunction::Analytic {
            terms: vec![Term::Power {
                amplitude: 1.0,
                exponent: 1.0,
            }],
        }
    }

    pub fn exp_decay(c: f64) -> Result<Self> {
        Self::new(vec![Term::ExpPoly {
            coeffs: vec![1.0],
            decay: c,
        }])
    }

    pub fn power(p: f64) -> Result<Self> {
        Self::new(vec![Term::Power {
            amplitude: 1.0,
            exponent: p,
        }])
    }

    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() || grid.len() < 2 {
            return Err(Error::Precondition(
                "sampled test function needs at least two (x, y) pairs".into(),
            ));
        }
        if grid[0] != 1.0 {
            return Err(Error::Precondition(format!(
                "sampled grid must start at x = 1, got {}",
                grid[0]
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Precondition(
                "sampled grid must be strictly ascending".into(),
            ));
        }
        if grid.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Precondition("sampled data must be finite".into()));
        }
        Ok(TestFunction::Sampled { grid, values })
    }

    /// Two-column text file `x y(x)`, `#` comments.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (x, y) = parse_two_columns(&text)?;
        Self::sampled(x, y)
    }

    pub fn value_at_one(&self) -> f64 {
        match self {
            TestFunction::Analytic { terms } => {
                terms.iter().map(|t| t.value_and_slope(1.0).0).sum()
            }
            TestFunction::Sampled { values, .. } => values[0],
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Sampled { grid, .. } => write!(f, "sampled[{} points]", grid.len()),
            TestFunction::Analytic { terms } => {
                if terms.is_empty() {
                    return f.write_str("0");
                }
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" + ")?;
                    }
                    match t {
                        Term::Power {
                            amplitude,
                            exponent,
                        } if *amplitude == 1.0 && *exponent == 1.0 => f.write_str("1/x")?,
                        Term::Power {
                            amplitude,
                            exponent,
                        } => write!(f, "{amplitude}*x^(-{exponent})")?,
                        Term::ExpPoly { coeffs, decay } => {
                            f.write_str("(")?;
                            for (j, a) in coeffs.iter().enumerate() {
                                if j > 0 {
                                    f.write_str(" + ")?;
                                }
                                match j {
                                    0 => write!(f, "{a}")?,
                                    1 => write!(f, "{a}*(x-1)")?,
                                    _ => write!(f, "{a}*(x-1)^{j}")?,
                                }
                            }
                            write!(f, ")*exp(-{decay}*(x-1))")?;
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Values of both forms on one test function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FormReport {
    /// `||y'||^2 + 2 ||y/x||^2`
    pub re_form: f64,
    /// `|y(1)|^2`
    pub im_form: f64,
    /// `im_form / re_form`, 0 for the zero function.
    pub ratio: f64,
    /// Quadrature (and, for sampled data, tail) error estimate on `re_form`.
    pub error_estimate: f64,
}

/// `int_1^inf g(x) dx` through `x = 1/t`; relative accuracy about `1e-10`.
fn integrate_half_line(g: impl Fn(f64) -> f64) -> Result<(f64, f64)> {
    let h = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let x = 1.0 / t;
        if !x.is_finite() {
            return 0.0;
        }
        g(x) / (t * t)
    };
    let rough = quadrature::double_exponential::integrate(h, 0.0, 1.0, 1e-6);
    if !rough.integral.is_finite() {
        return Err(Error::Divergence("form integrand is not integrable".into()));
    }
    if rough.integral == 0.0 {
        return Ok((0.0, rough.error_estimate));
    }
    let target = 1e-12 * rough.integral.abs();
    let fine = quadrature::double_exponential::integrate(h, 0.0, 1.0, target);
    if !fine.integral.is_finite() || fine.error_estimate > 1e-8 * fine.integral.abs() {
        return Err(Error::Divergence(format!(
            "quadrature did not converge: integral {} with error {}",
            fine.integral, fine.error_estimate
        )));
    }
    Ok((fine.integral, fine.error_estimate))
}

fn sampled_re_form(grid: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    let n = grid.len();
    let slope = |i: usize| -> f64 {
        if i == 0 {
            (values[1] - values[0]) / (grid[1] - grid[0])
        } else if i == n - 1 {
            (values[n - 1] - values[n - 2]) / (grid[n - 1] - grid[n - 2])
        } else {
            // second-order three-point rule on a non-uniform grid
            let (h0, h1) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
            (-h1 / (h0 * (h0 + h1))) * values[i - 1]
                + ((h1 - h0) / (h0 * h1)) * values[i]
                + (h0 / (h1 * (h0 + h1))) * values[i + 1]
        }
    };
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let d = slope(i);
            d * d + 2.0 * (values[i] / grid[i]).powi(2)
        })
        .collect();
    let trap = |step: usize| -> f64 {
        let idx: Vec<usize> = (0..n).step_by(step).collect();
        idx.windows(2)
            .map(|w| 0.5 * (g[w[0]] + g[w[1]]) * (grid[w[1]] - grid[w[0]]))
            .sum()
    };
    let body = trap(1);
    let discretization = if n >= 5 && (n - 1).is_multiple_of(2) {
        (body - trap(2)).abs() / 3.0
    } else {
        0.0
    };

    let (xa, xb, ya, yb) = (grid[n - 2], grid[n - 1], values[n - 2], values[n - 1]);
    let tail = if yb == 0.0 && ya == 0.0 {
        0.0
    } else {
        if ya == 0.0 || yb == 0.0 || ya.signum() != yb.signum() || yb.abs() >= ya.abs() {
            return Err(Error::Divergence(format!(
                "sampled function does not decay at its last grid point x = {xb}"
            )));
        }
        let p = -(yb / ya).ln() / (xb / xa).ln();
        if p <= 0.5 {
            return Err(Error::Divergence(format!(
                "sampled tail decays like x^(-{p:.3}), which is not square integrable"
            )));
        }
        yb * yb * (p * p + 2.0) / ((2.0 * p + 1.0) * xb)
    };
    Ok((body + tail, discretization + tail))
}

pub fn evaluate_form(y: &TestFunction) -> Result<FormReport> {
    let (re_form, error_estimate) = match y {
        TestFunction::Analytic { terms } => integrate_half_line(|x| {
            let (v, d) = terms.iter().fold((0.0, 0.0), |(v, d), t| {
                let (tv, td) = t.value_and_slope(x);
                (v + tv, d + td)
            });
            d * d + 2.0 * (v / x) * (v / x)
        })?,
        TestFunction::Sampled { grid, values } => sampled_re_form(grid, values)?,
    };
    let y1 = y.value_at_one();
    let im_form = y1 * y1;
    let ratio = if im_form == 0.0 {
        0.0
    } else if re_form > 0.0 {
        im_form / re_form
    } else {
        return Err(Error::Divergence(format!(
            "Re form is {re_form} while |y(1)|^2 = {im_form}"
        )));
    };
    Ok(FormReport {
        re_form,
        im_form,
        ratio,
        error_estimate,
    })
}

/// One-parameter families scanned by [`sharpness_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `1/x + eps e^{-x}`, `eps` in `[-0.1, 0.1]`.
    ReciprocalPerturbation,
    /// `e^{-c (x-1)}`, `c` in `[0.1, 10]`.
    ExponentialDecay,
    /// `x^{-p}`, `p` in `[0.55, 5]`.
    Power,
}

impl Family {
    pub const ALL: [Family; 3] = [
        Family::ReciprocalPerturbation,
        Family::ExponentialDecay,
        Family::Power,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::ReciprocalPerturbation => "reciprocal_perturbation",
            Family::ExponentialDecay => "exponential_decay",
            Family::Power => "power",
        }
    }

    pub fn range(self) -> (f64, f64) {
        match self {
            Family::ReciprocalPerturbation => (-0.1, 0.1),
            Family::ExponentialDecay => (0.1, 10.0),
            Family::Power => (0.55, 5.0),
        }
    }

    fn log_scaled(self) -> bool {
        matches!(self, Family::ExponentialDecay)
    }

    pub fn member(self, t: f64) -> Result<TestFunction> {
        match self {
            Family::ReciprocalPerturbation => TestFunction::new(vec![
                Term::Power {
                    amplitude: 1.0,
                    exponent: 1.0,
                },
                Term::ExpPoly {
                    coeffs: vec![t * (-1f64).exp()],
                    decay: 1.0,
                },
            ]),
            Family::ExponentialDecay => TestFunction::exp_decay(t),
            Family::Power => TestFunction::power(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessResult {
    pub family: Family,
    pub best_parameter: f64,
    pub best_ratio: f64,
    pub evaluations: usize,
}

/// Maximise the ratio over a family: a grid scan followed by golden-section
/// refinement around the best grid point.
pub fn sharpness_search(family: Family, grid_points: usize) -> Result<SharpnessResult> {
    let grid_points = grid_points.max(3);
    let (lo, hi) = family.range();
    let (a0, b0) = if family.log_scaled() {
        (lo.ln(), hi.ln())
    } else {
        (lo, hi)
    };
    let param = |s: f64| if family.log_scaled() { s.exp() } else { s };
    let mut evaluations = 0;
    let mut ratio_at = |s: f64| -> Result<f64> {
        evaluations += 1;
        Ok(evaluate_form(&family.member(param(s))?)?.ratio)
    };

    let step = (b0 - a0) / (grid_points - 1) as f64;
    let mut best = (a0, f64::NEG_INFINITY);
    for k in 0..grid_points {
        let s = a0 + step * k as f64;
        let r = ratio_at(s)?;
        if r > best.1 {
            best = (s, r);
        }
    }

    let (mut a, mut b) = ((best.0 - step).max(a0), (best.0 + step).min(b0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ratio_at(c)?, ratio_at(d)?);
    while (b - a) > 1e-9 * (1.0 + a.abs().max(b.abs())) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ratio_at(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ratio_at(d)?;
        }
    }
    for (s, r) in [(c, fc), (d, fd)] {
        if r > best.1 {
            best = (s, r);
        }
    }
    Ok(SharpnessResult {
        family,
        best_parameter: param(best.0),
        best_ratio: best.1,
        evaluations,
    })
}

/// Random admissible test functions: one to three terms mixing polynomial
/// times exponential pieces and power laws.
pub fn random_test_functions(seed: u64, count: usize) -> Vec<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n_terms = rng.gen_range(1..=3);
            let terms = (0..n_terms)
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        let degree = rng.gen_range(0..=3);
                        Term::ExpPoly {
                            coeffs: (0..=degree).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                            decay: rng.gen_range(0.2f64.ln()..5f64.ln()).exp(),
                        }
                    } else {
                        Term::Power {
                            amplitude: rng.gen_range(-2.0..2.0),
                            exponent: rng.gen_range(0.6..4.0),
                        }
                    }
                })
                .collect();
            TestFunction::new(terms).expect("generated parameters are admissible")
        })
        .collect()
}

/// `Re - Im >= -1e-9 Re` over random functions, the equality witness, and
/// the family maxima.
pub fn verify_forms_suite(seed: u64, count: usize) -> Report {
    let mut report = Report::new();

    report.push_result(
        "forms.equality_witness",
        evaluate_form(&TestFunction::reciprocal()).map(|r| {
            Check::close("forms.equality_witness", r.ratio, 1.0, 1e-6)
                .with_witness(json!({ "y": "1/x", "re_form": r.re_form, "im_form": r.im_form }))
        }),
    );
    report.push_result(
        "forms.exp_decay_re_form",
        TestFunction::exp_decay(1.0)
            .and_then(|y| evaluate_form(&y))
            .map(|r| {
                Check::close(
                    "forms.exp_decay_re_form",
                    r.re_form,
                    1.054_685_532_447_11,
                    1e-9,
                )
            }),
    );
    report.push_result(
        "forms.zero_sampled",
        TestFunction::sampled(vec![1.0, 2.0, 3.0], vec![0.0; 3])
            .and_then(|y| evaluate_form(&y))
            .map(|r| Check::at_most("forms.zero_sampled", r.re_form.abs() + r.im_form, 0.0)),
    );

    for family in Family::ALL {
        let name = format!("forms.sharpness.{}", family.name());
        match sharpness_search(family, 41) {
            Ok(s) => {
                let witness = json!({ "parameter": s.best_parameter });
                report.push(
                    Check::at_most(format!("{name}.upper"), s.best_ratio, 1.0 + 1e-9)
                        .with_witness(witness.clone()),
                );
                let attained = match family {
                    Family::ExponentialDecay => Check::close(
                        format!("{name}.max"),
                        s.best_ratio,
                        0.970_836_641_850_499,
                        1e-8,
                    ),
                    _ => Check::at_least(format!("{name}.max"), s.best_ratio, 1.0 - 1e-6),
                };
                report.push(attained.with_witness(witness));
            }
            Err(e) => report.push(Check::errored(name, &e)),
        }
    }

    let functions = random_test_functions(seed, count);
    let mut worst: Option<(usize, FormReport)> = None;
    let mut failure = None;
    for (i, y) in functions.iter().enumerate() {
        match evaluate_form(y) {
            Ok(r) => {
                if worst.is_none_or(|(_, w)| r.ratio > w.ratio) {
                    worst = Some((i, r));
                }
            }
            Err(e) => {
                failure = Some((i, e));
                break;
            }
        }
    }
    match (failure, worst) {
        (Some((i, e)), _) => report.push(
            Check::errored("forms.random.max_ratio", &e)
                .with_witness(json!({ "index": i, "y": functions[i].to_string() })),
        ),
        (None, Some((i, r))) => report.push(
            Check::at_most("forms.random.max_ratio", r.ratio, 1.0 + 1e-9).with_witness(json!({
                "index": i,
                "count": count,
                "y": functions[i].to_string(),
            })),
        ),
        (None, None) => {}
    }
    report
}
