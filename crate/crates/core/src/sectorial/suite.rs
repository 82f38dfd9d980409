use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::{
    accretivity_and_sectoriality, beta_from_beta12_abt, classify_s_beta12, classify_system,
    herglotz_test, kernel_s_beta_on, kernel_s_beta_test, negative_axis_limits, stieltjes_test,
    theorem15_angles, theorem16_beta, ClassifyOptions, GridSpec, KernelSampling, SampledFunction,
};
use crate::error::Result;
use crate::lsystem::{make_lsystem, transfer, ExtendedReal};
use crate::mfunc::{
    sqrt_upper, EvaluatorSettings, LimitValue, MFunctionEvaluator, Potential, SpectralPoint,
};
use crate::report::{complex_json, Check, Report};

type Step<'a> = Box<dyn Fn(&mut Report) -> Result<()> + 'a>;

/// Settings for [`verify_example_suite`].
#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub grid: GridSpec,
    pub settings: EvaluatorSettings,
    pub kernel: KernelSampling,
    pub tol: f64,
    /// Relative agreement required between numeric and closed-form `m`.
    pub oracle_tol: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            settings: EvaluatorSettings::default(),
            kernel: KernelSampling::default(),
            tol: 1e-9,
            oracle_tol: 1e-6,
        }
    }
}

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `-m_alpha` written out for `q = 2/x^2`:
/// `((s - iz + i) cos a + (s + i) sin a) / ((s - iz + i) sin a - (s + i) cos a)`.
fn neg_m_alpha_formula(alpha: f64, z: Complex64) -> Complex64 {
    let s = sqrt_upper(z);
    let n = s - I * z + I;
    let d = s + I;
    let (sa, ca) = alpha.sin_cos();
    (n * ca + d * sa) / (n * sa - d * ca)
}

/// Transfer function of `Theta_{inf,i}` written out:
/// `((1-i) s - iz + 1 + i) / ((1+i) s - iz - 1 + i)`.
fn transfer_inf_i_formula(z: Complex64) -> Complex64 {
    let s = sqrt_upper(z);
    let one = Complex64::new(1.0, 0.0);
    ((one - I) * s - I * z + one + I) / ((one + I) * s - I * z - one + I)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

fn worst_of<T: Copy>(items: impl IntoIterator<Item = (f64, T)>) -> Option<(f64, T)> {
    items
        .into_iter()
        .fold(None, |acc: Option<(f64, T)>, (e, t)| match acc {
            Some((w, _)) if w >= e => acc,
            _ => Some((e, t)),
        })
}

fn oracle_checks(
    report: &mut Report,
    closed: &MFunctionEvaluator,
    numeric: &MFunctionEvaluator,
    opts: &SuiteOptions,
) {
    let complex = opts.grid.complex_points();
    let real: Vec<Complex64> = opts
        .grid
        .negative_real_points()
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    for (label, points) in [("complex", complex), ("negative_real", real)] {
        let name = format!("example.oracle.{label}");
        let errs: Result<Vec<(f64, Complex64)>> = points
            .par_iter()
            .map(|&z| {
                let c = closed.m_infinity(SpectralPoint(z))?;
                let n = numeric.m_infinity(SpectralPoint(z))?;
                Ok((rel(n, c), z))
            })
            .collect();
        match errs {
            Ok(errs) => {
                if let Some((e, z)) = worst_of(errs) {
                    report.push(
                        Check::at_most(name, e, opts.oracle_tol)
                            .with_witness(json!({ "z": complex_json(z), "points": points.len() })),
                    );
                }
            }
            Err(e) => report.push(Check::errored(name, &e)),
        }
    }
}

fn limit_checks(report: &mut Report, closed: &MFunctionEvaluator, numeric: &MFunctionEvaluator) {
    for (label, e) in [("closed_form", closed), ("numeric", numeric)] {
        let name = format!("example.m0.{label}");
        report.push_result(
            &name,
            e.m_infinity_limit_at_zero()
                .map(|l| Check::close(name.clone(), l.as_f64(), 1.0, 1e-4)),
        );
        let name = format!("example.m_minus_inf.{label}");
        report.push_result(
            &name,
            e.m_infinity_limit_at_minus_infinity().map(|l| {
                Check::label(
                    name.clone(),
                    &l.to_string(),
                    &LimitValue::PosInfinity.to_string(),
                )
            }),
        );
    }
    report.push_result(
        "example.m_at_minus_1e6",
        numeric
            .m_infinity(SpectralPoint::real(-1e6))
            .map(|m| Check::at_least("example.m_at_minus_1e6", m.re, 1e3)),
    );
}

fn accretivity_checks(report: &mut Report) -> Result<()> {
    let p = Potential::bessel_three_halves;
    let m0 = LimitValue::Finite(1.0);
    let a = accretivity_and_sectoriality(&make_lsystem(p(), 1.0, ExtendedReal::Infinity, I)?, m0);
    report.push(Check::close(
        "example.main_angle.tan_theta",
        a.tan_theta.unwrap_or(f64::NAN),
        1.0,
        0.0,
    ));
    report.push(Check::close(
        "example.lsystem_inf_i.angle",
        a.lsystem_angle.unwrap_or(f64::NAN),
        FRAC_PI_4,
        1e-15,
    ));
    report.push(Check::close(
        "example.mu_min",
        a.mu_min.unwrap_or(f64::NAN),
        1.0,
        1e-15,
    ));
    for (mu, acc, ext) in [(0.5, false, false), (1.0, true, true), (2.0, true, false)] {
        let a =
            accretivity_and_sectoriality(&make_lsystem(p(), 1.0, ExtendedReal::Finite(mu), I)?, m0);
        report.push(Check::flag(
            format!("example.accretive.mu={mu}"),
            a.accretive == Some(true),
            acc,
        ));
        report.push(Check::flag(
            format!("example.extremal.mu={mu}"),
            a.extremal == Some(true),
            ext,
        ));
    }
    Ok(())
}

fn classification_checks(
    report: &mut Report,
    numeric: &MFunctionEvaluator,
    opts: &SuiteOptions,
) -> Result<()> {
    let sys = make_lsystem(
        Potential::bessel_three_halves(),
        1.0,
        ExtendedReal::Infinity,
        I,
    )?;
    // the kernel test runs separately on the closed form
    let copts = ClassifyOptions {
        grid: opts.grid.clone(),
        tol: opts.tol,
        kernel: None,
        limit_terms: opts.settings.limit_terms,
    };
    let c = classify_system(&sys, numeric, &copts)?;
    report.push(Check::flag(
        "example.inv_m.herglotz",
        c.is_herglotz.pass,
        true,
    ));
    report.push(Check::flag(
        "example.inv_m.stieltjes",
        c.is_stieltjes.pass,
        true,
    ));
    report.push(Check::at_most(
        "example.inv_m.beta1",
        c.beta1.unwrap_or(f64::NAN),
        1e-3,
    ));
    report.push(Check::close(
        "example.inv_m.tan_beta2",
        c.beta2.map_or(f64::NAN, f64::tan),
        1.0,
        1e-3,
    ));
    report.push(Check::label(
        "example.inv_m.class",
        &c.class_label(),
        "S^{0,pi/4}",
    ));
    // S^{0,beta}: arctan f(-0) is the exact angle of T_i
    let theta = c.accretivity.theta.unwrap_or(f64::NAN);
    report.push(Check::close(
        "example.inv_m.beta2_equals_theta",
        c.beta2.unwrap_or(f64::NAN),
        theta,
        1e-3,
    ));
    Ok(())
}

fn kernel_checks(
    report: &mut Report,
    closed: &MFunctionEvaluator,
    opts: &SuiteOptions,
) -> Result<()> {
    let f = SampledFunction::inv_m_infinity(closed);
    let single = kernel_s_beta_on(&f, FRAC_PI_4, &[I], opts.kernel.psd_tol)?;
    report.push(Check::close(
        "example.kernel.single_point",
        single.min_eigenvalue,
        0.121_320_343_559_643,
        1e-6,
    ));
    for (label, beta, expected) in [
        ("pi/4", FRAC_PI_4, true),
        ("pi/2", FRAC_PI_2, true),
        ("pi/100", PI / 100.0, false),
    ] {
        let r = kernel_s_beta_test(&f, beta, &opts.kernel)?;
        report.push(
            Check::flag(format!("example.kernel.psd.beta={label}"), r.psd, expected).with_witness(
                json!({
                    "scaled_min_eigenvalue": r.scaled_min(),
                    "points": r.points.iter().map(|z| complex_json(*z)).collect::<Vec<_>>(),
                    "trials": r.trials,
                }),
            ),
        );
    }
    let zero = kernel_s_beta_on(
        &SampledFunction::zero(),
        FRAC_PI_4,
        &[I, 2.0 * I],
        opts.kernel.psd_tol,
    )?;
    report.push(Check::close(
        "example.kernel.zero_function",
        zero.min_eigenvalue,
        0.0,
        0.0,
    ));
    Ok(())
}

fn trichotomy_checks(
    report: &mut Report,
    closed: &MFunctionEvaluator,
    opts: &SuiteOptions,
) -> Result<()> {
    let complex = opts.grid.complex_points();
    let real = opts.grid.negative_real_points();
    let mut cases = vec![
        (
            "-m_inf".to_string(),
            SampledFunction::neg_m_infinity(closed),
            false,
        ),
        (
            "1/m_inf".to_string(),
            SampledFunction::inv_m_infinity(closed),
            true,
        ),
    ];
    for t in [0.5, 1.0, 2.0] {
        cases.push((
            format!("-m_alpha.tan={t}"),
            SampledFunction::neg_m_alpha(closed, f64::atan(t)),
            t >= 1.0,
        ));
    }
    for (label, f, expected) in cases {
        let v = stieltjes_test(&f, &complex, &real, opts.tol)?;
        let mut check = Check::flag(format!("example.trichotomy.{label}"), v.pass, expected);
        if let Some(z) = v.witness {
            check = check.with_witness(json!({
                "z": complex_json(z),
                "condition": v.condition,
                "margin": v.worst_margin,
            }));
        }
        report.push(check);
    }
    let neg_m = herglotz_test(&SampledFunction::neg_m_infinity(closed), &complex, opts.tol)?;
    report.push(Check::flag("example.herglotz.-m_inf", neg_m.pass, true));
    let m = herglotz_test(&SampledFunction::m_infinity(closed), &complex, opts.tol)?;
    report.push(Check::flag("example.herglotz.m_inf", m.pass, false));
    Ok(())
}

fn theorem15_checks(report: &mut Report, numeric: &MFunctionEvaluator) -> Result<()> {
    let theta = FRAC_PI_4;
    for k in 0..7 {
        let alpha = 0.9 + 0.1 * k as f64;
        let tag = format!("example.theorem15.alpha={alpha:.1}");
        let (e1, e2) = theorem15_angles(alpha, 1.0)?;
        report.push(Check::close(
            format!("{tag}.exact_gap"),
            e2 - e1,
            theta,
            1e-9,
        ));
        let f = SampledFunction::neg_m_alpha(numeric, alpha);
        match negative_axis_limits(&f, numeric.settings().limit_terms).and_then(classify_s_beta12) {
            Ok((b1, b2)) => {
                report.push(Check::close(format!("{tag}.beta1"), b1, e1, 1e-3));
                report.push(Check::close(format!("{tag}.beta2"), b2, e2, 1e-3));
                report.push(Check::close(format!("{tag}.gap"), b2 - b1, FRAC_PI_4, 1e-3));
            }
            Err(e) => report.push(Check::errored(tag, &e)),
        }
    }
    Ok(())
}

fn formula_checks(
    report: &mut Report,
    closed: &MFunctionEvaluator,
    numeric: &MFunctionEvaluator,
    opts: &SuiteOptions,
) -> Result<()> {
    let complex = opts.grid.complex_points();
    for alpha in [
        PI / 6.0,
        FRAC_PI_4,
        PI / 3.0,
        FRAC_PI_2,
        2.0 * PI / 3.0,
        5.0 * PI / 6.0,
    ] {
        let tag = format!("example.neg_m_alpha_formula.alpha={alpha:.6}");
        let errs: Result<Vec<(f64, f64, Complex64)>> = complex
            .par_iter()
            .map(|&z| {
                let formula = neg_m_alpha_formula(alpha, z);
                let lft = -closed.m_alpha(alpha, SpectralPoint(z))?;
                let num = -numeric.m_alpha(alpha, SpectralPoint(z))?;
                Ok((rel(lft, formula), rel(num, formula), z))
            })
            .collect();
        let errs = errs?;
        let (e, z) = worst_of(errs.iter().map(|(a, _, z)| (*a, *z))).expect("grid is non-empty");
        report.push(
            Check::at_most(format!("{tag}.closed"), e, 1e-10)
                .with_witness(json!({ "z": complex_json(z) })),
        );
        let (e, z) = worst_of(errs.iter().map(|(_, b, z)| (*b, *z))).expect("grid is non-empty");
        report.push(
            Check::at_most(format!("{tag}.numeric"), e, 1e-6)
                .with_witness(json!({ "z": complex_json(z) })),
        );
    }

    let sys = make_lsystem(
        Potential::bessel_three_halves(),
        1.0,
        ExtendedReal::Infinity,
        I,
    )?;
    let w = transfer(&sys, SpectralPoint(I), closed)?;
    report.push(Check::close_complex(
        "example.transfer_inf_i.at_i",
        w,
        transfer_inf_i_formula(I),
        1e-10,
    ));
    let errs = complex
        .iter()
        .map(|&z| {
            Ok((
                rel(
                    transfer(&sys, SpectralPoint(z), closed)?,
                    transfer_inf_i_formula(z),
                ),
                z,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (e, z) = worst_of(errs).expect("grid is non-empty");
    report.push(
        Check::at_most("example.transfer_inf_i.grid", e, 1e-10)
            .with_witness(json!({ "z": complex_json(z) })),
    );
    let v = crate::lsystem::impedance(&sys, SpectralPoint(I), closed)?;
    report.push(Check::close_complex(
        "example.impedance_inf_i.at_i",
        v,
        Complex64::new(0.707_106_781_186_547_5, 0.292_893_218_813_452_5),
        1e-6,
    ));

    let (b1, b2) = (PI / 6.0, 5.0 * PI / 12.0);
    let t16 = theorem16_beta(b1, b2)?.tan();
    let abt = beta_from_beta12_abt(b1, b2)?.tan();
    report.push(Check::close(
        "example.angles.theorem16_tan",
        t16,
        3.513_129_919_217_37,
        1e-6,
    ));
    report.push(Check::close(
        "example.angles.abt_tan",
        abt,
        6.431_211_569_765_84,
        1e-6,
    ));
    report.push(Check::flag(
        "example.angles.formulas_differ",
        (t16 - abt).abs() > 1.0,
        true,
    ));
    Ok(())
}

/// The full pipeline for `q = 2/x^2` on `[1, inf)`: numeric `m` against the
/// closed form, real-axis limits, classification of `1/m` into
/// `S^{0,pi/4}`, the kernel tests, the Stieltjes trichotomy, the class
/// angles of `-m_alpha`, and the written-out impedance/transfer formulas.
pub fn verify_example_suite(opts: &SuiteOptions) -> Report {
    let mut report = Report::new();
    let closed = match MFunctionEvaluator::closed_form(Potential::bessel_three_halves()) {
        Ok(e) => e,
        Err(e) => {
            report.push(Check::errored("example.setup", &e));
            return report;
        }
    };
    let numeric = match MFunctionEvaluator::numeric(Potential::bessel_three_halves(), opts.settings)
    {
        Ok(e) => e,
        Err(e) => {
            report.push(Check::errored("example.setup", &e));
            return report;
        }
    };
    if let Err(e) = opts.grid.validate() {
        report.push(Check::errored("example.grid", &e));
        return report;
    }

    oracle_checks(&mut report, &closed, &numeric, opts);
    limit_checks(&mut report, &closed, &numeric);
    let steps: [(&str, Step); 6] = [
        ("example.accretivity", Box::new(accretivity_checks)),
        (
            "example.classification",
            Box::new(|r: &mut Report| classification_checks(r, &numeric, opts)),
        ),
        (
            "example.kernel",
            Box::new(|r: &mut Report| kernel_checks(r, &closed, opts)),
        ),
        (
            "example.trichotomy",
            Box::new(|r: &mut Report| trichotomy_checks(r, &closed, opts)),
        ),
        (
            "example.theorem15",
            Box::new(|r: &mut Report| theorem15_checks(r, &numeric)),
        ),
        (
            "example.formulas",
            Box::new(|r: &mut Report| formula_checks(r, &closed, &numeric, opts)),
        ),
    ];
    for (name, step) in steps {
        if let Err(e) = step(&mut report) {
            report.push(Check::errored(name, &e));
        }
    }
    report
}
