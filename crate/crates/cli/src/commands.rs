use std::f64::consts::PI;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde_json::{json, Map, Value as Json};
use weyl_core::forms::verify_forms_suite;
use weyl_core::lsystem::{make_lsystem, verify_duality_suite};
use weyl_core::report::complex_json;
use weyl_core::sectorial::{
    angle_label, classify_system, theorem15_angles, verify_example_suite, ClassifyOptions,
    KernelSampling, SuiteOptions,
};
use weyl_core::{Check, Complex64, ExtendedReal, MEstimate, Report, SpectralPoint};

use crate::expr::{parse_complex, parse_real};
use crate::run::{parse_system, Context_, Format};

/// What a command produced: the rendered document and whether every check
/// passed.
pub struct Outcome {
    pub body: String,
    pub pass: bool,
}

fn angle_json(beta: Option<f64>) -> Json {
    match beta {
        None => Json::Null,
        Some(b) => {
            let t = if (b - PI / 2.0).abs() < 1e-15 {
                json!("inf")
            } else {
                json!(b.tan())
            };
            json!({ "rad": b, "tan": t, "label": angle_label(b) })
        }
    }
}

fn csv_field(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Null => String::new(),
        other => other.to_string(),
    }
}

fn checks_csv(checks: &[Check]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["name", "pass", "value", "expected", "tol"])?;
    for c in checks {
        let tol = c.tol.map(|t| format!("{t:e}")).unwrap_or_default();
        w.write_record([
            c.name.as_str(),
            if c.pass { "true" } else { "false" },
            &csv_field(&c.value),
            &csv_field(&c.expected),
            &tol,
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn render_report(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => Ok(report.to_json() + "\n"),
        Format::Csv => checks_csv(&report.checks),
    }
}

pub fn m_eval(ctx: &Context_, alpha: Option<&str>, zs: &[String]) -> Result<Outcome> {
    let alpha = match ctx.get(&alpha.map(str::to_string), "alpha") {
        Some(a) => parse_real(&a)?,
        None => PI,
    };
    let mut points: Vec<Complex64> = zs
        .iter()
        .map(|s| parse_complex(s))
        .collect::<Result<_, _>>()?;
    if points.is_empty() {
        if let Some(list) = ctx.kv.get("z") {
            for s in list.split(';').filter(|s| !s.trim().is_empty()) {
                points.push(parse_complex(s)?);
            }
        }
    }
    if points.is_empty() {
        if let Some(g) = ctx.grid()? {
            points.extend(g.complex_points());
            points.extend(
                g.negative_real_points()
                    .into_iter()
                    .map(|x| Complex64::new(x, 0.0)),
            );
        }
    }
    if points.is_empty() {
        bail!(weyl_core::Error::Domain(
            "empty grid: give --z or --grid".into()
        ));
    }
    let eval = ctx.evaluator()?;
    let rows: Vec<(Complex64, MEstimate)> = points
        .par_iter()
        .map(|&z| {
            let e = eval.m_alpha_estimate(alpha, SpectralPoint(z))?;
            Ok((z, e))
        })
        .collect::<weyl_core::Result<_>>()?;

    let body = match ctx.format()? {
        Format::Json => {
            let rows: Vec<Json> = rows
                .iter()
                .map(|(z, e)| {
                    json!({
                        "z": complex_json(*z),
                        "m": complex_json(e.value),
                        "error_bound": e.error_bound,
                        "truncation_x": e.truncation_x,
                        "route": e.route,
                    })
                })
                .collect();
            let doc = json!({
                "potential": eval.potential().to_spec().ok(),
                "alpha": alpha,
                "mode": eval.mode(),
                "rows": rows,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["re_z", "im_z", "re_m", "im_m", "error_bound"])?;
            for (z, e) in &rows {
                w.write_record(
                    [z.re, z.im, e.value.re, e.value.im, e.error_bound]
                        .map(|v| format!("{:.14e}", v + 0.0)),
                )?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    Ok(Outcome { body, pass: true })
}

pub struct ClassifyArgs<'a> {
    pub system: Option<&'a str>,
    pub mu: Option<&'a str>,
    pub h: Option<&'a str>,
    pub trials: Option<usize>,
}

pub fn classify(ctx: &Context_, args: ClassifyArgs) -> Result<Outcome> {
    let system = ctx.get(&args.system.map(str::to_string), "system");
    let mu_s = ctx.get(&args.mu.map(str::to_string), "mu");
    let h_s = ctx.get(&args.h.map(str::to_string), "h");
    let (mu, h) = parse_system(system.as_deref(), mu_s.as_deref(), h_s.as_deref())?;

    let eval = ctx.evaluator()?;
    let potential = eval.potential().clone();
    let ell = potential.ell();
    let sys = make_lsystem(potential, ell, mu, h)?;

    let trials = match args.trials {
        Some(t) => t,
        None => ctx.kv.get_usize("trials")?.unwrap_or(100),
    };
    let opts = ClassifyOptions {
        grid: ctx.grid()?.unwrap_or_default(),
        tol: ctx.tol()?,
        kernel: Some(KernelSampling {
            trials,
            seed: ctx.seed()?,
            ..KernelSampling::default()
        }),
        limit_terms: ctx.settings()?.limit_terms,
    };
    let c = classify_system(&sys, &eval, &opts)?;

    let mut checks = Report::new();
    checks.push(Check::flag("classify.herglotz", c.is_herglotz.pass, true));
    if let (Some(b1), Some(b2)) = (c.beta1, c.beta2) {
        checks.push(Check::flag("classify.beta_order", b1 <= b2 + 1e-12, true));
    }
    if let Some(acc) = c.accretive {
        checks.push(Check::flag(
            "classify.stieltjes_iff_accretive",
            c.is_stieltjes.pass,
            acc,
        ));
    }
    if let (Some(ext), Some(acc), Some(sec)) = (c.extremal, c.accretive, c.sectorial) {
        checks.push(Check::flag(
            "classify.extremal_consistent",
            !ext || (acc && !sec),
            true,
        ));
    }
    let angle_tol = 1e-3;
    match (mu, c.beta1, c.beta2) {
        (ExtendedReal::Infinity, Some(b1), Some(b2)) => {
            checks.push(Check::close("classify.beta1_zero", b1, 0.0, angle_tol));
            if let Some(theta) = c.accretivity.theta {
                checks.push(Check::close(
                    "classify.beta2_equals_theta",
                    b2,
                    theta,
                    angle_tol,
                ));
            }
        }
        (ExtendedReal::Finite(m), Some(b1), Some(b2)) if h == Complex64::i() => {
            if let Some(m0) = c.m0.finite() {
                if m0 > 0.0 && m * m0 > 1.0 {
                    match theorem15_angles(m.atan(), m0) {
                        Ok((e1, e2)) => {
                            checks.push(Check::close(
                                "classify.theorem15.beta1",
                                b1,
                                e1,
                                angle_tol,
                            ));
                            checks.push(Check::close(
                                "classify.theorem15.beta2",
                                b2,
                                e2,
                                angle_tol,
                            ));
                        }
                        Err(e) => checks.push(Check::errored("classify.theorem15", &e)),
                    }
                }
            }
        }
        _ => {}
    }
    let pass = checks.all_pass();

    let body = match ctx.format()? {
        Format::Json => {
            let mut classification = serde_json::to_value(&c)?;
            if let Json::Object(map) = &mut classification {
                let mut angles = Map::new();
                angles.insert("beta1".into(), angle_json(c.beta1));
                angles.insert("beta2".into(), angle_json(c.beta2));
                angles.insert("beta_theorem16".into(), angle_json(c.beta_theorem16));
                angles.insert("beta_abt".into(), angle_json(c.beta_abt));
                map.insert("angles".into(), Json::Object(angles));
            }
            let system: Json = serde_json::from_str(&sys.to_json()?)?;
            let doc = json!({
                "system": system,
                "class": c.class_label(),
                "classification": classification,
                "checks": checks.checks,
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Csv => checks_csv(&checks.checks)?,
    };
    Ok(Outcome { body, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Example,
    Duality,
    Forms,
    All,
}

pub fn verify(ctx: &Context_, suite: Suite, trials: Option<usize>) -> Result<Outcome> {
    let seed = ctx.seed()?;
    let trials = match trials {
        Some(t) => Some(t),
        None => ctx.kv.get_usize("trials")?,
    };
    let mut report = Report::new();
    if matches!(suite, Suite::Example | Suite::All) {
        let opts = SuiteOptions {
            grid: ctx.grid()?.unwrap_or_default(),
            settings: ctx.settings()?,
            kernel: KernelSampling {
                trials: trials.unwrap_or(100),
                seed,
                ..KernelSampling::default()
            },
            tol: ctx.tol()?,
            ..SuiteOptions::default()
        };
        report.extend(verify_example_suite(&opts));
    }
    if matches!(suite, Suite::Duality | Suite::All) {
        let eval = ctx.evaluator()?;
        report.extend(verify_duality_suite(&eval, trials.unwrap_or(50), seed));
    }
    if matches!(suite, Suite::Forms | Suite::All) {
        report.extend(verify_forms_suite(seed, trials.unwrap_or(100)));
    }
    let failures = report.failures().count();
    eprintln!("{} checks, {} failed", report.checks.len(), failures);
    for f in report.failures() {
        eprintln!("  FAIL {}", f.name);
    }
    Ok(Outcome {
        body: render_report(&report, ctx.format()?)?,
        pass: failures == 0,
    })
}
