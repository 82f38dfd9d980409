//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the lines always show; exits non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use weyl_core::forms::{evaluate_form, random_test_functions, TestFunction};
use weyl_core::lsystem::{
    duality_check, impedance, impedance_from_transfer, make_lsystem, quasi_kernel_parameter,
    transfer, transfer_from_impedance,
};
use weyl_core::sectorial::{
    accretivity_and_sectoriality, beta_from_beta12_abt, classify_s_beta12, kernel_s_beta_on,
    kernel_s_beta_test, negative_axis_limits, stieltjes_test, theorem15_angles, theorem16_beta,
    GridSpec, KernelSampling,
};
use weyl_core::{
    BoundaryParam, Complex64, EvaluatorSettings, ExtendedReal, LSystemDescriptor, LimitValue,
    MFunctionEvaluator, Potential, SampledFunction, SpectralPoint,
};

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

const I: Complex64 = Complex64::new(0.0, 1.0);
const LIMIT_TERMS: usize = 8;

fn numeric() -> MFunctionEvaluator {
    MFunctionEvaluator::numeric(
        Potential::bessel_three_halves(),
        EvaluatorSettings::default(),
    )
    .unwrap()
}

fn closed() -> MFunctionEvaluator {
    MFunctionEvaluator::closed_form(Potential::bessel_three_halves()).unwrap()
}

fn system(mu: ExtendedReal, h: Complex64) -> LSystemDescriptor {
    make_lsystem(Potential::bessel_three_halves(), 1.0, mu, h).unwrap()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn c1_oracle() -> Outcome {
    let (num, cf) = (numeric(), closed());
    let grid = GridSpec::default();
    let mut zs = grid.complex_points();
    zs.extend(
        grid.negative_real_points()
            .into_iter()
            .map(|x| Complex64::new(x, 0.0)),
    );
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &z in &zs {
        let a = num.m_infinity(SpectralPoint(z)).map_err(e)?;
        let b = cf.m_infinity(SpectralPoint(z)).map_err(e)?;
        worst = worst.max((a - b).norm() / b.norm());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!(
        "{} points, worst rel {worst:.2e}, {secs:.2}s",
        zs.len()
    ))
}

fn c2_limits() -> Outcome {
    let ev = numeric();
    let m0 = ev.m_infinity_limit_at_zero().map_err(e)?;
    let m0 = m0
        .finite()
        .ok_or_else(|| format!("m(-0) not finite: {m0:?}"))?;
    ensure((m0 - 1.0).abs() <= 1e-4, || format!("m(-0) = {m0}"))?;
    let far = ev.m_infinity(SpectralPoint::real(-1e6)).map_err(e)?.re;
    ensure(far > 1e3, || format!("m(-1e6) = {far}"))?;
    let lim = ev.m_infinity_limit_at_minus_infinity().map_err(e)?;
    ensure(lim == LimitValue::PosInfinity, || {
        format!("m(-inf) = {lim:?}")
    })?;
    Ok(format!("m(-0) = {m0:.8}, m(-1e6) = {far:.6}"))
}

fn c3_exact_angle() -> Outcome {
    let sys = system(ExtendedReal::Infinity, I);
    let acc = accretivity_and_sectoriality(&sys, LimitValue::Finite(1.0));
    ensure(acc.tan_theta == Some(1.0), || {
        format!("tan theta = {:?}", acc.tan_theta)
    })?;
    let f = SampledFunction::inv_m_infinity(&numeric());
    let (b1, b2) =
        classify_s_beta12(negative_axis_limits(&f, LIMIT_TERMS).map_err(e)?).map_err(e)?;
    ensure(b1 <= 1e-3, || format!("beta1 = {b1}"))?;
    ensure((b2.tan() - 1.0).abs() <= 1e-3, || {
        format!("tan beta2 = {}", b2.tan())
    })?;
    Ok(format!(
        "tan theta = 1, beta1 = {b1:.1e}, tan beta2 = {:.8}",
        b2.tan()
    ))
}

fn c4_theorem15() -> Outcome {
    let ev = numeric();
    let mut worst = 0.0f64;
    for k in 0..7 {
        let alpha = 0.9 + 0.1 * k as f64;
        let f = SampledFunction::neg_m_alpha(&ev, alpha);
        let (b1, b2) =
            classify_s_beta12(negative_axis_limits(&f, LIMIT_TERMS).map_err(e)?).map_err(e)?;
        let (e1, e2) = theorem15_angles(alpha, 1.0).map_err(e)?;
        let gap = (b2 - b1 - FRAC_PI_4).abs();
        worst = worst.max((b1 - e1).abs()).max((b2 - e2).abs()).max(gap);
        ensure(worst <= 1e-3, || {
            format!("alpha = {alpha}: ({b1}, {b2}) vs ({e1}, {e2})")
        })?;
    }
    Ok(format!("7 angles, worst deviation {worst:.2e}"))
}

fn c5_realization() -> Outcome {
    let ev = numeric();
    let grid = GridSpec {
        re_points: 10,
        im_points: 10,
        ..GridSpec::default()
    };
    let zs = grid.complex_points();
    ensure(zs.len() == 100, || format!("{} points", zs.len()))?;
    let s0 = system(ExtendedReal::Finite(0.0), I);
    let sinf = system(ExtendedReal::Infinity, I);
    let mut worst = 0.0f64;
    for &z in &zs {
        let p = SpectralPoint(z);
        let m = ev.m_infinity(p).map_err(e)?;
        worst = worst.max((impedance(&s0, p, &ev).map_err(e)? + m).norm());
        worst = worst.max((impedance(&sinf, p, &ev).map_err(e)? - 1.0 / m).norm());
    }
    for alpha in [0.3, 0.7, 1.0, 1.3, 2.2] {
        let sys = system(ExtendedReal::Finite(f64::tan(alpha)), I);
        for &z in zs.iter().step_by(10) {
            let p = SpectralPoint(z);
            let v = impedance(&sys, p, &ev).map_err(e)?;
            worst = worst.max((v + ev.m_alpha(alpha, p).map_err(e)?).norm());
        }
    }
    ensure(worst <= 1e-10, || format!("worst residual {worst:e}"))?;
    Ok(format!("worst residual {worst:.2e}"))
}

fn random_h(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.1..2.0))
}

fn random_z(rng: &mut ChaCha8Rng) -> SpectralPoint {
    SpectralPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(0.1..5.0))
}

fn c6_duality() -> Outcome {
    let ev = numeric();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut done) = (0.0f64, 0);
    while done < 50 {
        let h = random_h(&mut rng);
        let mu = rng.gen_range(-5.0..5.0);
        let z = random_z(&mut rng);
        if (mu - h.re).abs() < 1e-3 {
            continue;
        }
        let sys = system(ExtendedReal::Finite(mu), h);
        let r = duality_check(&sys, z, &ev).map_err(e)?;
        worst = worst.max(r.impedance_residual).max(r.transfer_residual);
        done += 1;
    }
    ensure(worst <= 1e-10, || format!("duality residual {worst:e}"))?;
    let mut worst_inv = 0.0f64;
    for _ in 0..50 {
        let h = BoundaryParam::new(random_h(&mut rng)).map_err(e)?;
        let mu = rng.gen_range(-50.0..50.0);
        match quasi_kernel_parameter(quasi_kernel_parameter(ExtendedReal::Finite(mu), h), h) {
            ExtendedReal::Finite(b) => {
                worst_inv = worst_inv.max((b - mu).abs() / mu.abs().max(1.0))
            }
            ExtendedReal::Infinity => return Err(format!("xi(xi({mu})) = inf")),
        }
    }
    ensure(worst_inv <= 1e-12, || {
        format!("involution error {worst_inv:e}")
    })?;
    Ok(format!(
        "50 triples, residual {worst:.2e}, involution {worst_inv:.2e}"
    ))
}

fn c7_mobius() -> Outcome {
    let ev = numeric();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let mu = if k % 10 == 0 {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(rng.gen_range(-5.0..5.0))
        };
        let sys = system(mu, random_h(&mut rng));
        let z = random_z(&mut rng);
        let w = transfer(&sys, z, &ev).map_err(e)?;
        let wv = transfer_from_impedance(impedance(&sys, z, &ev).map_err(e)?).map_err(e)?;
        worst = worst.max((w - wv).norm() / w.norm().max(1.0));
    }
    ensure(worst <= 1e-10, || format!("transfer mismatch {worst:e}"))?;
    let mut worst_rt = 0.0f64;
    for _ in 0..100 {
        let v = Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let back = impedance_from_transfer(transfer_from_impedance(v).map_err(e)?).map_err(e)?;
        worst_rt = worst_rt.max((back - v).norm() / v.norm().max(1.0));
    }
    ensure(worst_rt <= 1e-12, || format!("round trip {worst_rt:e}"))?;
    Ok(format!("transfer {worst:.2e}, round trip {worst_rt:.2e}"))
}

fn c8_kernel() -> Outcome {
    let f = SampledFunction::inv_m_infinity(&numeric());
    let sampling = KernelSampling {
        trials: 100,
        seed: 42,
        max_points: 6,
        ..KernelSampling::default()
    };
    let r = kernel_s_beta_test(&f, FRAC_PI_4, &sampling).map_err(e)?;
    ensure(r.trials == 100, || format!("{} trials", r.trials))?;
    ensure(r.psd && r.scaled_min() >= -1e-8, || {
        format!("scaled min eigenvalue {:e}", r.scaled_min())
    })?;
    let one = kernel_s_beta_on(
        &SampledFunction::inv_m_infinity(&closed()),
        FRAC_PI_4,
        &[I],
        1e-8,
    )
    .map_err(e)?;
    let k = one.min_eigenvalue;
    ensure((k - 0.121320343559643).abs() <= 1e-6, || {
        format!("K(i, i) = {k}")
    })?;
    Ok(format!(
        "100 sets, scaled min {:.2e}; K(i,i) = {k:.9}",
        r.scaled_min()
    ))
}

fn c9_trichotomy() -> Outcome {
    let ev = numeric();
    let grid = GridSpec::default();
    let (cpx, real) = (grid.complex_points(), grid.negative_real_points());
    let test = |f: &SampledFunction| stieltjes_test(f, &cpx, &real, 1e-9).map_err(e);
    let neg = test(&SampledFunction::neg_m_infinity(&ev))?;
    ensure(!neg.pass && neg.witness.is_some(), || {
        "-m_inf passed or has no witness".into()
    })?;
    for (t, expect) in [(0.5, false), (1.0, true), (2.0, true)] {
        let v = test(&SampledFunction::neg_m_alpha(&ev, f64::atan(t)))?;
        ensure(v.pass == expect, || {
            format!("-m_alpha at tan alpha = {t}: pass = {}", v.pass)
        })?;
    }
    let inv = test(&SampledFunction::inv_m_infinity(&ev))?;
    ensure(inv.pass, || "1/m_inf failed".into())?;
    let w = neg.witness.unwrap();
    Ok(format!(
        "-m_inf fails at z = {}{:+}i; tan alpha 0.5/1/2 = fail/pass/pass; 1/m_inf passes",
        w.re, w.im
    ))
}

fn c10_forms() -> Outcome {
    let witness = evaluate_form(&TestFunction::reciprocal()).map_err(e)?;
    ensure((witness.ratio - 1.0).abs() <= 1e-6, || {
        format!("ratio(1/x) = {}", witness.ratio)
    })?;
    let mut worst = 0.0f64;
    for y in random_test_functions(42, 100) {
        let r = evaluate_form(&y).map_err(|err| format!("{y}: {err}"))?;
        ensure(r.im_form <= r.re_form, || {
            format!("{y}: {} > {}", r.im_form, r.re_form)
        })?;
        worst = worst.max(r.ratio);
    }
    ensure(worst <= 1.0 + 1e-9, || format!("max ratio {worst}"))?;
    Ok(format!(
        "ratio(1/x) = {:.12}, max over 100 = {worst:.6}",
        witness.ratio
    ))
}

fn c11_angle_formulas() -> Outcome {
    let (b1, b2) = (PI / 6.0, 5.0 * PI / 12.0);
    let t16 = theorem16_beta(b1, b2).map_err(e)?.tan();
    let abt = beta_from_beta12_abt(b1, b2).map_err(e)?.tan();
    ensure((t16 - 3.51312991921737).abs() <= 1e-6, || {
        format!("theorem16 tan = {t16}")
    })?;
    ensure((abt - 6.43121156976584).abs() <= 1e-6, || {
        format!("abt tan = {abt}")
    })?;
    ensure((abt - t16).abs() > 1e-3, || "formulas agree".into())?;
    ensure(beta_from_beta12_abt(0.0, FRAC_PI_2).is_err(), || {
        "beta2 = pi/2 accepted".into()
    })?;
    Ok(format!("tan = {t16:.9} vs {abt:.9}"))
}

fn c12_reproducible() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_weyl"))
            .args(["verify", "--suite", "all", "--seed", "42"])
            .output()
            .map_err(e)
    };
    let (a, b) = (run()?, run()?);
    ensure(a.status.success(), || format!("exit {:?}", a.status.code()))?;
    ensure(!a.stdout.is_empty() && a.stdout == b.stdout, || {
        "outputs differ".into()
    })?;
    serde_json::from_slice::<serde_json::Value>(&a.stdout).map_err(e)?;
    Ok(format!("{} bytes identical", a.stdout.len()))
}

fn main() {
    let criteria: [(&str, Criterion); 12] = [
        ("bessel oracle agreement", c1_oracle),
        ("limit values", c2_limits),
        ("exact angle", c3_exact_angle),
        ("class angles of -m_alpha", c4_theorem15),
        ("realization identities", c5_realization),
        ("duality", c6_duality),
        ("mobius consistency", c7_mobius),
        ("kernel psd", c8_kernel),
        ("trichotomy", c9_trichotomy),
        ("form inequality", c10_forms),
        ("angle formulas differ", c11_angle_formulas),
        ("reproducibility", c12_reproducible),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
