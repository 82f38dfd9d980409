#![allow(clippy::approx_constant)] // rounded oracle values

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use super::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn bessel_closed() -> MFunctionEvaluator {
    MFunctionEvaluator::closed_form(Potential::bessel_three_halves()).unwrap()
}

fn bessel_numeric() -> MFunctionEvaluator {
    MFunctionEvaluator::numeric(
        Potential::bessel_three_halves(),
        EvaluatorSettings::default(),
    )
    .unwrap()
}

#[test]
fn closed_form_values() {
    let e = bessel_closed();
    assert_relative_eq!(
        e.m_infinity(SpectralPoint::real(-1.0)).unwrap().re,
        1.5,
        epsilon = 1e-15
    );
    assert_relative_eq!(
        e.m_infinity(SpectralPoint::real(-4.0)).unwrap().re,
        7.0 / 3.0,
        epsilon = 1e-15
    );
    let mi = e.m_infinity(SpectralPoint::new(0.0, 1.0)).unwrap();
    assert!((mi - c(1.207107, -0.5)).norm() < 1e-6);
    assert_eq!(e.m_infinity(SpectralPoint::real(-1.0)).unwrap().im, 0.0);
}

#[test]
fn branch_of_square_root() {
    assert_eq!(sqrt_upper(c(-4.0, 0.0)), c(0.0, 2.0));
    assert_eq!(sqrt_upper(c(-4.0, -0.0)), c(-0.0, 2.0));
    assert!(sqrt_upper(c(0.3, -2.0)).im > 0.0);
    assert_eq!(sqrt_upper(c(9.0, 0.0)), c(3.0, 0.0));
}

#[test]
fn positive_axis_is_rejected() {
    for e in [bessel_closed(), bessel_numeric()] {
        assert!(matches!(
            e.m_infinity(SpectralPoint::real(2.0)),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            e.m_infinity(SpectralPoint::real(0.0)),
            Err(Error::Domain(_))
        ));
    }
}

#[test]
fn closed_form_needs_known_potential() {
    assert!(MFunctionEvaluator::closed_form(Potential::bessel(1.5, 2.0).unwrap()).is_err());
    assert!(MFunctionEvaluator::closed_form(Potential::bessel(2.5, 1.0).unwrap()).is_err());
    let auto = MFunctionEvaluator::auto(
        Potential::bessel(2.5, 1.0).unwrap(),
        EvaluatorSettings::default(),
    )
    .unwrap();
    assert_eq!(auto.mode(), Mode::Numeric);
}

#[test]
fn numeric_backward_route_at_minus_one() {
    // decaying solution e^{-x}(1 + 1/x): y'(1)/y(1) = -3/2, so m = 3/2
    let est = bessel_numeric()
        .m_infinity_estimate(SpectralPoint::real(-1.0))
        .unwrap();
    assert_eq!(est.route, Route::Backward);
    assert!((est.value.re - 1.5).abs() < 1e-6, "{est:?}");
}

#[test]
fn numeric_disk_route_matches_closed_form() {
    let num = bessel_numeric();
    let exact = bessel_closed();
    for z in [c(0.0, 1.0), c(-3.0, 0.5), c(4.0, 2.0), c(1.0, -1.0)] {
        let est = num.m_infinity_estimate(z.into()).unwrap();
        let want = exact.m_infinity(z.into()).unwrap();
        assert_eq!(est.route, Route::WeylDisk);
        assert!(est.error_bound <= 2e-8);
        assert!(
            (est.value - want).norm() <= 1e-6 * want.norm(),
            "z={z}: {est:?} vs {want}"
        );
    }
}

#[test]
fn limit_at_zero() {
    let lim = bessel_closed().m_infinity_limit_at_zero().unwrap();
    assert!((lim.as_f64() - 1.0).abs() < 1e-4);
    let lim_num = bessel_numeric().m_infinity_limit_at_zero().unwrap();
    assert!((lim_num.as_f64() - lim.as_f64()).abs() < 1e-4, "{lim_num}");

    let free = MFunctionEvaluator::closed_form(Potential::free(0.0).unwrap()).unwrap();
    assert!(free.m_infinity_limit_at_zero().unwrap().as_f64().abs() < 1e-4);
    let free_num =
        MFunctionEvaluator::numeric(Potential::free(0.0).unwrap(), EvaluatorSettings::default())
            .unwrap();
    assert!(free_num.m_infinity_limit_at_zero().unwrap().as_f64().abs() < 1e-4);
}

#[test]
fn limit_at_minus_infinity_diverges() {
    for e in [
        bessel_closed(),
        MFunctionEvaluator::closed_form(Potential::free(0.0).unwrap()).unwrap(),
    ] {
        assert_eq!(
            e.m_infinity_limit_at_minus_infinity().unwrap(),
            LimitValue::PosInfinity
        );
        let xs = towards_minus_infinity(8);
        let ms: Vec<f64> = xs
            .iter()
            .map(|&x| e.m_infinity(SpectralPoint::real(x)).unwrap().re)
            .collect();
        assert!(ms.windows(2).all(|w| w[1] > w[0]));
    }
    // m(-s) = 1 + s/(sqrt(s) + 1)
    let m = bessel_closed()
        .m_infinity(SpectralPoint::real(-1e6))
        .unwrap()
        .re;
    assert_relative_eq!(m, 1.0 + 1e6 / 1001.0, max_relative = 1e-14);
}

#[test]
fn numeric_limit_at_minus_infinity() {
    assert_eq!(
        bessel_numeric()
            .m_infinity_limit_at_minus_infinity()
            .unwrap(),
        LimitValue::PosInfinity
    );
}

#[test]
fn m_alpha_special_angles() {
    let e = bessel_closed();
    let z = SpectralPoint::new(0.0, 1.0);
    let m = e.m_infinity(z).unwrap();
    assert_eq!(e.m_alpha(PI, z).unwrap(), m);
    let half = e.m_alpha(PI / 2.0, z).unwrap();
    assert!((half + c(0.707107, 0.292893)).norm() < 1e-6);
    assert!((half + 1.0 / m).norm() < 1e-14);
    let third = e.m_alpha(PI / 3.0, SpectralPoint::real(-1.0)).unwrap();
    assert!((third.re + 2.022_463_499_930_235).abs() < 1e-12);
}

#[test]
fn m_alpha_reports_poles() {
    // m(-1) = 3/2, so cos a - 1.5 sin a = 0 at a = atan(2/3)
    let e = bessel_closed();
    let alpha = (2.0f64 / 3.0).atan();
    match e.m_alpha(alpha, SpectralPoint::real(-1.0)) {
        Err(Error::Pole { z, .. }) => assert_eq!(z, c(-1.0, 0.0)),
        other => panic!("expected pole, got {other:?}"),
    }
    assert!(matches!(
        e.m_alpha(0.0, SpectralPoint::real(-1.0)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn direct_route_examples() {
    let p = Potential::bessel_three_halves();
    let s = EvaluatorSettings::default();
    let est = m_alpha_direct(&p, PI, SpectralPoint::new(0.0, 1.0), &s).unwrap();
    assert!((est.value - c(1.207107, -0.5)).norm() <= 1e-6 + 2.0 * est.error_bound);

    let z = SpectralPoint::new(-1.0, 0.001);
    let direct = m_alpha_direct(&p, PI / 3.0, z, &s).unwrap();
    let lft = bessel_closed().m_alpha(PI / 3.0, z).unwrap();
    assert!((direct.value - lft).norm() < 1e-3, "{direct:?} vs {lft}");

    let free = Potential::free(0.0).unwrap();
    let z = SpectralPoint::new(0.0, 1.0);
    let direct = m_alpha_direct(&free, PI / 2.0, z, &s).unwrap();
    let want = -1.0 / free_m(z.0);
    assert!((direct.value - want).norm() < 1e-6);
    let lft = MFunctionEvaluator::closed_form(free)
        .unwrap()
        .m_alpha(PI / 2.0, z)
        .unwrap();
    assert!((direct.value - lft).norm() < 1e-6);

    assert!(matches!(
        m_alpha_direct(&p, 1.0, SpectralPoint::real(-1.0), &s),
        Err(Error::Domain(_))
    ));
}

#[test]
fn disk_contracts() {
    let p = Potential::bessel_three_halves();
    let s = EvaluatorSettings::default();
    let z = SpectralPoint::new(2.0, 0.5);
    let radii: Vec<f64> = [2.0, 4.0, 8.0, 16.0, 32.0]
        .iter()
        .map(|&x| disk_radius_at(&p, PI / 4.0, z, x, &s).unwrap())
        .collect();
    assert!(radii.windows(2).all(|w| w[1] <= w[0]), "{radii:?}");
    assert!(radii[4] < 1e-3);
}

#[test]
fn non_contracting_disk_is_a_convergence_error() {
    // q = -x^4 is limit circle at infinity: the radius stays bounded below
    let p = Potential::expression(1.0, |x| -x.powi(4)).unwrap();
    let s = EvaluatorSettings {
        max_doublings: 2,
        ..EvaluatorSettings::default()
    };
    let e = MFunctionEvaluator::numeric(p, s).unwrap();
    let err = e.m_infinity(SpectralPoint::new(0.0, 1.0)).unwrap_err();
    assert!(err.is_solver_error());
    match err {
        Error::AtPoint { source, .. } => assert!(matches!(*source, Error::Convergence { .. })),
        other => panic!("{other:?}"),
    }
}

#[test]
fn sampled_potential_tracks_bessel() {
    let grid: Vec<f64> = (0..=4000).map(|i| 1.0 + i as f64 * 0.01).collect();
    let values: Vec<f64> = grid.iter().map(|x| 2.0 / (x * x)).collect();
    let p = Potential::sampled(grid, values).unwrap();
    let e = MFunctionEvaluator::numeric(p, EvaluatorSettings::default()).unwrap();
    let z = SpectralPoint::new(-2.0, 1.0);
    let got = e.m_infinity(z).unwrap();
    let want = bessel_closed().m_infinity(z).unwrap();
    // the tail beyond x = 41 is held constant, which shifts m only slightly
    assert!((got - want).norm() < 1e-4, "{got} vs {want}");
}

#[test]
fn evaluator_is_shareable_across_threads() {
    fn assert_send_sync<T: Send + Sync>() {}
    assert_send_sync::<MFunctionEvaluator>();
    let e = std::sync::Arc::new(bessel_numeric());
    let handles: Vec<_> = (1..=4)
        .map(|k| {
            let e = e.clone();
            std::thread::spawn(move || e.m_infinity(SpectralPoint::new(-(k as f64), 1.0)).unwrap())
        })
        .collect();
    for (k, h) in handles.into_iter().enumerate() {
        let want = bessel_closed()
            .m_infinity(SpectralPoint::new(-((k + 1) as f64), 1.0))
            .unwrap();
        assert!((h.join().unwrap() - want).norm() < 1e-6);
    }
}

proptest! {
    #[test]
    fn closed_form_herglotz_and_symmetry(re in -20.0f64..20.0, im in 0.01f64..20.0, alpha in 0.05f64..PI) {
        let e = bessel_closed();
        let z = c(re, im);
        let m = e.m_infinity(z.into()).unwrap();
        prop_assert!(-m.im > 0.0);
        let mc = e.m_infinity(z.conj().into()).unwrap();
        prop_assert!((mc - m.conj()).norm() <= 1e-12 * m.norm().max(1.0));
        if let Ok(ma) = e.m_alpha(alpha, z.into()) {
            prop_assert!(-ma.im >= -1e-12 * ma.norm().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn numeric_herglotz_symmetry_and_lft(re in -5.0f64..5.0, im in 0.2f64..5.0, alpha in 0.2f64..3.0) {
        let p = Potential::bessel(2.5, 1.0).unwrap();
        let s = EvaluatorSettings::default();
        let e = MFunctionEvaluator::numeric(p.clone(), s).unwrap();
        let z = c(re, im);
        let m = e.m_infinity_estimate(z.into()).unwrap();
        prop_assert!(-m.value.im > 0.0);
        let mc = e.m_infinity(z.conj().into()).unwrap();
        prop_assert!((mc - m.value.conj()).norm() <= 1e-6 * m.value.norm().max(1.0));
        let lft = e.m_alpha_estimate(alpha, z.into()).unwrap();
        let direct = m_alpha_direct(&p, alpha, z.into(), &s).unwrap();
        prop_assert!(-direct.value.im > 0.0);
        let budget = lft.error_bound + direct.error_bound + 1e-7 * lft.value.norm().max(1.0);
        prop_assert!((lft.value - direct.value).norm() <= budget,
            "lft {:?} direct {:?}", lft, direct);
    }
}
