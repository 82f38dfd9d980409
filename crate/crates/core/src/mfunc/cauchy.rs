//! Initial-value problems for `-y'' + q y = z y` started at the left endpoint.

use num_complex::Complex64;
use serde::Serialize;

use super::potential::Potential;
use crate::error::{Error, Result};
use crate::ode::{OdeSystem, Stepper, Tolerances};

/// `sin` and `cos` with multiples of `pi/2` snapped to exact values, so that
/// `alpha = pi` yields exactly `(0, -1)`.
pub fn sin_cos_snapped(alpha: f64) -> (f64, f64) {
    let quarter = alpha / std::f64::consts::FRAC_PI_2;
    let k = quarter.round();
    if (quarter - k).abs() < 1e-14 {
        match (k as i64).rem_euclid(4) {
            0 => (0.0, 1.0),
            1 => (1.0, 0.0),
            2 => (0.0, -1.0),
            _ => (-1.0, 0.0),
        }
    } else {
        alpha.sin_cos()
    }
}

/// Two solutions integrated together: `[theta, theta', phi, phi']`.
pub(crate) struct PairSystem<'a> {
    pub q: &'a Potential,
    pub z: Complex64,
}

impl OdeSystem<4> for PairSystem<'_> {
    fn rhs(&self, x: f64, y: &[Complex64; 4]) -> [Complex64; 4] {
        let w = Complex64::new(self.q.eval(x), 0.0) - self.z;
        [y[1], w * y[0], y[3], w * y[2]]
    }
}

/// Pair system augmented with the running integral of `|phi|^2`.
pub(crate) struct WeylSystem<'a> {
    pub q: &'a Potential,
    pub z: Complex64,
}

impl OdeSystem<5> for WeylSystem<'_> {
    fn rhs(&self, x: f64, y: &[Complex64; 5]) -> [Complex64; 5] {
        let w = Complex64::new(self.q.eval(x), 0.0) - self.z;
        [
            y[1],
            w * y[0],
            y[3],
            w * y[2],
            Complex64::new(y[2].norm_sqr(), 0.0),
        ]
    }
}

/// Single solution `[y, y']`.
pub(crate) struct SingleSystem<'a> {
    pub q: &'a Potential,
    pub z: Complex64,
}

impl OdeSystem<2> for SingleSystem<'_> {
    fn rhs(&self, x: f64, y: &[Complex64; 2]) -> [Complex64; 2] {
        let w = Complex64::new(self.q.eval(x), 0.0) - self.z;
        [y[1], w * y[0]]
    }
}

/// Values of `theta_alpha`, `phi_alpha` and their derivatives at `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchySolutionPair {
    pub alpha: f64,
    pub x: f64,
    pub theta: (Complex64, Complex64),
    pub phi: (Complex64, Complex64),
    /// `|W(x) - W(ell)|` relative to the largest product of solution magnitudes.
    pub wronskian_residual: f64,
}

impl CauchySolutionPair {
    pub fn wronskian(&self) -> Complex64 {
        self.theta.0 * self.phi.1 - self.theta.1 * self.phi.0
    }
}

/// Initial data `(theta, theta', phi, phi')` at the left endpoint.
pub fn initial_data(alpha: f64) -> [Complex64; 4] {
    let (s, c) = sin_cos_snapped(alpha);
    [
        Complex64::new(c, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-c, 0.0),
    ]
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= std::f64::consts::PI {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "alpha must lie in (0, pi], got {alpha}"
        )))
    }
}

pub(crate) fn check_potential_at(potential: &Potential, x: f64) -> Result<()> {
    if potential.eval(x).is_finite() {
        Ok(())
    } else {
        Err(Error::IntegrationDomain { x })
    }
}

/// Integrate `theta_alpha` and `phi_alpha` from `ell` to `x_end`.
pub fn solve_cauchy(
    potential: &Potential,
    alpha: f64,
    z: Complex64,
    x_end: f64,
    tol: Tolerances,
) -> Result<CauchySolutionPair> {
    check_alpha(alpha)?;
    let ell = potential.ell();
    if x_end < ell {
        return Err(Error::Precondition(format!(
            "integration end {x_end} lies left of ell = {ell}"
        )));
    }
    check_potential_at(potential, ell)?;
    let y0 = initial_data(alpha);
    let w0 = y0[0] * y0[3] - y0[1] * y0[2];
    let sys = PairSystem { q: potential, z };
    let mut st = Stepper::new(&sys, ell, y0, tol)?;
    st.advance(x_end)?;
    let y = *st.state();
    let w = y[0] * y[3] - y[1] * y[2];
    let scale = (y[0].norm() * y[3].norm() + y[1].norm() * y[2].norm()).max(1.0);
    Ok(CauchySolutionPair {
        alpha,
        x: x_end,
        theta: (y[0], y[1]),
        phi: (y[2], y[3]),
        wronskian_residual: (w - w0).norm() / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn snapped_values() {
        assert_eq!(sin_cos_snapped(PI), (0.0, -1.0));
        assert_eq!(sin_cos_snapped(PI / 2.0), (1.0, 0.0));
        let (s, c) = sin_cos_snapped(PI / 3.0);
        assert!((s - 3f64.sqrt() / 2.0).abs() < 1e-15 && (c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_length_returns_initial_data() {
        let p = Potential::bessel_three_halves();
        let r = solve_cauchy(&p, PI, Complex64::new(0.0, 0.0), 1.0, Tolerances::default()).unwrap();
        // phi_pi = phi_1, theta_pi = phi_2 from the m_infinity normalisation
        assert_eq!(r.phi.0, Complex64::new(0.0, 0.0));
        assert_eq!(r.phi.1, Complex64::new(1.0, 0.0));
        assert_eq!(r.theta.0, Complex64::new(-1.0, 0.0));
        assert_eq!(r.theta.1, Complex64::new(0.0, 0.0));
        assert_eq!(r.wronskian(), Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn free_cosh_solution() {
        // -y'' = -y with y(1) = 1, y'(1) = 0 gives cosh(x - 1)
        let p = Potential::free(1.0).unwrap();
        let r = solve_cauchy(
            &p,
            PI / 2.0,
            Complex64::new(-1.0, 0.0),
            2.0,
            Tolerances::default(),
        )
        .unwrap();
        assert!((r.phi.0.re - 1f64.cosh()).abs() < 1e-9, "{:?}", r.phi);
        assert!((r.phi.1.re - 1f64.sinh()).abs() < 1e-9);
        assert!((r.phi.0.re - 1.543081).abs() < 1e-6);
    }

    #[test]
    fn wronskian_is_conserved() {
        let p = Potential::bessel_three_halves();
        let r = solve_cauchy(
            &p,
            PI / 3.0,
            Complex64::new(0.0, 1.0),
            20.0,
            Tolerances::default(),
        )
        .unwrap();
        assert!(r.wronskian_residual < 1e-10, "{}", r.wronskian_residual);
    }

    #[test]
    fn bad_inputs() {
        let p = Potential::bessel_three_halves();
        let z = Complex64::new(0.0, 1.0);
        let tol = Tolerances::default();
        assert!(matches!(
            solve_cauchy(&p, 0.0, z, 2.0, tol),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            solve_cauchy(&p, 1.0, z, 0.5, tol),
            Err(Error::Precondition(_))
        ));
        let nan = Potential::expression(1.0, |x| if x > 1.5 { f64::NAN } else { 0.0 }).unwrap();
        assert!(matches!(
            solve_cauchy(&nan, 1.0, z, 2.0, tol),
            Err(Error::IntegrationDomain { .. })
        ));
    }
}
