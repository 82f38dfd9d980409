//! Adaptive Dormand–Prince 5(4) integrator for small complex systems.
//!
//! The state is a fixed-size array of complex numbers so the hot loop stays
//! allocation free. Integration may run in either direction.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(x, y)`.
pub trait OdeSystem<const N: usize> {
    fn rhs(&self, x: f64, y: &[Complex64; N]) -> [Complex64; N];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn combine<const N: usize>(
    y: &[Complex64; N],
    h: f64,
    terms: &[(f64, &[Complex64; N])],
) -> [Complex64; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o += acc * h;
    }
    out
}

fn all_finite<const N: usize>(v: &[Complex64; N]) -> bool {
    v.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Stateful stepper that can be advanced piecewise and rescaled in between.
pub struct Stepper<'a, S, const N: usize> {
    sys: &'a S,
    tol: Tolerances,
    x: f64,
    y: [Complex64; N],
    k1: [Complex64; N],
    h: f64,
    steps: usize,
}

impl<'a, S: OdeSystem<N>, const N: usize> Stepper<'a, S, N> {
    pub fn new(sys: &'a S, x0: f64, y0: [Complex64; N], tol: Tolerances) -> Result<Self> {
        let k1 = sys.rhs(x0, &y0);
        if !all_finite(&k1) {
            return Err(Error::IntegrationDomain { x: x0 });
        }
        Ok(Self {
            sys,
            tol,
            x: x0,
            y: y0,
            k1,
            h: 0.0,
            steps: 0,
        })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn state(&self) -> &[Complex64; N] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Replace the state in place (e.g. after renormalisation) and refresh the
    /// cached derivative.
    pub fn reset_state(&mut self, y: [Complex64; N]) -> Result<()> {
        let k1 = self.sys.rhs(self.x, &y);
        if !all_finite(&k1) {
            return Err(Error::IntegrationDomain { x: self.x });
        }
        self.y = y;
        self.k1 = k1;
        Ok(())
    }

    fn error_norm(&self, y_new: &[Complex64; N], err: &[Complex64; N]) -> f64 {
        let mut acc = 0.0;
        for i in 0..N {
            let scale = self.tol.atol + self.tol.rtol * self.y[i].norm().max(y_new[i].norm());
            let r = err[i].norm() / scale;
            acc += r * r;
        }
        (acc / N as f64).sqrt()
    }

    /// Advance to `x_end`, calling `after_step` on every accepted step. The
    /// callback may modify the state; it receives the new abscissa.
    pub fn advance_with<F>(&mut self, x_end: f64, mut after_step: F) -> Result<()>
    where
        F: FnMut(f64, &mut [Complex64; N]) -> bool,
    {
        let span = x_end - self.x;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        if self.h == 0.0 || self.h.signum() != dir {
            let scale = self.x.abs().max(1.0);
            self.h = dir * (1e-4 * scale).min(span.abs());
        }
        loop {
            let remaining = x_end - self.x;
            if remaining * dir <= 0.0 {
                return Ok(());
            }
            if self.steps >= self.tol.max_steps {
                return Err(Error::StepBudget {
                    x: self.x,
                    steps: self.steps,
                });
            }
            let last = self.h.abs() >= remaining.abs();
            let h = if last { remaining } else { self.h };
            let min_h = 1e-14 * self.x.abs().max(1.0);
            if h.abs() < min_h && !last {
                return Err(Error::Stiffness { x: self.x, h });
            }

            let (y_new, k7, err) = self.trial_step(h);
            if !all_finite(&y_new) || !all_finite(&k7) {
                let next = h * MIN_FACTOR;
                if next.abs() < min_h {
                    return Err(Error::IntegrationDomain { x: self.x + h });
                }
                self.h = next;
                continue;
            }
            let norm = self.error_norm(&y_new, &err);
            if !norm.is_finite() {
                return Err(Error::IntegrationDomain { x: self.x });
            }
            if norm <= 1.0 {
                self.x = if last { x_end } else { self.x + h };
                self.y = y_new;
                self.k1 = k7;
                self.steps += 1;
                let factor = if norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if !last {
                    self.h = h * factor;
                }
                if after_step(self.x, &mut self.y) {
                    let y = self.y;
                    self.reset_state(y)?;
                }
            } else {
                let factor = (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
                self.h = h * factor;
                if self.h.abs() < min_h {
                    return Err(Error::Stiffness {
                        x: self.x,
                        h: self.h,
                    });
                }
            }
        }
    }

    pub fn advance(&mut self, x_end: f64) -> Result<()> {
        self.advance_with(x_end, |_, _| false)
    }

    fn trial_step(&self, h: f64) -> ([Complex64; N], [Complex64; N], [Complex64; N]) {
        let x = self.x;
        let y = &self.y;
        let k1 = &self.k1;
        let k2 = self.sys.rhs(x + C2 * h, &combine(y, h, &[(A21, k1)]));
        let k3 = self
            .sys
            .rhs(x + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]));
        let k4 = self.sys.rhs(
            x + C4 * h,
            &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = self.sys.rhs(
            x + C5 * h,
            &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = self.sys.rhs(
            x + h,
            &combine(
                y,
                h,
                &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = combine(
            y,
            h,
            &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        let k7 = self.sys.rhs(x + h, &y_new);
        let zero = [Complex64::new(0.0, 0.0); N];
        let err = combine(
            &zero,
            h,
            &[
                (E1, k1),
                (E3, &k3),
                (E4, &k4),
                (E5, &k5),
                (E6, &k6),
                (E7, &k7),
            ],
        );
        (y_new, k7, err)
    }
}
