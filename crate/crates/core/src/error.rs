use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value encountered while integrating at x = {x}")]
    IntegrationDomain { x: f64 },

    #[error(
        "step size underflow at x = {x} (h = {h:e}); the problem is too stiff for the integrator"
    )]
    Stiffness { x: f64, h: f64 },

    #[error("step budget of {steps} exhausted at x = {x}")]
    StepBudget { x: f64, steps: usize },

    #[error("Weyl disk did not contract: radius {radius:e} at X = {x} exceeds tolerance {tol:e}")]
    Convergence { x: f64, radius: f64, tol: f64 },

    #[error("pole at z = {z}: {what}")]
    Pole { z: Complex64, what: String },

    #[error("extrapolation failed: {0}")]
    Extrapolation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("evaluation failed at z = {z}: {source}")]
    AtPoint {
        z: Complex64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn at(self, z: Complex64) -> Self {
        match self {
            Error::AtPoint { .. } => self,
            other => Error::AtPoint {
                z,
                source: Box::new(other),
            },
        }
    }

    /// True for errors raised by the numerical solvers rather than by bad input.
    pub fn is_solver_error(&self) -> bool {
        match self {
            Error::IntegrationDomain { .. }
            | Error::Stiffness { .. }
            | Error::StepBudget { .. }
            | Error::Convergence { .. }
            | Error::Pole { .. }
            | Error::Extrapolation(_)
            | Error::Divergence(_) => true,
            Error::AtPoint { source, .. } => source.is_solver_error(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
