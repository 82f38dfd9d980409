//! Weyl–Titchmarsh functions of half-line Schrödinger operators, the
//! two-parameter family of Schrödinger L-systems built on them, and sampled
//! tests for the sectorial Stieltjes classes their impedance functions fall
//! into.
//!
//! The order-3/2 Bessel potential `q(x) = 2/x^2` on `[1, inf)`, whose Weyl
//! function is known in closed form, is built in as a reference case.

// `!(a > b)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod forms;
pub mod lsystem;
pub mod mfunc;
pub mod ode;
pub mod report;
pub mod sectorial;

pub use num_complex::Complex64;

pub use config::KeyValues;
pub use error::{Error, Result};

pub use mfunc::{
    EvaluatorSettings, LimitValue, MEstimate, MFunctionEvaluator, Mode, Potential, SpectralPoint,
};

pub use lsystem::{BoundaryParam, BoundaryVector, ExtendedReal, LSystemDescriptor};
pub use report::{Check, Report};
pub use sectorial::{SampledFunction, SectorialClassification};
