//! Machine-readable pass/fail reports shared by every verification suite.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// One named check. `value` and `expected` are free-form JSON so that real,
/// complex and symbolic results share one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: Value,
    pub expected: Value,
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Value>,
}

pub fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn real_json(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

impl Check {
    /// `|value - expected| <= tol`.
    pub fn close(name: impl Into<String>, value: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            pass: (value - expected).abs() <= tol,
            value: real_json(value),
            expected: real_json(expected),
            tol: Some(tol),
            witness: None,
        }
    }

    /// `|value - expected| <= tol` for complex numbers.
    pub fn close_complex(
        name: impl Into<String>,
        value: Complex64,
        expected: Complex64,
        tol: f64,
    ) -> Self {
        Self {
            name: name.into(),
            pass: (value - expected).norm() <= tol,
            value: complex_json(value),
            expected: complex_json(expected),
            tol: Some(tol),
            witness: None,
        }
    }

    /// `value <= bound`; `expected` records the bound.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= bound,
            value: real_json(value),
            expected: json!(format!("<= {bound:e}")),
            tol: Some(bound),
            witness: None,
        }
    }

    /// `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            pass: value >= bound,
            value: real_json(value),
            expected: json!(format!(">= {bound:e}")),
            tol: Some(bound),
            witness: None,
        }
    }

    /// A boolean outcome compared with its expected value.
    pub fn flag(name: impl Into<String>, value: bool, expected: bool) -> Self {
        Self {
            name: name.into(),
            pass: value == expected,
            value: json!(value),
            expected: json!(expected),
            tol: None,
            witness: None,
        }
    }

    /// Equality of two labels (e.g. a class name).
    pub fn label(name: impl Into<String>, value: &str, expected: &str) -> Self {
        Self {
            name: name.into(),
            pass: value == expected,
            value: json!(value),
            expected: json!(expected),
            tol: None,
            witness: None,
        }
    }

    /// A check that could not be evaluated; always fails.
    pub fn errored(name: impl Into<String>, err: &crate::Error) -> Self {
        Self {
            name: name.into(),
            pass: false,
            value: Value::Null,
            expected: Value::Null,
            tol: None,
            witness: Some(json!({ "error": err.to_string() })),
        }
    }

    pub fn with_witness(mut self, witness: Value) -> Self {
        self.witness = Some(witness);
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Record the outcome of a fallible check; errors become failed checks.
    pub fn push_result(&mut self, name: &str, check: crate::Result<Check>) {
        match check {
            Ok(c) => self.push(c),
            Err(e) => self.push(Check::errored(name, &e)),
        }
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report values are always serializable")
    }
}
