use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::spline::CubicSpline;
use crate::error::{Error, Result};

/// Opaque user-supplied potential `x -> q(x)`.
pub type PotentialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PotentialKind {
    /// `q(x) = (nu^2 - 1/4) / x^2`.
    Bessel {
        nu: f64,
    },
    /// `q = 0`.
    Free,
    /// Natural cubic interpolation of tabulated values, held constant past the
    /// last grid point.
    Sampled {
        grid: Vec<f64>,
        values: Vec<f64>,
        spline: CubicSpline,
    },
    Expression(PotentialFn),
}

impl fmt::Debug for PotentialKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PotentialKind::Bessel { nu } => f.debug_struct("Bessel").field("nu", nu).finish(),
            PotentialKind::Free => f.write_str("Free"),
            PotentialKind::Sampled { grid, .. } => f
                .debug_struct("Sampled")
                .field("points", &grid.len())
                .finish(),
            PotentialKind::Expression(_) => f.write_str("Expression(..)"),
        }
    }
}

/// Real potential `q` on the half-line `[ell, inf)`.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    ell: f64,
}

impl Potential {
    pub fn bessel(nu: f64, ell: f64) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "Bessel order must be positive, got {nu}"
            )));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidPotential(format!(
                "Bessel potential needs ell > 0 (singular at x = 0), got {ell}"
            )));
        }
        Ok(Self {
            kind: PotentialKind::Bessel { nu },
            ell,
        })
    }

    /// The order-3/2 Bessel potential `2/x^2` on `[1, inf)`.
    pub fn bessel_three_halves() -> Self {
        Self {
            kind: PotentialKind::Bessel { nu: 1.5 },
            ell: 1.0,
        }
    }

    pub fn free(ell: f64) -> Result<Self> {
        check_ell(ell)?;
        Ok(Self {
            kind: PotentialKind::Free,
            ell,
        })
    }

    /// Tabulated potential; `ell` is taken to be the first grid point.
    pub fn sampled(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::InvalidPotential(
                "sampled potential needs at least two points".into(),
            ));
        }
        if grid.len() != values.len() {
            return Err(Error::InvalidPotential(format!(
                "grid has {} points but {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(w) = grid.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPotential(format!(
                "grid must be strictly ascending ({} followed by {})",
                w[0], w[1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidPotential(format!("non-finite sample {v}")));
        }
        let ell = grid[0];
        check_ell(ell)?;
        let spline = CubicSpline::natural(&grid, &values);
        Ok(Self {
            kind: PotentialKind::Sampled {
                grid,
                values,
                spline,
            },
            ell,
        })
    }

    pub fn expression<F>(ell: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_ell(ell)?;
        Ok(Self {
            kind: PotentialKind::Expression(Arc::new(f)),
            ell,
        })
    }

    /// Parse a two-column `x q(x)` table. Blank lines and `#` comments are
    /// ignored.
    pub fn from_table(text: &str) -> Result<Self> {
        let (grid, values) = parse_two_columns(text)?;
        Self::sampled(grid, values)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_table(&text)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            PotentialKind::Bessel { nu } => (nu * nu - 0.25) / (x * x),
            PotentialKind::Free => 0.0,
            PotentialKind::Sampled { spline, .. } => spline.eval(x),
            PotentialKind::Expression(f) => f(x),
        }
    }

    /// Whether the closed-form Weyl function is known for this potential.
    pub fn has_closed_form(&self) -> bool {
        match self.kind {
            PotentialKind::Bessel { nu } => nu == 1.5 && self.ell == 1.0,
            PotentialKind::Free => true,
            _ => false,
        }
    }

    pub fn to_spec(&self) -> Result<PotentialSpec> {
        Ok(match &self.kind {
            PotentialKind::Bessel { nu } => PotentialSpec::Bessel {
                nu: *nu,
                ell: self.ell,
            },
            PotentialKind::Free => PotentialSpec::Free { ell: self.ell },
            PotentialKind::Sampled { grid, values, .. } => PotentialSpec::Sampled {
                grid: grid.clone(),
                values: values.clone(),
            },
            PotentialKind::Expression(_) => {
                return Err(Error::InvalidPotential(
                    "expression potentials cannot be serialized".into(),
                ))
            }
        })
    }
}

fn check_ell(ell: f64) -> Result<()> {
    if ell >= 0.0 && ell.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidPotential(format!(
            "left endpoint must be a finite non-negative number, got {ell}"
        )))
    }
}

/// Serializable description of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PotentialSpec {
    Bessel { nu: f64, ell: f64 },
    Free { ell: f64 },
    Sampled { grid: Vec<f64>, values: Vec<f64> },
}

impl TryFrom<PotentialSpec> for Potential {
    type Error = Error;

    fn try_from(spec: PotentialSpec) -> Result<Self> {
        match spec {
            PotentialSpec::Bessel { nu, ell } => Potential::bessel(nu, ell),
            PotentialSpec::Free { ell } => Potential::free(ell),
            PotentialSpec::Sampled { grid, values } => Potential::sampled(grid, values),
        }
    }
}

/// Parse whitespace-separated two-column numeric text with `#` comments.
pub fn parse_two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse(format!(
                "line {}: expected two columns, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", lineno + 1)))
        };
        xs.push(parse(cols[0])?);
        ys.push(parse(cols[1])?);
    }
    Ok((xs, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_invariants() {
        assert!(Potential::bessel(1.5, 0.0).is_err());
        assert!(Potential::bessel(0.0, 1.0).is_err());
        let p = Potential::bessel_three_halves();
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.eval(2.0), 0.5);
        assert!(p.has_closed_form());
        assert!(!Potential::bessel(1.5, 2.0).unwrap().has_closed_form());
    }

    #[test]
    fn sampled_grid_must_ascend() {
        assert!(Potential::sampled(vec![1.0, 1.0, 2.0], vec![0.0; 3]).is_err());
        assert!(Potential::sampled(vec![1.0, 2.0], vec![0.0]).is_err());
        let p = Potential::sampled(vec![1.0, 2.0, 3.0], vec![2.0, 0.5, 2.0 / 9.0]).unwrap();
        assert_eq!(p.ell(), 1.0);
        assert_eq!(p.eval(100.0), 2.0 / 9.0);
    }

    #[test]
    fn table_parsing_skips_comments() {
        let text = "# x q\n1.0 2.0\n\n2.0   0.5 # trailing\n3 0.2222\n";
        let p = Potential::from_table(text).unwrap();
        assert_eq!(p.ell(), 1.0);
        assert!((p.eval(2.0) - 0.5).abs() < 1e-15);
        assert!(Potential::from_table("1 2 3\n").is_err());
        assert!(Potential::from_table("1 x\n2 3\n").is_err());
    }

    #[test]
    fn spec_round_trip() {
        let p = Potential::bessel(2.5, 1.5).unwrap();
        let json = serde_json::to_string(&p.to_spec().unwrap()).unwrap();
        assert_eq!(json, r#"{"kind":"bessel","nu":2.5,"ell":1.5}"#);
        let back: PotentialSpec = serde_json::from_str(&json).unwrap();
        let q = Potential::try_from(back).unwrap();
        assert_eq!(q.eval(3.0), p.eval(3.0));
        assert!(Potential::expression(0.0, |_| 1.0)
            .unwrap()
            .to_spec()
            .is_err());
    }
}
