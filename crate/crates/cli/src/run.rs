//! Resolution of command-line flags and the optional `key=value` config file
//! into concrete inputs. Flags win over config entries.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use weyl_core::sectorial::GridSpec;
use weyl_core::{
    Complex64, EvaluatorSettings, ExtendedReal, KeyValues, MFunctionEvaluator, Potential,
};

use crate::expr::{parse_complex, parse_real, parse_value, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ModeArg {
    Auto,
    Numeric,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Common {
    /// bessel[:NU] | free | file:PATH (two columns x q(x))
    #[arg(long, global = true)]
    pub potential: Option<String>,
    /// Left endpoint; defaults to 1 for bessel, 0 for free, the first grid
    /// point for files
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub ell: Option<String>,
    #[arg(long, value_enum, global = true)]
    pub mode: Option<ModeArg>,
    /// default | RExIMxREAL point counts | re=a:b:n,im=a:b:n,real=a:b:n
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Tolerance of the sampled class tests
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Flat key=value file with any of the options above plus solver
    /// settings (rtol, atol, disk_tol, real_tol, max_doublings, limit_terms,
    /// max_steps)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 42;

pub struct Context_ {
    pub kv: KeyValues,
    pub common: Common,
}

impl Context_ {
    pub fn new(common: Common) -> Result<Self> {
        let kv = match &common.config {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                KeyValues::parse(&text)?
            }
            None => KeyValues::new(),
        };
        Ok(Self { kv, common })
    }

    /// Flag value, else config entry.
    pub fn get(&self, flag: &Option<String>, key: &str) -> Option<String> {
        flag.clone()
            .or_else(|| self.kv.get(key).map(str::to_string))
    }

    pub fn seed(&self) -> Result<u64> {
        match self.common.seed {
            Some(s) => Ok(s),
            None => Ok(self.kv.get_u64("seed")?.unwrap_or(DEFAULT_SEED)),
        }
    }

    pub fn tol(&self) -> Result<f64> {
        let t = match self.common.tol {
            Some(t) => t,
            None => self.kv.get_f64("tol")?.unwrap_or(1e-9),
        };
        if !(t > 0.0 && t.is_finite()) {
            bail!("tol must be positive, got {t}");
        }
        Ok(t)
    }

    pub fn format(&self) -> Result<Format> {
        if let Some(f) = self.common.format {
            return Ok(f);
        }
        match self.kv.get("format") {
            None | Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some(other) => bail!("unknown format {other:?}"),
        }
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.common
            .out
            .clone()
            .or_else(|| self.kv.get("out").map(PathBuf::from))
    }

    pub fn settings(&self) -> Result<EvaluatorSettings> {
        Ok(EvaluatorSettings::from_kv(&self.kv)?)
    }

    pub fn mode(&self) -> Result<ModeArg> {
        if let Some(m) = self.common.mode {
            return Ok(m);
        }
        match self.kv.get("mode") {
            None | Some("auto") => Ok(ModeArg::Auto),
            Some("numeric") => Ok(ModeArg::Numeric),
            Some("closed-form") | Some("closed_form") => Ok(ModeArg::ClosedForm),
            Some(other) => bail!("unknown mode {other:?}"),
        }
    }

    pub fn potential(&self) -> Result<Potential> {
        let spec = self
            .get(&self.common.potential, "potential")
            .unwrap_or_else(|| "bessel".into());
        let ell = self
            .get(&self.common.ell, "ell")
            .map(|s| parse_real(&s))
            .transpose()?;
        build_potential(&spec, ell)
    }

    pub fn evaluator(&self) -> Result<MFunctionEvaluator> {
        let p = self.potential()?;
        let settings = self.settings()?;
        Ok(match self.mode()? {
            ModeArg::Auto => MFunctionEvaluator::auto(p, settings)?,
            ModeArg::Numeric => MFunctionEvaluator::numeric(p, settings)?,
            ModeArg::ClosedForm => MFunctionEvaluator::closed_form(p)?,
        })
    }

    /// Grid from `grid.*` config keys, then the `grid` string.
    pub fn grid(&self) -> Result<Option<GridSpec>> {
        let from_keys = self.kv.iter().any(|(k, _)| k.starts_with("grid."));
        let text = self.get(&self.common.grid, "grid");
        if !from_keys && text.is_none() {
            return Ok(None);
        }
        let mut g = GridSpec::from_kv(&self.kv)?;
        if let Some(t) = text {
            apply_grid_text(&mut g, &t)?;
        }
        Ok(Some(g))
    }
}

pub fn build_potential(spec: &str, ell: Option<f64>) -> Result<Potential> {
    let spec = spec.trim();
    if spec == "bessel" || spec.starts_with("bessel:") {
        let nu = match spec.strip_prefix("bessel:") {
            Some(n) => parse_real(n)?,
            None => 1.5,
        };
        return Ok(Potential::bessel(nu, ell.unwrap_or(1.0))?);
    }
    if spec == "free" {
        return Ok(Potential::free(ell.unwrap_or(0.0))?);
    }
    if let Some(path) = spec.strip_prefix("file:") {
        let p = Potential::from_file(Path::new(path))
            .with_context(|| format!("loading potential from {path}"))?;
        if let Some(e) = ell {
            if e != p.ell() {
                bail!(
                    "--ell {e} does not match the first grid point {} of {path}",
                    p.ell()
                );
            }
        }
        return Ok(p);
    }
    bail!("unknown potential {spec:?}; expected bessel[:NU], free or file:PATH")
}

fn range(text: &str) -> Result<(f64, f64, usize)> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        bail!("grid range {text:?} must be a:b:n");
    }
    Ok((
        parse_real(parts[0])?,
        parse_real(parts[1])?,
        parts[2].trim().parse()?,
    ))
}

pub fn apply_grid_text(g: &mut GridSpec, text: &str) -> Result<()> {
    let text = text.trim();
    if text == "default" {
        *g = GridSpec::default();
        return Ok(());
    }
    if !text.contains('=') {
        let n: Vec<usize> = text
            .split('x')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| anyhow!("grid {text:?} must look like 11x7x25"))?;
        if n.len() != 3 {
            bail!("grid {text:?} must list three counts: RExIMxREAL");
        }
        g.re_points = n[0];
        g.im_points = n[1];
        g.real_points = n[2];
    } else {
        for part in text.split(',') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("bad grid entry {part:?}"))?;
            let (a, b, n) = range(v)?;
            match k.trim() {
                "re" => (g.re_min, g.re_max, g.re_points) = (a, b, n),
                "im" => (g.im_min, g.im_max, g.im_points) = (a, b, n),
                // given as magnitudes or as negative values
                "real" => {
                    let (a, b) = (a.abs().min(b.abs()), a.abs().max(b.abs()));
                    (g.real_min, g.real_max, g.real_points) = (a, b, n)
                }
                other => bail!("unknown grid key {other:?}"),
            }
        }
    }
    g.validate()?;
    Ok(())
}

/// `mu=...,h=...` (either part optional; defaults `mu=inf`, `h=i`).
pub fn parse_system(
    text: Option<&str>,
    mu: Option<&str>,
    h: Option<&str>,
) -> Result<(ExtendedReal, Complex64)> {
    let mut mu_s = mu.map(str::to_string);
    let mut h_s = h.map(str::to_string);
    if let Some(t) = text {
        for part in t.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("bad system entry {part:?}; expected mu=...,h=..."))?;
            match k.trim() {
                "mu" => mu_s = Some(v.to_string()),
                "h" => h_s = Some(v.to_string()),
                other => bail!("unknown system key {other:?}"),
            }
        }
    }
    let mu = match parse_value(mu_s.as_deref().unwrap_or("inf"))? {
        Value::Infinity => ExtendedReal::Infinity,
        Value::Finite(v) if v.im == 0.0 => ExtendedReal::Finite(v.re),
        Value::Finite(v) => bail!("mu must be real, got {v}"),
    };
    let h = parse_complex(h_s.as_deref().unwrap_or("i"))?;
    Ok((mu, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_strings() {
        let (mu, h) = parse_system(Some("mu=inf,h=i"), None, None).unwrap();
        assert_eq!(mu, ExtendedReal::Infinity);
        assert_eq!(h, Complex64::i());
        let (mu, _) = parse_system(Some("mu=tan(pi/3),h=i"), None, None).unwrap();
        assert_eq!(mu, ExtendedReal::Finite((std::f64::consts::PI / 3.0).tan()));
        let (mu, h) = parse_system(None, Some("2"), Some("1+i")).unwrap();
        assert_eq!(
            (mu, h),
            (ExtendedReal::Finite(2.0), Complex64::new(1.0, 1.0))
        );
        assert!(parse_system(Some("mu=i"), None, None).is_err());
        assert!(parse_system(Some("nu=1"), None, None).is_err());
    }

    #[test]
    fn grid_strings() {
        let mut g = GridSpec::default();
        apply_grid_text(&mut g, "3x2x4").unwrap();
        assert_eq!((g.re_points, g.im_points, g.real_points), (3, 2, 4));
        apply_grid_text(&mut g, "re=-1:1:3,real=-1e-2:-1e2:5").unwrap();
        assert_eq!((g.re_min, g.real_min, g.real_max), (-1.0, 1e-2, 1e2));
        assert!(apply_grid_text(&mut g, "0x0x0").is_err());
        assert!(apply_grid_text(&mut g, "3x2").is_err());
    }

    #[test]
    fn potentials() {
        assert!(build_potential("bessel", None).unwrap().has_closed_form());
        assert!(!build_potential("bessel:5/2", None)
            .unwrap()
            .has_closed_form());
        assert_eq!(build_potential("free", None).unwrap().ell(), 0.0);
        assert!(build_potential("bessel", Some(0.0)).is_err());
        assert!(build_potential("harmonic", None).is_err());
    }
}
