//! A small parser for numeric arguments: real or complex arithmetic with
//! `pi`, `e`, `i`, the functions `sqrt sin cos tan atan exp ln`, implicit
//! products such as `5pi/12` or `0.001i`, and the point at infinity `inf`.

use std::f64::consts::{E, PI};

use thiserror::Error;
use weyl_core::Complex64;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("cannot parse {input:?}: {msg}")]
pub struct ExprError {
    input: String,
    msg: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Finite(Complex64),
    Infinity,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(s: &str) -> Result<Vec<Tok>, String> {
    let cs: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_digit() || cs[i] == '.') {
                i += 1;
            }
            // exponent: 1e-6, 2.5E+3
            if i < cs.len() && (cs[i] == 'e' || cs[i] == 'E') {
                let mut j = i + 1;
                if j < cs.len() && (cs[j] == '+' || cs[j] == '-') {
                    j += 1;
                }
                if j < cs.len() && cs[j].is_ascii_digit() {
                    i = j;
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = cs[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| format!("bad number {text:?}"))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < cs.len() && (cs[i].is_ascii_alphanumeric() || cs[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(cs[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == 'π' {
            out.push(Tok::Ident("pi".into()));
            i += 1;
        } else {
            return Err(format!("unexpected character {c:?}"));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Complex64, String> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v += self.term()?;
            } else if self.eat('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<Complex64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                if d == Complex64::new(0.0, 0.0) {
                    return Err("division by zero".into());
                }
                v = if d.im == 0.0 { v.unscale(d.re) } else { v / d };
            } else if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Op('('))) {
                // implicit product: 2pi, 0.5i, 3(1+i)
                v *= self.power()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<Complex64, String> {
        if self.eat('-') {
            Ok(-self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Complex64, String> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.unary()?;
            if e.im == 0.0 && e.re.fract() == 0.0 && e.re.abs() <= 64.0 {
                return Ok(base.powi(e.re as i32));
            }
            return Ok(base.powc(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Complex64, String> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Complex64::new(v, 0.0)),
            Some(Tok::Op('(')) => {
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err("missing ')'".into());
                }
                Ok(v)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "i" | "j" => Ok(Complex64::i()),
                "pi" => Ok(Complex64::new(PI, 0.0)),
                "e" => Ok(Complex64::new(E, 0.0)),
                "inf" => Err("inf is only allowed on its own".into()),
                f => {
                    if !self.eat('(') {
                        return Err(format!("unknown name {f:?}"));
                    }
                    let a = self.expr()?;
                    if !self.eat(')') {
                        return Err("missing ')'".into());
                    }
                    apply(f, a)
                }
            },
            Some(Tok::Op(c)) => Err(format!("unexpected {c:?}")),
            None => Err("unexpected end of input".into()),
        }
    }
}

fn apply(f: &str, a: Complex64) -> Result<Complex64, String> {
    let real = |g: fn(f64) -> f64| -> Result<Complex64, String> {
        if a.im == 0.0 {
            Ok(Complex64::new(g(a.re), 0.0))
        } else {
            Err(format!("{f} takes a real argument"))
        }
    };
    match f {
        "sqrt" => {
            if a.im == 0.0 && a.re >= 0.0 {
                Ok(Complex64::new(a.re.sqrt(), 0.0))
            } else {
                Ok(a.sqrt())
            }
        }
        "sin" => real(f64::sin).or_else(|_| Ok(a.sin())),
        "cos" => real(f64::cos).or_else(|_| Ok(a.cos())),
        "tan" => real(f64::tan).or_else(|_| Ok(a.tan())),
        "atan" => real(f64::atan),
        "exp" => real(f64::exp).or_else(|_| Ok(a.exp())),
        "ln" | "log" => {
            if a.im == 0.0 && a.re > 0.0 {
                Ok(Complex64::new(a.re.ln(), 0.0))
            } else {
                Ok(a.ln())
            }
        }
        _ => Err(format!("unknown function {f:?}")),
    }
}

pub fn parse_value(input: &str) -> Result<Value, ExprError> {
    let err = |msg: String| ExprError {
        input: input.to_string(),
        msg,
    };
    let t = input.trim();
    if matches!(t, "inf" | "+inf" | "-inf" | "∞" | "infinity") {
        return Ok(Value::Infinity);
    }
    let toks = tokenize(t).map_err(err)?;
    if toks.is_empty() {
        return Err(err("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0 };
    let v = p.expr().map_err(err)?;
    if p.pos != p.toks.len() {
        return Err(err("trailing input".into()));
    }
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(err("value is not finite".into()));
    }
    // drop signed zeros so that "-1" is exactly -1 + 0i
    Ok(Value::Finite(Complex64::new(v.re + 0.0, v.im + 0.0)))
}

pub fn parse_complex(input: &str) -> Result<Complex64, ExprError> {
    match parse_value(input)? {
        Value::Finite(v) => Ok(v),
        Value::Infinity => Err(ExprError {
            input: input.into(),
            msg: "expected a finite number".into(),
        }),
    }
}

pub fn parse_real(input: &str) -> Result<f64, ExprError> {
    let v = parse_complex(input)?;
    if v.im != 0.0 {
        return Err(ExprError {
            input: input.into(),
            msg: "expected a real number".into(),
        });
    }
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Complex64 {
        parse_complex(s).unwrap()
    }

    #[test]
    fn reals_and_constants() {
        assert_eq!(parse_real("pi").unwrap(), PI);
        assert_eq!(parse_real("-1").unwrap(), -1.0);
        assert_eq!(parse_real("1e-6").unwrap(), 1e-6);
        assert_eq!(parse_real("2.5E+3").unwrap(), 2500.0);
        assert_eq!(parse_real("tan(pi/3)").unwrap(), (PI / 3.0).tan());
        assert_eq!(parse_real("5pi/12").unwrap(), 5.0 * PI / 12.0);
        assert_eq!(parse_real("2^3").unwrap(), 8.0);
        assert_eq!(parse_real("atan(0.5)").unwrap(), 0.5f64.atan());
        assert_eq!(parse_real("π/2").unwrap(), PI / 2.0);
    }

    #[test]
    fn complex_values() {
        assert_eq!(c("i"), Complex64::i());
        assert_eq!(c("1+i"), Complex64::new(1.0, 1.0));
        assert_eq!(c("-1+0.001i"), Complex64::new(-1.0, 0.001));
        assert_eq!(c("2i"), Complex64::new(0.0, 2.0));
        assert_eq!(c("(1+i)*(1-i)"), Complex64::new(2.0, 0.0));
        assert_eq!(c("-i"), Complex64::new(0.0, -1.0));
        assert_eq!(c("3 - 4i"), Complex64::new(3.0, -4.0));
    }

    #[test]
    fn infinity() {
        assert_eq!(parse_value("inf").unwrap(), Value::Infinity);
        assert_eq!(parse_value(" -inf ").unwrap(), Value::Infinity);
        assert!(parse_complex("inf").is_err());
        assert!(parse_value("1+inf").is_err());
    }

    #[test]
    fn errors() {
        for bad in ["", "1+", "foo", "(1", "1/0", "2 3", "tan(i)x", "$"] {
            assert!(parse_value(bad).is_err(), "{bad}");
        }
        assert!(parse_real("1+i").is_err());
        assert!(parse_real("atan(i)").is_err());
    }
}
