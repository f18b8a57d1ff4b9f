//! User-supplied mass and potential expressions.
//!
//! Grammar (highest precedence first):
//!
//! ```text
//! atom    := number | x | identifier | func "(" expr ")" | "(" expr ")"
//! power   := atom ( "^" integer )*          integer: [+-]?digits or "(" [+-]?digits ")"
//! unary   := "-" unary | power
//! term    := unary ( ("*" | "/") unary )*
//! expr    := term ( ("+" | "-") term )*
//! func    := exp | sqrt | sin | cos
//! ```
//!
//! `x` is the coordinate; every other identifier is a named parameter that
//! must be bound when the expression is evaluated or expanded.

mod parse;
mod to_series;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use parse::{parse, ParseError, ParseErrorKind, MAX_DEPTH};
pub use to_series::{to_series, ExpandError};

/// Named parameter values, e.g. `gamma = 0.1`.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Sqrt,
    Sin,
    Cos,
}

impl Func {
    pub const ALL: [Func; 4] = [Func::Exp, Func::Sqrt, Func::Sin, Func::Cos];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Param(String),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("parameter '{0}' is not bound")]
    UnboundParameter(String),
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("square root of negative value {value} at x = {x}")]
    NegativeSqrt { x: f64, value: f64 },
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse(text)
    }

    /// Names of all parameters referenced by the tree, sorted.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Param(name) = e {
                if !out.contains(name) {
                    out.push(name.clone());
                }
            }
        });
        out.sort();
        out
    }

    /// Fails on the first parameter without a binding.
    pub fn check_bound(&self, bindings: &Bindings) -> Result<(), EvalError> {
        match self.parameters().into_iter().find(|p| !bindings.contains_key(p)) {
            Some(p) => Err(EvalError::UnboundParameter(p)),
            None => Ok(()),
        }
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::X | Expr::Param(_) => {}
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.visit(f),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn eval(&self, x: f64, bindings: &Bindings) -> Result<f64, EvalError> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Param(name) => *bindings
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?,
            Expr::Neg(a) => -a.eval(x, bindings)?,
            Expr::Add(a, b) => a.eval(x, bindings)? + b.eval(x, bindings)?,
            Expr::Sub(a, b) => a.eval(x, bindings)? - b.eval(x, bindings)?,
            Expr::Mul(a, b) => a.eval(x, bindings)? * b.eval(x, bindings)?,
            Expr::Div(a, b) => {
                let num = a.eval(x, bindings)?;
                let den = b.eval(x, bindings)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(x, bindings)?;
                if *n < 0 && base == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                base.powi(*n)
            }
            Expr::Call(func, a) => {
                let arg = a.eval(x, bindings)?;
                match func {
                    Func::Exp => arg.exp(),
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(EvalError::NegativeSqrt { x, value: arg });
                        }
                        arg.sqrt()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            // A negative literal prints with a leading minus, so it binds like negation.
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Num(_) | Expr::X | Expr::Param(_) | Expr::Call(..) => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            f.write_str("(")?;
            self.fmt_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::X => f.write_str("x"),
            Expr::Param(name) => f.write_str(name),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.fmt_at(f, 3)
            }
            Expr::Add(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" + ")?;
                b.fmt_at(f, 2)
            }
            Expr::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                f.write_str(" - ")?;
                b.fmt_at(f, 2)
            }
            Expr::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str("*")?;
                b.fmt_at(f, 3)
            }
            Expr::Div(a, b) => {
                a.fmt_at(f, 2)?;
                f.write_str("/")?;
                b.fmt_at(f, 3)
            }
            Expr::Pow(a, n) => {
                a.fmt_at(f, 4)?;
                if *n < 0 {
                    write!(f, "^({n})")
                } else {
                    write!(f, "^{n}")
                }
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

/// Canonical text form; parsing it yields an equal tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

/// Parse `name=value`.
pub fn parse_binding(text: &str) -> Result<(String, f64), String> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got '{text}'"))?;
    let name = name.trim();
    let valid_ident = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !valid_ident || name == "x" || Func::from_name(name).is_some() {
        return Err(format!("'{name}' is not a valid parameter name"));
    }
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("parameter '{name}' has non-numeric value '{}'", value.trim()))?;
    if !value.is_finite() {
        return Err(format!("parameter '{name}' must be finite"));
    }
    Ok((name.to_string(), value))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn eval_examples() {
        let b = bind(&[("gamma", 0.1)]);
        let m = parse("1+gamma*x^2").unwrap();
        assert!((m.eval(2.0, &b).unwrap() - 1.4).abs() < 1e-15);
        assert_eq!(parse("0.5*x^2").unwrap().eval(0.0, &b).unwrap(), 0.0);
        assert_eq!(
            parse("1/x").unwrap().eval(0.0, &b).unwrap_err(),
            EvalError::DivisionByZero { x: 0.0 }
        );
        assert!(matches!(
            parse("sqrt(x)").unwrap().eval(-1.0, &b),
            Err(EvalError::NegativeSqrt { .. })
        ));
        assert_eq!(
            parse("omega*x").unwrap().eval(1.0, &b).unwrap_err(),
            EvalError::UnboundParameter("omega".into())
        );
        assert!(matches!(
            parse("x^(-2)").unwrap().eval(0.0, &b),
            Err(EvalError::DivisionByZero { .. })
        ));
    }

    #[test]
    fn parameters_listed_once() {
        let e = parse("gamma*x + m0*gamma - omega").unwrap();
        assert_eq!(e.parameters(), vec!["gamma", "m0", "omega"]);
        let b = bind(&[("gamma", 1.0), ("m0", 1.0)]);
        assert_eq!(
            e.check_bound(&b).unwrap_err(),
            EvalError::UnboundParameter("omega".into())
        );
    }

    #[test]
    fn display_is_canonical() {
        let cases = [
            ("1 + gamma*x^2", "1 + gamma*x^2"),
            ("-(x^2)", "-x^2"),
            ("(-x)^2", "(-x)^2"),
            ("a-(b-c)", "a - (b - c)"),
            ("a/(b*c)", "a/(b*c)"),
            ("x^-1", "x^(-1)"),
            ("exp(-x^2/2)", "exp(-x^2/2)"),
            ("2*-x", "2*-x"),
        ];
        let negative_base = Expr::Pow(Box::new(Expr::Num(-1.5)), 2);
        assert_eq!(negative_base.to_string(), "(-1.5)^2");
        assert_eq!(parse("(-1.5)^2").unwrap().eval(0.0, &Bindings::new()).unwrap(), 2.25);
        for (src, want) in cases {
            let e = parse(src).unwrap();
            assert_eq!(e.to_string(), want, "{src}");
            assert_eq!(parse(&e.to_string()).unwrap(), e);
        }
    }

    #[test]
    fn bindings_parse() {
        assert_eq!(parse_binding("gamma=0.1").unwrap(), ("gamma".into(), 0.1));
        assert_eq!(parse_binding(" m0 = 2 ").unwrap(), ("m0".into(), 2.0));
        assert!(parse_binding("gamma").is_err());
        assert!(parse_binding("x=1").is_err());
        assert!(parse_binding("exp=1").is_err());
        assert!(parse_binding("g=abc").is_err());
        assert!(parse_binding("g=inf").is_err());
        assert!(parse_binding("1g=2").is_err());
    }
}
