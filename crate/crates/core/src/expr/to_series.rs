use thiserror::Error;

use super::{Bindings, EvalError, Expr, Func};
use crate::scalar::Real;
use crate::series::{SeriesError, TruncatedSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExpandError {
    #[error(transparent)]
    Unbound(#[from] EvalError),
    #[error("expression is singular at x = 0")]
    SingularAtOrigin,
    #[error("square root of a negative value at x = 0")]
    NegativeSqrtAtOrigin,
    #[error("series expansion overflowed at order {0}")]
    Overflow(usize),
}

impl From<SeriesError> for ExpandError {
    fn from(e: SeriesError) -> Self {
        match e {
            SeriesError::SingularAtOrigin { .. } => ExpandError::SingularAtOrigin,
            SeriesError::NegativeSqrt { .. } => ExpandError::NegativeSqrtAtOrigin,
            SeriesError::Overflow { order } => ExpandError::Overflow(order),
            // Capacities are uniform inside one expansion and never zero.
            SeriesError::Degenerate | SeriesError::CapacityMismatch { .. } | SeriesError::Empty => {
                ExpandError::Overflow(0)
            }
        }
    }
}

/// Taylor coefficients of `e` about `x = 0`, `capacity` of them, all valid.
pub fn to_series<T: Real>(e: &Expr, bindings: &Bindings, capacity: usize) -> Result<TruncatedSeries<T>, ExpandError> {
    assert!(capacity > 0, "series capacity must be positive");
    e.check_bound(bindings)?;
    expand(e, bindings, capacity)
}

fn expand<T: Real>(e: &Expr, bindings: &Bindings, capacity: usize) -> Result<TruncatedSeries<T>, ExpandError> {
    let out = match e {
        Expr::Num(v) => TruncatedSeries::constant(T::from_f64(*v), capacity),
        Expr::X => TruncatedSeries::variable(capacity),
        Expr::Param(name) => {
            let v = bindings
                .get(name)
                .ok_or_else(|| EvalError::UnboundParameter(name.clone()))?;
            TruncatedSeries::constant(T::from_f64(*v), capacity)
        }
        Expr::Neg(a) => -&expand::<T>(a, bindings, capacity)?,
        Expr::Add(a, b) => &expand::<T>(a, bindings, capacity)? + &expand(b, bindings, capacity)?,
        Expr::Sub(a, b) => &expand::<T>(a, bindings, capacity)? - &expand(b, bindings, capacity)?,
        Expr::Mul(a, b) => &expand::<T>(a, bindings, capacity)? * &expand(b, bindings, capacity)?,
        Expr::Div(a, b) => {
            let num = expand::<T>(a, bindings, capacity)?;
            let den = expand::<T>(b, bindings, capacity)?;
            num.mul(&den.reciprocal()?)
        }
        Expr::Pow(a, n) => expand::<T>(a, bindings, capacity)?.powi(*n)?,
        Expr::Call(func, a) => {
            let arg = expand::<T>(a, bindings, capacity)?;
            match func {
                Func::Exp => arg.exp()?,
                Func::Sqrt => arg.sqrt()?,
                Func::Sin => arg.sin_cos()?.0,
                Func::Cos => arg.sin_cos()?.1,
            }
        }
    };
    out.ensure_finite()?;
    Ok(out)
}
