//! Truncated Taylor series about `x = 0`.
//!
//! A series carries a fixed coefficient capacity plus a `valid_order`, the
//! highest coefficient that is actually known. Products truncate at the
//! smaller valid order of the operands and every derivative gives up one
//! order, so a chain of recurrence steps never claims coefficients it cannot
//! support. Coefficients above `valid_order` are kept at zero.

use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::scalar::Real;

/// Magnitude below which a constant term counts as zero for division.
pub const SINGULAR_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series has no derivative information left (valid order 0)")]
    Degenerate,
    #[error("series is singular at the origin (constant term {constant:e})")]
    SingularAtOrigin { constant: f64 },
    #[error("square root of a series with negative constant term {constant:e}")]
    NegativeSqrt { constant: f64 },
    #[error("non-finite coefficient at order {order}")]
    Overflow { order: usize },
    #[error("series capacity mismatch: {left} vs {right}")]
    CapacityMismatch { left: usize, right: usize },
    #[error("series needs at least one coefficient")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSeries<T = f64> {
    coeffs: Vec<T>,
    valid_order: usize,
}

impl<T: Real> TruncatedSeries<T> {
    /// Series from explicit coefficients; every coefficient is trusted.
    pub fn new(coeffs: Vec<T>) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        let valid_order = coeffs.len() - 1;
        Ok(Self { coeffs, valid_order })
    }

    pub fn from_f64(coeffs: &[f64]) -> Result<Self, SeriesError> {
        Self::new(coeffs.iter().map(|&c| T::from_f64(c)).collect())
    }

    /// Zero series with `capacity` coefficients.
    pub fn zero(capacity: usize) -> Self {
        assert!(capacity > 0, "series capacity must be positive");
        Self {
            coeffs: vec![T::zero(); capacity],
            valid_order: capacity - 1,
        }
    }

    pub fn constant(value: T, capacity: usize) -> Self {
        let mut s = Self::zero(capacity);
        s.coeffs[0] = value;
        s
    }

    /// The identity function `x`.
    pub fn variable(capacity: usize) -> Self {
        let mut s = Self::zero(capacity);
        if capacity > 1 {
            s.coeffs[1] = T::one();
        }
        s
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.coeffs.len()
    }

    #[inline]
    pub fn valid_order(&self) -> usize {
        self.valid_order
    }

    /// Coefficient `k`; zero above the valid order.
    #[inline]
    pub fn coeff(&self, k: usize) -> T {
        if k <= self.valid_order {
            self.coeffs[k]
        } else {
            T::zero()
        }
    }

    /// The trustworthy coefficients `c_0..=c_valid_order`.
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs[..=self.valid_order]
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coeffs().iter().map(|c| c.to_f64()).collect()
    }

    #[inline]
    pub fn eval_at_origin(&self) -> T {
        self.coeffs[0]
    }

    /// Partial sum `sum_k c_k x^k` over the valid coefficients (Horner).
    pub fn evaluate(&self, x: T) -> T {
        self.coeffs().iter().rev().fold(T::zero(), |acc, &c| acc * x + c)
    }

    /// Copy with capacity and valid order cut to `order + 1` coefficients.
    pub fn truncated(&self, order: usize) -> Self {
        let keep = (order + 1).min(self.capacity());
        let mut coeffs = self.coeffs[..keep].to_vec();
        let valid_order = self.valid_order.min(keep - 1);
        for c in coeffs.iter_mut().skip(valid_order + 1) {
            *c = T::zero();
        }
        Self { coeffs, valid_order }
    }

    /// Copy with the valid order lowered to at most `order`.
    pub fn with_valid_order(&self, order: usize) -> Self {
        let mut s = self.clone();
        s.lower_valid_order(order);
        s
    }

    fn lower_valid_order(&mut self, order: usize) {
        if order < self.valid_order {
            for c in &mut self.coeffs[order + 1..=self.valid_order] {
                *c = T::zero();
            }
            self.valid_order = order;
        }
    }

    pub fn cast<U: Real>(&self) -> TruncatedSeries<U> {
        TruncatedSeries {
            coeffs: self.coeffs.iter().map(|c| U::from_f64(c.to_f64())).collect(),
            valid_order: self.valid_order,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    pub fn ensure_finite(&self) -> Result<(), SeriesError> {
        match self.coeffs().iter().position(|c| !c.is_finite()) {
            Some(order) => Err(SeriesError::Overflow { order }),
            None => Ok(()),
        }
    }

    fn check_capacity(&self, other: &Self) {
        assert_eq!(self.capacity(), other.capacity(), "series capacity mismatch");
    }

    pub fn try_compatible(&self, other: &Self) -> Result<(), SeriesError> {
        if self.capacity() == other.capacity() {
            Ok(())
        } else {
            Err(SeriesError::CapacityMismatch {
                left: self.capacity(),
                right: other.capacity(),
            })
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: T) -> Self {
        self.check_capacity(other);
        let valid_order = self.valid_order.min(other.valid_order);
        let mut coeffs = vec![T::zero(); self.capacity()];
        for (k, out) in coeffs.iter_mut().enumerate().take(valid_order + 1) {
            *out = self.coeffs[k] + factor * other.coeffs[k];
        }
        Self { coeffs, valid_order }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.add_scaled(other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add_scaled(other, -T::one())
    }

    pub fn scale(&self, factor: T) -> Self {
        let mut s = self.clone();
        for c in &mut s.coeffs[..=s.valid_order] {
            *c *= factor;
        }
        s
    }

    /// Cauchy product truncated at the smaller valid order.
    pub fn mul(&self, other: &Self) -> Self {
        self.check_capacity(other);
        let valid_order = self.valid_order.min(other.valid_order);
        let a = &self.coeffs;
        let b = &other.coeffs;
        let mut coeffs = vec![T::zero(); self.capacity()];
        for (k, out) in coeffs.iter_mut().enumerate().take(valid_order + 1) {
            let mut acc = T::zero();
            for j in 0..=k {
                acc += a[j] * b[k - j];
            }
            *out = acc;
        }
        Self { coeffs, valid_order }
    }

    /// Product that reports non-finite coefficients.
    pub fn checked_mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.try_compatible(other)?;
        let out = self.mul(other);
        out.ensure_finite()?;
        Ok(out)
    }

    /// Term-by-term derivative; the valid order drops by exactly one.
    pub fn derivative(&self) -> Result<Self, SeriesError> {
        if self.valid_order == 0 {
            return Err(SeriesError::Degenerate);
        }
        let valid_order = self.valid_order - 1;
        let mut coeffs = vec![T::zero(); self.capacity()];
        for (k, out) in coeffs.iter_mut().enumerate().take(valid_order + 1) {
            *out = T::from_usize(k + 1) * self.coeffs[k + 1];
        }
        Ok(Self { coeffs, valid_order })
    }

    pub fn reciprocal(&self) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0];
        if a0.to_f64().abs() <= SINGULAR_THRESHOLD {
            return Err(SeriesError::SingularAtOrigin { constant: a0.to_f64() });
        }
        let n = self.valid_order;
        let inv0 = T::one().quotient(a0);
        let mut r = vec![T::zero(); self.capacity()];
        r[0] = inv0;
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += self.coeffs[j] * r[k - j];
            }
            r[k] = -acc * inv0;
        }
        let out = Self {
            coeffs: r,
            valid_order: n,
        };
        out.ensure_finite()?;
        Ok(out)
    }

    /// Positive-branch square root from `s^2 = a`.
    pub fn sqrt(&self) -> Result<Self, SeriesError> {
        let a0 = self.coeffs[0];
        let c = a0.to_f64();
        if c < 0.0 {
            return Err(SeriesError::NegativeSqrt { constant: c });
        }
        if c.abs() <= SINGULAR_THRESHOLD {
            return Err(SeriesError::SingularAtOrigin { constant: c });
        }
        let n = self.valid_order;
        let mut s = vec![T::zero(); self.capacity()];
        s[0] = a0.sqrt();
        let two_s0 = T::from_f64(2.0) * s[0];
        for k in 1..=n {
            let mut acc = self.coeffs[k];
            for j in 1..k {
                acc -= s[j] * s[k - j];
            }
            s[k] = acc.quotient(two_s0);
        }
        let out = Self {
            coeffs: s,
            valid_order: n,
        };
        out.ensure_finite()?;
        Ok(out)
    }

    /// `exp` via `e' = a' e`.
    pub fn exp(&self) -> Result<Self, SeriesError> {
        let n = self.valid_order;
        let mut e = vec![T::zero(); self.capacity()];
        e[0] = self.coeffs[0].exp();
        for k in 1..=n {
            let mut acc = T::zero();
            for j in 1..=k {
                acc += T::from_usize(j) * self.coeffs[j] * e[k - j];
            }
            e[k] = acc.quotient(T::from_usize(k));
        }
        let out = Self {
            coeffs: e,
            valid_order: n,
        };
        out.ensure_finite()?;
        Ok(out)
    }

    /// `(sin a, cos a)` via `s' = a' c`, `c' = -a' s`.
    pub fn sin_cos(&self) -> Result<(Self, Self), SeriesError> {
        let n = self.valid_order;
        let mut s = vec![T::zero(); self.capacity()];
        let mut c = vec![T::zero(); self.capacity()];
        s[0] = self.coeffs[0].sin();
        c[0] = self.coeffs[0].cos();
        for k in 1..=n {
            let mut acc_s = T::zero();
            let mut acc_c = T::zero();
            for j in 1..=k {
                let ja = T::from_usize(j) * self.coeffs[j];
                acc_s += ja * c[k - j];
                acc_c += ja * s[k - j];
            }
            let kk = T::from_usize(k);
            s[k] = acc_s.quotient(kk);
            c[k] = (-acc_c).quotient(kk);
        }
        let sin = Self {
            coeffs: s,
            valid_order: n,
        };
        let cos = Self {
            coeffs: c,
            valid_order: n,
        };
        sin.ensure_finite()?;
        cos.ensure_finite()?;
        Ok((sin, cos))
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, exponent: i32) -> Result<Self, SeriesError> {
        let base = if exponent < 0 { self.reciprocal()? } else { self.clone() };
        let mut e = exponent.unsigned_abs();
        let mut result = Self::constant(T::one(), self.capacity()).with_valid_order(base.valid_order);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&sq);
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq);
            }
        }
        result.ensure_finite()?;
        Ok(result)
    }

    /// True when every valid coefficient of the wrong parity is below
    /// `tol * max|c_k|`. `odd = true` asks for an odd function.
    pub fn has_parity(&self, odd: bool, tol: f64) -> bool {
        let scale = self.coeffs().iter().map(|c| c.to_f64().abs()).fold(0.0, f64::max);
        if scale == 0.0 {
            return true;
        }
        self.coeffs()
            .iter()
            .enumerate()
            .filter(|(k, _)| (k % 2 == 1) != odd)
            .all(|(_, c)| c.to_f64().abs() <= tol * scale)
    }
}

impl<T: Real> Add for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn add(self, rhs: Self) -> Self::Output {
        TruncatedSeries::add(self, rhs)
    }
}

impl<T: Real> Sub for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn sub(self, rhs: Self) -> Self::Output {
        TruncatedSeries::sub(self, rhs)
    }
}

impl<T: Real> Mul for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn mul(self, rhs: Self) -> Self::Output {
        TruncatedSeries::mul(self, rhs)
    }
}

impl<T: Real> Neg for &TruncatedSeries<T> {
    type Output = TruncatedSeries<T>;
    fn neg(self) -> Self::Output {
        self.scale(-T::one())
    }
}
