//! von Roos kinetic orderings and their reduction to a canonical ODE.
//!
//! Every Hermitian ordering `(1/4)(m^eta p m^eps p m^rho + m^rho p m^eps p m^eta)`
//! with `eta + eps + rho = -1` equals the BenDaniel-Duke operator
//! `-(1/2)(psi'/m)'` plus a local ordering potential
//!
//! ```text
//! U = -(1/4) [ (eta + rho) m''/m^2 + (rho(eps + rho - 1) + eta(eps + eta - 1)) m'^2/m^3 ]
//! ```
//!
//! so `H psi = E psi` becomes `psi'' = P psi' + (Q_V + E Q_E) psi` with
//! `P = m'/m`, `Q_V = 2m(V + U)` and `Q_E = -2m`. Writing `psi = g f` with
//! `lambda = g'/g` then gives `f'' = p0 f' + q0 f`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{self, Bindings, EvalError, ExpandError, Expr};
use crate::scalar::Real;
use crate::series::{SeriesError, TruncatedSeries};

pub const CONSTRAINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HamiltonianError {
    #[error("ordering parameters violate eta + eps + rho = -1 (sum is {sum})")]
    ConstraintViolation { sum: f64 },
    #[error("invalid ordering '{0}': expected a preset (BDD, MM, ZK, LK-sym) or 'eta,eps,rho'")]
    InvalidOrdering(String),
    #[error("mass must be positive, found m = {value} at x = {x}")]
    UnphysicalMass { x: f64, value: f64 },
    #[error(transparent)]
    Expand(#[from] ExpandError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// von Roos ambiguity parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderingSpec {
    pub eta: f64,
    pub eps: f64,
    pub rho: f64,
}

impl OrderingSpec {
    pub fn new(eta: f64, eps: f64, rho: f64) -> Result<Self, HamiltonianError> {
        let sum = eta + eps + rho;
        if !sum.is_finite() || (sum + 1.0).abs() > CONSTRAINT_TOLERANCE {
            return Err(HamiltonianError::ConstraintViolation { sum });
        }
        Ok(Self { eta, eps, rho })
    }

    /// Weight of `m''/m^2` inside the bracket of `U`.
    pub fn curvature_weight(&self) -> f64 {
        self.eta + self.rho
    }

    /// Weight of `m'^2/m^3` inside the bracket of `U`.
    pub fn gradient_weight(&self) -> f64 {
        self.rho * (self.eps + self.rho - 1.0) + self.eta * (self.eps + self.eta - 1.0)
    }

    /// `U` at a point from `m`, `m'`, `m''`.
    pub fn potential_at(&self, m: f64, dm: f64, d2m: f64) -> f64 {
        -0.25 * (self.curvature_weight() * d2m / (m * m) + self.gradient_weight() * dm * dm / (m * m * m))
    }
}

/// Named orderings, keyed by their written operator forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OrderingPreset {
    /// BenDaniel-Duke, `(1/2) p (1/m) p`.
    #[serde(rename = "BDD")]
    Bdd,
    /// `(1/4)(m^-1 p^2 + p^2 m^-1)`.
    #[serde(rename = "MM")]
    Mm,
    /// Zhu-Kroemer, `(1/2) m^-1/2 p^2 m^-1/2`.
    #[serde(rename = "ZK")]
    Zk,
    /// `(1/4)(p m^-1/2 p m^-1/2 + m^-1/2 p m^-1/2 p)`.
    #[serde(rename = "LK-sym")]
    LkSym,
}

impl OrderingPreset {
    pub const ALL: [OrderingPreset; 4] = [
        OrderingPreset::Bdd,
        OrderingPreset::Mm,
        OrderingPreset::Zk,
        OrderingPreset::LkSym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OrderingPreset::Bdd => "BDD",
            OrderingPreset::Mm => "MM",
            OrderingPreset::Zk => "ZK",
            OrderingPreset::LkSym => "LK-sym",
        }
    }

    pub fn spec(self) -> OrderingSpec {
        let (eta, eps, rho) = match self {
            OrderingPreset::Bdd => (0.0, -1.0, 0.0),
            OrderingPreset::Mm => (-1.0, 0.0, 0.0),
            OrderingPreset::Zk => (-0.5, 0.0, -0.5),
            OrderingPreset::LkSym => (-0.5, -0.5, 0.0),
        };
        OrderingSpec { eta, eps, rho }
    }

    pub fn operator_form(self) -> &'static str {
        match self {
            OrderingPreset::Bdd => "(1/2) p (1/m) p",
            OrderingPreset::Mm => "(1/4) (m^-1 p^2 + p^2 m^-1)",
            OrderingPreset::Zk => "(1/2) m^-1/2 p^2 m^-1/2",
            OrderingPreset::LkSym => "(1/4) (p m^-1/2 p m^-1/2 + m^-1/2 p m^-1/2 p)",
        }
    }
}

impl fmt::Display for OrderingPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A preset or a custom `(eta, eps, rho)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ordering {
    pub spec: OrderingSpec,
    pub preset: Option<OrderingPreset>,
}

impl Ordering {
    pub fn preset(preset: OrderingPreset) -> Self {
        Self {
            spec: preset.spec(),
            preset: Some(preset),
        }
    }

    pub fn custom(spec: OrderingSpec) -> Self {
        Self { spec, preset: None }
    }

    pub fn label(&self) -> String {
        match self.preset {
            Some(p) => p.name().to_string(),
            None => format!("{},{},{}", self.spec.eta, self.spec.eps, self.spec.rho),
        }
    }
}

impl From<OrderingPreset> for Ordering {
    fn from(p: OrderingPreset) -> Self {
        Ordering::preset(p)
    }
}

impl FromStr for Ordering {
    type Err = HamiltonianError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if let Some(p) = OrderingPreset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(text))
        {
            return Ok(Ordering::preset(p));
        }
        let parts: Vec<&str> = text.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(HamiltonianError::InvalidOrdering(text.to_string()));
        }
        let mut vals = [0.0; 3];
        for (v, p) in vals.iter_mut().zip(&parts) {
            *v = p
                .parse()
                .map_err(|_| HamiltonianError::InvalidOrdering(text.to_string()))?;
        }
        let spec = OrderingSpec::new(vals[0], vals[1], vals[2])?;
        let preset = OrderingPreset::ALL.into_iter().find(|p| p.spec() == spec);
        Ok(Ordering { spec, preset })
    }
}

fn check_mass<T: Real>(m: &TruncatedSeries<T>) -> Result<(), HamiltonianError> {
    let m0 = m.eval_at_origin().to_f64();
    if m0 > 0.0 && m0.is_finite() {
        Ok(())
    } else {
        Err(HamiltonianError::UnphysicalMass { x: 0.0, value: m0 })
    }
}

/// Ordering potential `U` as a series. Loses two orders of `m`.
pub fn ordering_potential<T: Real>(
    m: &TruncatedSeries<T>,
    ord: &OrderingSpec,
) -> Result<TruncatedSeries<T>, HamiltonianError> {
    check_mass(m)?;
    let inv = m.reciprocal()?;
    let dm = m.derivative()?;
    let d2m = dm.derivative()?;
    let inv2 = inv.mul(&inv);
    let curvature = d2m.mul(&inv2);
    let gradient = dm.mul(&dm).mul(&inv2).mul(&inv);
    let bracket = curvature
        .scale(T::from_f64(ord.curvature_weight()))
        .add_scaled(&gradient, T::from_f64(ord.gradient_weight()));
    let u = bracket.scale(T::from_f64(-0.25));
    u.ensure_finite()?;
    Ok(u)
}

/// `psi'' = drift psi' + (potential + E energy) psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedOde<T = f64> {
    /// `P = m'/m`.
    pub drift: TruncatedSeries<T>,
    /// `Q_V = 2m (V + U)`.
    pub potential: TruncatedSeries<T>,
    /// `Q_E = -2m`.
    pub energy: TruncatedSeries<T>,
}

pub fn reduce_to_ode<T: Real>(
    m: &TruncatedSeries<T>,
    v: &TruncatedSeries<T>,
    ord: &OrderingSpec,
) -> Result<ReducedOde<T>, HamiltonianError> {
    m.try_compatible(v)?;
    let u = ordering_potential(m, ord)?;
    let drift = m.derivative()?.mul(&m.reciprocal()?);
    let two = T::from_f64(2.0);
    let potential = m.mul(&v.add(&u)).scale(two);
    let energy = m.scale(-two);
    Ok(ReducedOde {
        drift,
        potential,
        energy,
    })
}

/// Gauge `psi = g f`, given by `lambda = g'/g` as an expression in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeSpec {
    pub lambda: Expr,
}

impl Default for GaugeSpec {
    /// `g = exp(-x^2/2)`, `lambda = -x`.
    fn default() -> Self {
        Self {
            lambda: Expr::Neg(Box::new(Expr::X)),
        }
    }
}

impl GaugeSpec {
    pub fn new(lambda: Expr) -> Self {
        Self { lambda }
    }

    /// Identity gauge, `g = 1`.
    pub fn identity() -> Self {
        Self { lambda: Expr::Num(0.0) }
    }

    pub fn is_gaussian(&self) -> bool {
        self.lambda == Expr::Neg(Box::new(Expr::X))
    }

    pub fn lambda_series<T: Real>(
        &self,
        bindings: &Bindings,
        capacity: usize,
    ) -> Result<TruncatedSeries<T>, HamiltonianError> {
        Ok(expr::to_series(&self.lambda, bindings, capacity)?)
    }

    /// `g(x) = exp(integral_0^x lambda)`, `g(0) = 1`.
    pub fn factor(&self, x: f64, bindings: &Bindings) -> Result<f64, HamiltonianError> {
        if self.is_gaussian() {
            return Ok((-0.5 * x * x).exp());
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        // Composite Simpson on [0, x].
        const PANELS: usize = 256;
        let h = x / PANELS as f64;
        let mut acc = self.lambda.eval(0.0, bindings)? + self.lambda.eval(x, bindings)?;
        for i in 1..PANELS {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * self.lambda.eval(i as f64 * h, bindings)?;
        }
        Ok((acc * h / 3.0).exp())
    }
}

/// `f'' = p0 f' + (q0_v + E q0_e) f`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalOde<T = f64> {
    pub p0: TruncatedSeries<T>,
    pub q0_v: TruncatedSeries<T>,
    pub q0_e: TruncatedSeries<T>,
}

impl<T: Real> CanonicalOde<T> {
    pub fn capacity(&self) -> usize {
        self.p0.capacity()
    }

    pub fn valid_order(&self) -> usize {
        self.p0
            .valid_order()
            .min(self.q0_v.valid_order())
            .min(self.q0_e.valid_order())
    }

    pub fn truncated(&self, order: usize) -> Self {
        Self {
            p0: self.p0.truncated(order),
            q0_v: self.q0_v.truncated(order),
            q0_e: self.q0_e.truncated(order),
        }
    }

    /// `q0` at a fixed energy.
    pub fn q0_at(&self, energy: T) -> TruncatedSeries<T> {
        self.q0_v.add_scaled(&self.q0_e, energy)
    }

    /// `p0` odd and both parts of `q0` even, to relative `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.p0.has_parity(true, tol) && self.q0_v.has_parity(false, tol) && self.q0_e.has_parity(false, tol)
    }

    pub fn cast<U: Real>(&self) -> CanonicalOde<U> {
        CanonicalOde {
            p0: self.p0.cast(),
            q0_v: self.q0_v.cast(),
            q0_e: self.q0_e.cast(),
        }
    }
}

pub fn apply_gauge<T: Real>(
    reduced: &ReducedOde<T>,
    lambda: &TruncatedSeries<T>,
) -> Result<CanonicalOde<T>, HamiltonianError> {
    reduced.drift.try_compatible(lambda)?;
    let two = T::from_f64(2.0);
    let p0 = reduced.drift.add_scaled(lambda, -two);
    let correction = lambda.derivative()?.add(&lambda.mul(lambda));
    let q0_v = reduced.potential.add(&reduced.drift.mul(lambda)).sub(&correction);
    Ok(CanonicalOde {
        p0,
        q0_v,
        q0_e: reduced.energy.clone(),
    })
}

/// Mass, potential, ordering and gauge: everything that defines a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct PdmProblem {
    pub mass: Expr,
    pub potential: Expr,
    pub bindings: Bindings,
    pub ordering: Ordering,
    pub gauge: GaugeSpec,
}

impl PdmProblem {
    pub fn new(mass: Expr, potential: Expr, bindings: Bindings, ordering: Ordering) -> Self {
        Self {
            mass,
            potential,
            bindings,
            ordering,
            gauge: GaugeSpec::default(),
        }
    }

    /// Parse and bind in one step; handy in tests and examples.
    pub fn from_text(
        mass: &str,
        potential: &str,
        params: &[(&str, f64)],
        ordering: impl Into<Ordering>,
    ) -> Result<Self, crate::Error> {
        let bindings = params.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        Ok(Self::new(
            expr::parse(mass)?,
            expr::parse(potential)?,
            bindings,
            ordering.into(),
        ))
    }

    pub fn with_gauge(mut self, gauge: GaugeSpec) -> Self {
        self.gauge = gauge;
        self
    }

    /// Canonical ODE with `capacity` coefficients, all of them valid.
    pub fn canonical_ode<T: Real>(&self, capacity: usize) -> Result<CanonicalOde<T>, HamiltonianError> {
        assert!(capacity > 0, "series capacity must be positive");
        // The ordering potential and the gauge correction each use up to two derivatives.
        let wide = capacity + 2;
        let reduced = self.wide_reduction::<T>(wide)?;
        let lambda = self.gauge.lambda_series::<T>(&self.bindings, wide)?;
        let ode = apply_gauge(&reduced, &lambda)?;
        Ok(ode.truncated(capacity - 1))
    }

    /// `(P, Q_V, Q_E)` with `capacity` valid coefficients.
    pub fn reduced_ode<T: Real>(&self, capacity: usize) -> Result<ReducedOde<T>, HamiltonianError> {
        assert!(capacity > 0, "series capacity must be positive");
        let r = self.wide_reduction::<T>(capacity + 2)?;
        Ok(ReducedOde {
            drift: r.drift.truncated(capacity - 1),
            potential: r.potential.truncated(capacity - 1),
            energy: r.energy.truncated(capacity - 1),
        })
    }

    fn wide_reduction<T: Real>(&self, wide: usize) -> Result<ReducedOde<T>, HamiltonianError> {
        let m = expr::to_series::<T>(&self.mass, &self.bindings, wide)?;
        let v = expr::to_series::<T>(&self.potential, &self.bindings, wide)?;
        reduce_to_ode(&m, &v, &self.ordering.spec)
    }

    pub fn mass_at(&self, x: f64) -> Result<f64, HamiltonianError> {
        let m = self.mass.eval(x, &self.bindings)?;
        if m > 0.0 {
            Ok(m)
        } else {
            Err(HamiltonianError::UnphysicalMass { x, value: m })
        }
    }

    pub fn potential_at(&self, x: f64) -> Result<f64, HamiltonianError> {
        Ok(self.potential.eval(x, &self.bindings)?)
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.bindings.get(name).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mass(g: f64, cap: usize) -> TruncatedSeries {
        let mut c = vec![0.0; cap];
        c[0] = 1.0;
        c[2] = g;
        TruncatedSeries::new(c).unwrap()
    }

    fn harmonic(cap: usize) -> TruncatedSeries {
        let mut c = vec![0.0; cap];
        c[2] = 0.5;
        TruncatedSeries::new(c).unwrap()
    }

    #[test]
    fn constraint_is_enforced() {
        assert!(OrderingSpec::new(0.0, -1.0, 0.0).is_ok());
        assert!(matches!(
            OrderingSpec::new(0.1, 0.2, 0.3),
            Err(HamiltonianError::ConstraintViolation { .. })
        ));
        for p in OrderingPreset::ALL {
            let s = p.spec();
            assert!(OrderingSpec::new(s.eta, s.eps, s.rho).is_ok(), "{p}");
        }
    }

    #[test]
    fn ordering_parsing() {
        assert_eq!("BDD".parse::<Ordering>().unwrap().preset, Some(OrderingPreset::Bdd));
        assert_eq!(
            "lk-sym".parse::<Ordering>().unwrap().preset,
            Some(OrderingPreset::LkSym)
        );
        let custom: Ordering = "-0.5, 0, -0.5".parse().unwrap();
        assert_eq!(custom.preset, Some(OrderingPreset::Zk));
        let third: Ordering = "-0.25,-0.5,-0.25".parse().unwrap();
        assert_eq!(third.preset, None);
        assert!(matches!(
            "0.1,0.2,0.3".parse::<Ordering>(),
            Err(HamiltonianError::ConstraintViolation { .. })
        ));
        assert!(matches!(
            "XYZ".parse::<Ordering>(),
            Err(HamiltonianError::InvalidOrdering(_))
        ));
        assert!("1,2".parse::<Ordering>().is_err());
        assert!("a,b,c".parse::<Ordering>().is_err());
    }

    #[test]
    fn bdd_has_no_ordering_term() {
        let u = ordering_potential(&mass(0.1, 12), &OrderingPreset::Bdd.spec()).unwrap();
        assert!(u.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn mm_ordering_term_at_origin() {
        let u = ordering_potential(&mass(0.1, 12), &OrderingPreset::Mm.spec()).unwrap();
        assert_abs_diff_eq!(u.eval_at_origin(), 0.05, epsilon = 1e-15);
        assert_eq!(u.valid_order(), 9);
    }

    #[test]
    fn constant_mass_has_no_ordering_term() {
        let m = TruncatedSeries::constant(1.7, 10);
        for p in OrderingPreset::ALL {
            let u = ordering_potential(&m, &p.spec()).unwrap();
            assert!(u.coeffs().iter().all(|&c| c == 0.0), "{p}");
        }
    }

    #[test]
    fn unphysical_mass_rejected() {
        let m = TruncatedSeries::<f64>::from_f64(&[-1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(
            ordering_potential(&m, &OrderingPreset::Bdd.spec()),
            Err(HamiltonianError::UnphysicalMass { .. })
        ));
    }

    #[test]
    fn reduce_constant_mass_oscillator() {
        let r = reduce_to_ode(&mass(0.0, 8), &harmonic(8), &OrderingPreset::Bdd.spec()).unwrap();
        assert!(r.drift.coeffs().iter().all(|&c| c == 0.0));
        assert_abs_diff_eq!(r.potential.coeff(2), 1.0);
        assert_abs_diff_eq!(r.energy.coeff(0), -2.0);
    }

    #[test]
    fn reduce_bdd_drift_is_log_derivative() {
        let r = reduce_to_ode(&mass(0.1, 10), &harmonic(10), &OrderingPreset::Bdd.spec()).unwrap();
        assert_abs_diff_eq!(r.drift.coeff(1), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(r.drift.coeff(3), -0.02, epsilon = 1e-15);
        assert_abs_diff_eq!(r.drift.coeff(5), 0.002, epsilon = 1e-15);
        let mm = reduce_to_ode(&mass(0.1, 10), &harmonic(10), &OrderingPreset::Mm.spec()).unwrap();
        assert_abs_diff_eq!(mm.potential.eval_at_origin(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn default_gauge_on_oscillator_gives_hermite_equation() {
        let cap = 10;
        let r = reduce_to_ode(&mass(0.0, cap + 2), &harmonic(cap + 2), &OrderingPreset::Bdd.spec()).unwrap();
        let lambda = TruncatedSeries::<f64>::variable(cap + 2).scale(-1.0);
        let ode = apply_gauge(&r, &lambda).unwrap();
        assert_abs_diff_eq!(ode.p0.coeff(1), 2.0);
        let q = ode.q0_at(0.75);
        assert_abs_diff_eq!(q.coeff(0), 1.0 - 1.5);
        for k in 1..q.valid_order() {
            assert_abs_diff_eq!(q.coeff(k), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn identity_gauge_keeps_coefficients() {
        let r = reduce_to_ode(&mass(0.1, 10), &harmonic(10), &OrderingPreset::Zk.spec()).unwrap();
        let ode = apply_gauge(&r, &TruncatedSeries::zero(10)).unwrap();
        for k in 0..ode.valid_order() {
            assert_abs_diff_eq!(ode.p0.coeff(k), r.drift.coeff(k));
            assert_abs_diff_eq!(ode.q0_v.coeff(k), r.potential.coeff(k));
        }
    }

    #[test]
    fn bdd_gauge_slope_at_origin() {
        let p = PdmProblem::from_text("1+gamma*x^2", "0.5*x^2", &[("gamma", 0.1)], OrderingPreset::Bdd).unwrap();
        let ode = p.canonical_ode::<f64>(12).unwrap();
        assert_eq!(ode.capacity(), 12);
        assert_eq!(ode.valid_order(), 11);
        assert_abs_diff_eq!(ode.p0.eval_at_origin(), 0.0);
        assert_abs_diff_eq!(ode.p0.coeff(1), 2.2, epsilon = 1e-15);
        assert!(ode.is_symmetric(1e-12));
        assert!(ode.q0_e.eval_at_origin() < 0.0);
    }

    #[test]
    fn problem_is_deterministic_across_capacities() {
        let p = PdmProblem::from_text("1+gamma*x^2", "0.5*x^2", &[("gamma", 0.2)], OrderingPreset::LkSym).unwrap();
        let small = p.canonical_ode::<f64>(8).unwrap();
        let big = p.canonical_ode::<f64>(20).unwrap();
        for k in 0..8 {
            assert_abs_diff_eq!(small.q0_v.coeff(k), big.q0_v.coeff(k), epsilon = 1e-14);
            assert_abs_diff_eq!(small.p0.coeff(k), big.p0.coeff(k), epsilon = 1e-14);
        }
    }

    #[test]
    fn gauge_factor_quadrature() {
        let b = Bindings::new();
        let gauss = GaugeSpec::default();
        assert_abs_diff_eq!(gauss.factor(1.5, &b).unwrap(), (-1.125f64).exp());
        let general = GaugeSpec::new(expr::parse("-x - 0.1*x^3").unwrap());
        let want = (-(2.0f64 * 2.0) / 2.0 - 0.1 * 16.0 / 4.0).exp();
        assert_abs_diff_eq!(general.factor(2.0, &b).unwrap(), want, epsilon = 1e-12);
        assert_abs_diff_eq!(general.factor(-2.0, &b).unwrap(), want, epsilon = 1e-12);
        assert_eq!(GaugeSpec::identity().factor(3.0, &b).unwrap(), 1.0);
    }
}
