//! The p_n/q_n recurrence, its termination conditions and the eigenvalue search.
//!
//! With `f'' = p0 f' + q0 f`, every higher derivative satisfies
//! `f^(n+2) = q_n f + p_n f'` where
//!
//! ```text
//! p_n = p0 p_{n-1} + p'_{n-1} + q_{n-1}
//! q_n = q0 p_{n-1} + q'_{n-1}
//! ```
//!
//! Running `k` iterations means expanding `f` to degree `k`, so the recurrence
//! goes up to index `M = k - 2` and the expansion terminates when
//! `q_M(0) p_{M-1}(0) - p_M(0) q_{M-1}(0)` vanishes.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hamiltonian::{CanonicalOde, HamiltonianError, PdmProblem};
use crate::scalar::{Precision, Real, TwoFloat};
use crate::series::{SeriesError, TruncatedSeries};

pub const DEFAULT_GRID_STEP: f64 = 0.05;
pub const DEFAULT_TOLERANCE: f64 = 1e-13;
pub const DEFAULT_THRESHOLD: f64 = 10.0;
pub const DEFAULT_MAX_GAP: f64 = 0.2;
pub const MAX_DIGITS: f64 = 16.0;
/// Coefficient parity tolerance used to decide whether a problem is symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;
pub const MIN_ITERATIONS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtemError {
    #[error("recurrence overflowed at step {n}")]
    Overflow { n: usize },
    #[error("parity conditions need a symmetric problem (p0 odd, q0 even)")]
    ParityNotApplicable,
    #[error("iteration count {0} is too small (need at least 3)")]
    TooFewIterations(usize),
    #[error("energy range [{0}, {1}] is empty")]
    EmptyRange(f64, f64),
    #[error("grid step must be positive and finite, got {0}")]
    InvalidGridStep(f64),
    #[error("iteration list must be ascending with at least two entries")]
    InvalidIterationList,
    #[error("trace has fewer than two entries")]
    ShortTrace,
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

impl From<SeriesError> for AtemError {
    fn from(e: SeriesError) -> Self {
        AtemError::Hamiltonian(HamiltonianError::Series(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    None,
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::None => "none",
        })
    }
}

/// Which function of `E` the root finder drives to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    #[default]
    Determinant,
    Even,
    Odd,
}

impl std::str::FromStr for Condition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "determinant" | "det" => Ok(Condition::Determinant),
            "even" => Ok(Condition::Even),
            "odd" => Ok(Condition::Odd),
            other => Err(format!("unknown condition '{other}' (determinant, even, odd)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rescaling {
    #[default]
    Joint,
    Off,
}

/// `(p_n(0), q_n(0))` for `n = 0..=M`, stored after rescaling.
///
/// The true values are `pairs[n] * exp(log_scales[n])`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceTrace<T = f64> {
    pub pairs: Vec<(T, T)>,
    /// Cumulative `ln` of the divisors applied up to and including step `n`.
    pub log_scales: Vec<f64>,
    pub energy: f64,
    pub symmetric: bool,
}

impl<T: Real> RecurrenceTrace<T> {
    /// Index `M` of the last pair.
    pub fn last_index(&self) -> usize {
        self.pairs.len() - 1
    }

    /// Unrescaled `(p_n(0), q_n(0))` as `(mantissa pair, ln scale)`.
    pub fn pair(&self, n: usize) -> ((f64, f64), f64) {
        let (p, q) = self.pairs[n];
        ((p.to_f64(), q.to_f64()), self.log_scales[n])
    }
}

/// Run the recurrence at a fixed energy up to index `m`.
pub fn iterate<T: Real>(
    ode: &CanonicalOde<T>,
    energy: f64,
    m: usize,
    rescaling: Rescaling,
) -> Result<RecurrenceTrace<T>, AtemError> {
    let symmetric = ode.is_symmetric(SYMMETRY_TOLERANCE);
    iterate_with(ode, energy, m, rescaling, symmetric)
}

fn iterate_with<T: Real>(
    ode: &CanonicalOde<T>,
    energy: f64,
    m: usize,
    rescaling: Rescaling,
    symmetric: bool,
) -> Result<RecurrenceTrace<T>, AtemError> {
    if ode.valid_order() < m + 1 {
        return Err(SeriesError::Degenerate.into());
    }
    let q0 = ode.q0_at(T::from_f64(energy));
    let p0 = &ode.p0;
    let mut p = p0.clone();
    let mut q = q0.clone();
    let mut pairs = Vec::with_capacity(m + 1);
    let mut log_scales = Vec::with_capacity(m + 1);
    pairs.push((p.eval_at_origin(), q.eval_at_origin()));
    log_scales.push(0.0);
    let mut log_total = 0.0;
    for n in 1..=m {
        let next_p = step(p0, &p, &q, true)?;
        let next_q = step(&q0, &p, &q, false)?;
        p = next_p;
        q = next_q;
        if rescaling == Rescaling::Joint {
            let s = max3(p.eval_at_origin().abs(), q.eval_at_origin().abs(), T::one());
            if s > T::one() {
                let inv = T::one().quotient(s);
                p = p.scale(inv);
                q = q.scale(inv);
                log_total += s.to_f64().ln();
            }
        }
        if !p.is_finite() || !q.is_finite() {
            return Err(AtemError::Overflow { n });
        }
        pairs.push((p.eval_at_origin(), q.eval_at_origin()));
        log_scales.push(log_total);
    }
    Ok(RecurrenceTrace {
        pairs,
        log_scales,
        energy,
        symmetric,
    })
}

/// `coef * p + d/dx(own)` plus `q` for the p-update.
fn step<T: Real>(
    coef: &TruncatedSeries<T>,
    p: &TruncatedSeries<T>,
    q: &TruncatedSeries<T>,
    is_p: bool,
) -> Result<TruncatedSeries<T>, AtemError> {
    let prod = coef.mul(p);
    if is_p {
        Ok(prod.add(&p.derivative()?).add(q))
    } else {
        Ok(prod.add(&q.derivative()?))
    }
}

fn max3<T: Real>(a: T, b: T, c: T) -> T {
    let ab = if a > b { a } else { b };
    if ab > c {
        ab
    } else {
        c
    }
}

/// `q_M p_{M-1} - p_M q_{M-1}` on the rescaled pairs.
pub fn termination_det<T: Real>(trace: &RecurrenceTrace<T>) -> Result<f64, AtemError> {
    if trace.pairs.len() < 2 {
        return Err(AtemError::ShortTrace);
    }
    let m = trace.last_index();
    let (p1, q1) = trace.pairs[m - 1];
    let (p, q) = trace.pairs[m];
    Ok((q * p1 - p * q1).to_f64())
}

/// Even branch: `q_j(0)` at the even index `j` among `{M, M-1}`.
/// Odd branch: `p_j(0)` at the odd index.
pub fn parity_condition<T: Real>(trace: &RecurrenceTrace<T>, parity: Parity) -> Result<f64, AtemError> {
    if !trace.symmetric {
        return Err(AtemError::ParityNotApplicable);
    }
    if trace.pairs.len() < 2 {
        return Err(AtemError::ShortTrace);
    }
    let m = trace.last_index();
    let (even, odd) = if m % 2 == 0 { (m, m - 1) } else { (m - 1, m) };
    match parity {
        Parity::Even => Ok(trace.pairs[even].1.to_f64()),
        Parity::Odd => Ok(trace.pairs[odd].0.to_f64()),
        Parity::None => Err(AtemError::ParityNotApplicable),
    }
}

pub fn evaluate_condition<T: Real>(trace: &RecurrenceTrace<T>, condition: Condition) -> Result<f64, AtemError> {
    match condition {
        Condition::Determinant => termination_det(trace),
        Condition::Even => parity_condition(trace, Parity::Even),
        Condition::Odd => parity_condition(trace, Parity::Odd),
    }
}

/// Recurrence index reached by `k` iterations.
pub fn recurrence_index(k: usize) -> usize {
    k - 2
}

/// Series capacity needed to run `k` iterations.
pub fn capacity_for(k: usize) -> usize {
    k + 2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenResult {
    /// Rank of the root among all roots found at this iteration count.
    pub index: usize,
    pub energy: f64,
    pub iterations: usize,
    /// Significant digits shared with the previous iteration count, if compared.
    pub digits: Option<f64>,
    pub parity: Parity,
    pub bracket: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSettings {
    pub condition: Condition,
    pub grid_step: f64,
    pub tolerance: f64,
    pub precision: Precision,
}

impl Default for RootSettings {
    fn default() -> Self {
        Self {
            condition: Condition::Determinant,
            grid_step: DEFAULT_GRID_STEP,
            tolerance: DEFAULT_TOLERANCE,
            precision: Precision::default(),
        }
    }
}

fn check_inputs(k: usize, range: (f64, f64), grid_step: f64) -> Result<(), AtemError> {
    if k < MIN_ITERATIONS {
        return Err(AtemError::TooFewIterations(k));
    }
    if !range.0.is_finite() || !range.1.is_finite() || range.0 >= range.1 {
        return Err(AtemError::EmptyRange(range.0, range.1));
    }
    if !grid_step.is_finite() || grid_step <= 0.0 {
        return Err(AtemError::InvalidGridStep(grid_step));
    }
    Ok(())
}

/// All roots of the chosen condition in `range` after `k` iterations.
pub fn find_roots(
    problem: &PdmProblem,
    k: usize,
    range: (f64, f64),
    settings: &RootSettings,
) -> Result<Vec<EigenResult>, AtemError> {
    check_inputs(k, range, settings.grid_step)?;
    match settings.precision {
        Precision::Double => {
            let ode = problem.canonical_ode::<f64>(capacity_for(k))?;
            find_roots_in(&ode, k, range, settings)
        }
        Precision::DoubleDouble => {
            let ode = problem.canonical_ode::<TwoFloat>(capacity_for(k))?;
            find_roots_in(&ode, k, range, settings)
        }
    }
}

/// Like [`find_roots`] for an already assembled ODE. Coefficients beyond
/// `capacity_for(k)` are dropped.
pub fn find_roots_in<T: Real>(
    ode: &CanonicalOde<T>,
    k: usize,
    range: (f64, f64),
    settings: &RootSettings,
) -> Result<Vec<EigenResult>, AtemError> {
    check_inputs(k, range, settings.grid_step)?;
    let ode = ode.truncated(capacity_for(k) - 1);
    let symmetric = ode.is_symmetric(SYMMETRY_TOLERANCE);
    if settings.condition != Condition::Determinant && !symmetric {
        return Err(AtemError::ParityNotApplicable);
    }
    let m = recurrence_index(k);
    let eval =
        |e: f64| -> Result<RecurrenceTrace<T>, AtemError> { iterate_with(&ode, e, m, Rescaling::Joint, symmetric) };
    let value = |e: f64| -> Result<f64, AtemError> { evaluate_condition(&eval(e)?, settings.condition) };

    let grid = energy_grid(range, settings.grid_step);
    let values: Vec<f64> = grid.par_iter().map(|&e| value(e)).collect::<Result<_, _>>()?;

    let mut brackets = Vec::new();
    let mut i = 0;
    while i < grid.len() {
        if values[i] == 0.0 {
            brackets.push((grid[i], grid[i]));
            i += 1;
            continue;
        }
        if i + 1 < grid.len() && values[i + 1] != 0.0 && values[i].signum() != values[i + 1].signum() {
            brackets.push((grid[i], grid[i + 1]));
        }
        i += 1;
    }

    let refined: Vec<(f64, (f64, f64))> = brackets
        .par_iter()
        .map(|&(a, b)| refine(&value, a, b, settings.tolerance))
        .collect::<Result<_, _>>()?;

    let mut out = Vec::with_capacity(refined.len());
    for (index, (energy, bracket)) in refined.into_iter().enumerate() {
        let parity = match settings.condition {
            Condition::Even => Parity::Even,
            Condition::Odd => Parity::Odd,
            Condition::Determinant if symmetric => classify(&eval, bracket)?,
            Condition::Determinant => Parity::None,
        };
        out.push(EigenResult {
            index,
            energy,
            iterations: k,
            digits: None,
            parity,
            bracket,
        });
    }
    Ok(out)
}

/// Uniform grid from `lo` to `hi` inclusive; the last step may be shorter.
pub fn energy_grid(range: (f64, f64), step: f64) -> Vec<f64> {
    let (lo, hi) = range;
    let n = ((hi - lo) / step - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * step).collect();
    grid.push(hi);
    grid
}

/// Which parity branch changes sign across the bracket.
fn classify<T: Real>(
    eval: &impl Fn(f64) -> Result<RecurrenceTrace<T>, AtemError>,
    bracket: (f64, f64),
) -> Result<Parity, AtemError> {
    let (a, b) = if bracket.0 == bracket.1 {
        (bracket.0 - 1e-9, bracket.1 + 1e-9)
    } else {
        bracket
    };
    let ta = eval(a)?;
    let tb = eval(b)?;
    let flips = |p: Parity| -> Result<bool, AtemError> {
        let fa = parity_condition(&ta, p)?;
        let fb = parity_condition(&tb, p)?;
        Ok(fa == 0.0 || fb == 0.0 || fa.signum() != fb.signum())
    };
    Ok(match (flips(Parity::Even)?, flips(Parity::Odd)?) {
        (true, false) => Parity::Even,
        (false, true) => Parity::Odd,
        _ => Parity::None,
    })
}

/// Bisection with secant polishing. Returns the root and the final bracket.
fn refine(
    f: &impl Fn(f64) -> Result<f64, AtemError>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, (f64, f64)), AtemError> {
    if a == b {
        return Ok((a, (a, b)));
    }
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut force_bisect = false;
    for _ in 0..500 {
        let width = b - a;
        if width <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let mut x = mid;
        if !force_bisect && fb != fa {
            let s = b - fb * (b - a) / (fb - fa);
            if s.is_finite() {
                x = s.clamp(a + 0.5 * tol, b - 0.5 * tol);
            }
        }
        if !(x > a && x < b) {
            x = mid;
        }
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok((x, (a, b)));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        force_bisect = b - a > 0.5 * width;
    }
    Ok((0.5 * (a + b), (a, b)))
}

/// `-log10(|a - b| / |b|)`, capped at [`MAX_DIGITS`].
pub fn matched_digits(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff == 0.0 {
        return MAX_DIGITS;
    }
    let scale = b.abs().max(f64::MIN_POSITIVE);
    (-(diff / scale).log10()).clamp(0.0, MAX_DIGITS)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeSettings {
    pub k_list: Vec<usize>,
    pub threshold: f64,
    pub max_gap: f64,
    pub roots: RootSettings,
}

impl Default for ConvergeSettings {
    fn default() -> Self {
        Self {
            k_list: vec![20, 30, 40, 50, 60],
            threshold: DEFAULT_THRESHOLD,
            max_gap: DEFAULT_MAX_GAP,
            roots: RootSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub k_list: Vec<usize>,
    /// Roots found at each iteration count, ascending.
    pub columns: Vec<Vec<EigenResult>>,
    pub accepted: Vec<EigenResult>,
}

impl ConvergenceReport {
    /// `table[n][j]`: n-th smallest root at `k_list[j]`.
    pub fn table(&self) -> Vec<Vec<Option<f64>>> {
        let rows = self.columns.iter().map(Vec::len).max().unwrap_or(0);
        (0..rows)
            .map(|n| self.columns.iter().map(|col| col.get(n).map(|r| r.energy)).collect())
            .collect()
    }

    /// Estimates at the largest `k`, each with its digit agreement.
    pub fn final_column(&self) -> &[EigenResult] {
        self.columns.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn converge(
    problem: &PdmProblem,
    range: (f64, f64),
    settings: &ConvergeSettings,
) -> Result<ConvergenceReport, AtemError> {
    let ks = &settings.k_list;
    if ks.len() < 2 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AtemError::InvalidIterationList);
    }
    let k_max = *ks.last().unwrap();
    check_inputs(ks[0], range, settings.roots.grid_step)?;
    let columns = match settings.roots.precision {
        Precision::Double => {
            let ode = problem.canonical_ode::<f64>(capacity_for(k_max))?;
            columns_for(&ode, range, settings)?
        }
        Precision::DoubleDouble => {
            let ode = problem.canonical_ode::<TwoFloat>(capacity_for(k_max))?;
            columns_for(&ode, range, settings)?
        }
    };
    Ok(assemble(ks.clone(), columns, settings))
}

fn columns_for<T: Real>(
    ode: &CanonicalOde<T>,
    range: (f64, f64),
    settings: &ConvergeSettings,
) -> Result<Vec<Vec<EigenResult>>, AtemError> {
    settings
        .k_list
        .par_iter()
        .map(|&k| find_roots_in(ode, k, range, &settings.roots))
        .collect()
}

fn assemble(k_list: Vec<usize>, mut columns: Vec<Vec<EigenResult>>, settings: &ConvergeSettings) -> ConvergenceReport {
    for j in 1..columns.len() {
        let (before, after) = columns.split_at_mut(j);
        let prev = &before[j - 1];
        for r in after[0].iter_mut() {
            r.digits = nearest(prev, r.energy, settings.max_gap).map(|p| matched_digits(p, r.energy));
        }
    }
    let accepted = columns
        .last()
        .map(|col| {
            col.iter()
                .filter(|r| r.digits.is_some_and(|d| d >= settings.threshold))
                .cloned()
                .collect()
        })
        .unwrap_or_default();
    ConvergenceReport {
        k_list,
        columns,
        accepted,
    }
}

fn nearest(col: &[EigenResult], energy: f64, max_gap: f64) -> Option<f64> {
    col.iter()
        .map(|r| r.energy)
        .min_by(|a, b| (a - energy).abs().total_cmp(&(b - energy).abs()))
        .filter(|e| (e - energy).abs() <= max_gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::OrderingPreset;

    fn harmonic() -> PdmProblem {
        PdmProblem::from_text("1", "0.5*x^2", &[], OrderingPreset::Bdd).unwrap()
    }

    fn quadratic_mass() -> PdmProblem {
        PdmProblem::from_text("1+gamma*x^2", "0.5*x^2", &[("gamma", 0.1)], OrderingPreset::Bdd).unwrap()
    }

    fn trace(problem: &PdmProblem, e: f64, k: usize) -> RecurrenceTrace<TwoFloat> {
        let ode = problem.canonical_ode::<TwoFloat>(capacity_for(k)).unwrap();
        iterate(&ode, e, recurrence_index(k), Rescaling::Joint).unwrap()
    }

    #[test]
    fn ground_state_terminates_exactly() {
        let t = trace(&harmonic(), 0.5, 20);
        assert!(t.symmetric);
        assert!(t.pairs.iter().all(|(_, q)| q.to_f64() == 0.0));
        assert_eq!(termination_det(&t).unwrap(), 0.0);
    }

    #[test]
    fn second_excited_state_terminates() {
        for k in 6..12 {
            let t = trace(&harmonic(), 2.5, k);
            assert!(termination_det(&t).unwrap().abs() < 1e-10, "k = {k}");
        }
    }

    #[test]
    fn far_from_spectrum_sign_is_stable() {
        let signs: Vec<f64> = (38..=42)
            .map(|k| termination_det(&trace(&harmonic(), -1.0, k)).unwrap().signum())
            .collect();
        assert!(signs.iter().all(|&s| s != 0.0));
        assert!(signs.windows(2).all(|w| w[0] == w[1]) || signs.windows(2).all(|w| w[0] != w[1]));
    }

    #[test]
    fn quadratic_mass_ground_state_brackets() {
        let p = quadratic_mass();
        let lo = termination_det(&trace(&p, 0.46, 60)).unwrap();
        let hi = termination_det(&trace(&p, 0.48, 60)).unwrap();
        assert_ne!(lo.signum(), hi.signum());
    }

    #[test]
    fn parity_branches_on_harmonic() {
        let h = harmonic();
        assert_eq!(parity_condition(&trace(&h, 0.5, 20), Parity::Even).unwrap(), 0.0);
        assert!(parity_condition(&trace(&h, 1.5, 20), Parity::Odd).unwrap().abs() < 1e-10);
        assert!(parity_condition(&trace(&h, 1.5, 20), Parity::Even).unwrap().abs() > 1e-3);
    }

    #[test]
    fn parity_rejected_for_asymmetric_problem() {
        let p = PdmProblem::from_text("1+0.1*x", "0.5*x^2", &[], OrderingPreset::Bdd).unwrap();
        let ode = p.canonical_ode::<f64>(12).unwrap();
        let t = iterate(&ode, 0.5, 8, Rescaling::Joint).unwrap();
        assert!(!t.symmetric);
        assert_eq!(parity_condition(&t, Parity::Even), Err(AtemError::ParityNotApplicable));
        let settings = RootSettings {
            condition: Condition::Odd,
            ..RootSettings::default()
        };
        assert_eq!(
            find_roots(&p, 10, (0.0, 1.0), &settings),
            Err(AtemError::ParityNotApplicable)
        );
    }

    #[test]
    fn harmonic_roots() {
        let roots = find_roots(&harmonic(), 40, (0.0, 6.0), &RootSettings::default()).unwrap();
        let energies: Vec<f64> = roots.iter().map(|r| r.energy).collect();
        assert_eq!(energies.len(), 6, "{energies:?}");
        for (n, e) in energies.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-10, "{n}: {e}");
            let want = if n % 2 == 0 { Parity::Even } else { Parity::Odd };
            assert_eq!(roots[n].parity, want);
        }
    }

    #[test]
    fn quadratic_mass_roots_at_sixty() {
        let want = [0.46889651, 1.43348555, 2.35654908, 3.24598255, 4.10694346, 4.94337909];
        let roots = find_roots(&quadratic_mass(), 60, (0.0, 5.5), &RootSettings::default()).unwrap();
        assert_eq!(roots.len(), 6);
        for (r, w) in roots.iter().zip(want) {
            assert!((r.energy - w).abs() < 1e-7, "{} vs {w}", r.energy);
            assert!(r.bracket.0 <= r.energy && r.energy <= r.bracket.1);
        }
    }

    #[test]
    fn quadratic_mass_unconverged_root_at_twenty() {
        let roots = find_roots(&quadratic_mass(), 20, (0.0, 5.5), &RootSettings::default()).unwrap();
        assert!((roots[5].energy - 4.35399596).abs() < 1e-7);
    }

    #[test]
    fn digits() {
        assert_eq!(matched_digits(1.0, 1.0), MAX_DIGITS);
        assert!((matched_digits(1.0 + 1e-8, 1.0) - 8.0).abs() < 1e-6);
        assert_eq!(matched_digits(2.0, 1.0), 0.0);
    }

    #[test]
    fn converge_harmonic_accepts_all() {
        let settings = ConvergeSettings {
            k_list: vec![20, 30],
            ..ConvergeSettings::default()
        };
        let report = converge(&harmonic(), (0.0, 6.0), &settings).unwrap();
        assert_eq!(report.accepted.len(), 6);
        assert_eq!(report.table().len(), 6);
    }

    #[test]
    fn converge_thresholds() {
        let mut settings = ConvergeSettings {
            threshold: 8.0,
            ..ConvergeSettings::default()
        };
        let loose = converge(&quadratic_mass(), (0.0, 5.5), &settings).unwrap();
        let idx: Vec<usize> = loose.accepted.iter().map(|r| r.index).collect();
        assert!(idx.starts_with(&[0, 1]), "{idx:?}");
        assert!(!idx.contains(&5));
        settings.threshold = 12.0;
        let strict = converge(&quadratic_mass(), (0.0, 5.5), &settings).unwrap();
        assert!(strict.accepted.len() < loose.accepted.len());
    }

    #[test]
    fn invalid_inputs() {
        let p = harmonic();
        let s = RootSettings::default();
        assert_eq!(find_roots(&p, 2, (0.0, 1.0), &s), Err(AtemError::TooFewIterations(2)));
        assert!(matches!(
            find_roots(&p, 10, (1.0, 1.0), &s),
            Err(AtemError::EmptyRange(..))
        ));
        let bad = ConvergeSettings {
            k_list: vec![30, 20],
            ..ConvergeSettings::default()
        };
        assert_eq!(converge(&p, (0.0, 1.0), &bad), Err(AtemError::InvalidIterationList));
    }

    #[test]
    fn grid_covers_range() {
        let g = energy_grid((0.0, 5.5), 0.05);
        assert_eq!(g.first(), Some(&0.0));
        assert_eq!(g.last(), Some(&5.5));
        assert_eq!(g.len(), 111);
        assert_eq!(energy_grid((0.0, 0.01), 0.05), vec![0.0, 0.01]);
    }
}
