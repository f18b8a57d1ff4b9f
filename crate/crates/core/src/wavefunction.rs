//! Truncated Taylor eigenfunctions rebuilt from a recurrence trace.
//!
//! `f(x) = f(0) + f'(0) x + sum_{j>=2} [q_{j-2}(0) f(0) + p_{j-2}(0) f'(0)] x^j / j!`
//! and `psi = N g f` with the gauge factor `g`.

use thiserror::Error;

use crate::atem::{self, AtemError, Parity, RecurrenceTrace};
use crate::expr::Bindings;
use crate::hamiltonian::{GaugeSpec, HamiltonianError, PdmProblem};
use crate::scalar::{Precision, Real, TwoFloat};

pub const DEFAULT_HALF_WIDTH: f64 = 8.0;
pub const DEFAULT_SAMPLES: usize = 4001;
/// Relative sup-norm change below which a term is considered negligible.
pub const DEGREE_TOLERANCE: f64 = 1e-4;
/// Edge-to-peak ratio of `|psi|^2` above which the domain is too small.
pub const TAIL_TOLERANCE: f64 = 1e-4;
const ZERO_COEFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WavefunctionError {
    #[error("both boundary rows vanish; no unique (f(0), f'(0))")]
    DegenerateBoundary,
    #[error("un-rescaling coefficient {degree} left the double range")]
    RescaleUnderflow { degree: usize },
    #[error("sample count must be odd and at least 3, got {0}")]
    BadSampleCount(usize),
    #[error("half-width must be positive, got {0}")]
    BadHalfWidth(f64),
    #[error("domain [-{half_width}, {half_width}] is too small: |psi|^2 at the edge is {ratio:e} of its peak")]
    DomainTooSmall { half_width: f64, ratio: f64 },
    #[error("wavefunction vanishes on the sample grid")]
    Vanishing,
    #[error(transparent)]
    Atem(#[from] AtemError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialWavefunction {
    pub state: usize,
    pub energy: f64,
    pub iterations: usize,
    /// `f` coefficients by degree, scaled so the lowest nonzero one is 1.
    pub coeffs: Vec<f64>,
    pub boundary: (f64, f64),
    /// Highest degree used when sampling.
    pub degree: usize,
}

impl PolynomialWavefunction {
    pub fn eval_f(&self, x: f64) -> f64 {
        self.coeffs[..=self.degree.min(self.coeffs.len() - 1)]
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c)
    }

    /// Parity read off the coefficients; `None` when both kinds are present.
    pub fn parity(&self) -> Parity {
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let present = |odd: bool| {
            self.coeffs
                .iter()
                .enumerate()
                .any(|(j, c)| (j % 2 == 1) == odd && c.abs() > ZERO_COEFF * max)
        };
        match (present(false), present(true)) {
            (true, false) => Parity::Even,
            (false, true) => Parity::Odd,
            _ => Parity::None,
        }
    }
}

/// `(f(0), f'(0))` spanning the null space of the last two boundary rows.
///
/// Row `n` is `q_n(0) f(0) + p_n(0) f'(0) = 0`. The row with the larger
/// unrescaled norm is used; its nullvector is `(p_n, -q_n)`, scaled so the
/// larger component is 1.
pub fn boundary_ratio<T: Real>(trace: &RecurrenceTrace<T>) -> Result<(f64, f64), WavefunctionError> {
    if trace.pairs.len() < 2 {
        return Err(AtemError::ShortTrace.into());
    }
    let m = trace.last_index();
    let row = |n: usize| {
        let ((p, q), log_scale) = trace.pair(n);
        let norm = p.hypot(q);
        let log_norm = if norm > 0.0 {
            norm.ln() + log_scale
        } else {
            f64::NEG_INFINITY
        };
        (p, q, log_norm)
    };
    let a = row(m - 1);
    let b = row(m);
    let (p, q, log_norm) = if b.2 > a.2 { b } else { a };
    if log_norm == f64::NEG_INFINITY {
        return Err(WavefunctionError::DegenerateBoundary);
    }
    let (f0, f1) = (p, -q);
    let big = if f0.abs() >= f1.abs() { f0 } else { f1 };
    Ok((f0 / big, f1 / big))
}

fn ln_factorial(j: usize) -> f64 {
    (2..=j).map(|i| (i as f64).ln()).sum()
}

/// Taylor coefficients of `f` up to `degree_cap` (and at most `M + 2`).
pub fn build_f<T: Real>(
    trace: &RecurrenceTrace<T>,
    boundary: (f64, f64),
    degree_cap: usize,
) -> Result<Vec<f64>, WavefunctionError> {
    let (f0, f1) = boundary;
    let top = degree_cap.min(trace.last_index() + 2);
    let mut coeffs = Vec::with_capacity(top + 1);
    coeffs.push(f0);
    if top >= 1 {
        coeffs.push(f1);
    }
    for j in 2..=top {
        let ((p, q), log_scale) = trace.pair(j - 2);
        let mantissa = q * f0 + p * f1;
        let c = if mantissa == 0.0 {
            0.0
        } else {
            let scale = (log_scale - ln_factorial(j)).exp();
            if scale == 0.0 || !scale.is_finite() {
                return Err(WavefunctionError::RescaleUnderflow { degree: j });
            }
            mantissa * scale
        };
        if !c.is_finite() {
            return Err(WavefunctionError::RescaleUnderflow { degree: j });
        }
        coeffs.push(c);
    }
    let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max == 0.0 {
        return Err(WavefunctionError::DegenerateBoundary);
    }
    let lead = *coeffs
        .iter()
        .find(|c| c.abs() > ZERO_COEFF * max)
        .expect("nonzero maximum");
    for c in &mut coeffs {
        *c /= lead;
    }
    Ok(coeffs)
}

fn check_grid(half_width: f64, count: usize) -> Result<(), WavefunctionError> {
    if count < 3 || count % 2 == 0 {
        return Err(WavefunctionError::BadSampleCount(count));
    }
    if !half_width.is_finite() || half_width <= 0.0 {
        return Err(WavefunctionError::BadHalfWidth(half_width));
    }
    Ok(())
}

fn sample_grid(half_width: f64, count: usize) -> Vec<f64> {
    let h = 2.0 * half_width / (count - 1) as f64;
    (0..count).map(|i| -half_width + i as f64 * h).collect()
}

fn gauge_values(gauge: &GaugeSpec, bindings: &Bindings, xs: &[f64]) -> Result<Vec<f64>, WavefunctionError> {
    xs.iter()
        .map(|&x| gauge.factor(x, bindings).map_err(Into::into))
        .collect()
}

/// Highest degree `d <= cap` whose term moves `g f` by less than
/// [`DEGREE_TOLERANCE`] in relative sup norm; `cap` when no degree qualifies.
pub fn select_degree(coeffs: &[f64], gauge_on_grid: &[f64], xs: &[f64], cap: usize) -> usize {
    let cap = cap.min(coeffs.len() - 1);
    let partial = |d: usize, x: f64| coeffs[..=d].iter().rev().fold(0.0, |acc, &c| acc * x + c);
    for d in (1..=cap).rev() {
        if coeffs[d] == 0.0 {
            continue;
        }
        let mut peak = 0.0f64;
        let mut term = 0.0f64;
        for (&x, &g) in xs.iter().zip(gauge_on_grid) {
            peak = peak.max((g * partial(d, x)).abs());
            term = term.max((g * coeffs[d] * x.powi(d as i32)).abs());
        }
        if peak > 0.0 && term < DEGREE_TOLERANCE * peak {
            return d;
        }
    }
    cap
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsiSamples {
    pub points: Vec<(f64, f64)>,
    pub normalization: f64,
    pub half_width: f64,
}

impl PsiSamples {
    /// Sign changes of `psi` along the grid, ignoring exact zeros.
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<f64> = self
            .points
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|(_, v)| v.signum())
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    pub fn value_at_edge(&self) -> (f64, f64) {
        (self.points[0].1, self.points[self.points.len() - 1].1)
    }
}

/// Simpson weights times `h / 3`.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    acc * h / 3.0
}

/// `psi = N g f` on `count` uniform points of `[-L, L]`, unit L2 norm.
pub fn psi_samples(
    w: &PolynomialWavefunction,
    gauge: &GaugeSpec,
    bindings: &Bindings,
    half_width: f64,
    count: usize,
) -> Result<PsiSamples, WavefunctionError> {
    check_grid(half_width, count)?;
    let xs = sample_grid(half_width, count);
    let g = gauge_values(gauge, bindings, &xs)?;
    let raw: Vec<f64> = xs.iter().zip(&g).map(|(&x, &gx)| gx * w.eval_f(x)).collect();
    let sq: Vec<f64> = raw.iter().map(|v| v * v).collect();
    let peak = sq.iter().fold(0.0f64, |m, &v| m.max(v));
    if peak == 0.0 || !peak.is_finite() {
        return Err(WavefunctionError::Vanishing);
    }
    let edge = sq[0].max(sq[count - 1]);
    if edge > TAIL_TOLERANCE * peak {
        return Err(WavefunctionError::DomainTooSmall {
            half_width,
            ratio: edge / peak,
        });
    }
    let h = xs[1] - xs[0];
    let normalization = 1.0 / simpson(&sq, h).sqrt();
    Ok(PsiSamples {
        points: xs.into_iter().zip(raw).map(|(x, v)| (x, normalization * v)).collect(),
        normalization,
        half_width,
    })
}

/// Options for [`reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructSettings {
    pub precision: Precision,
    /// Explicit degree; `None` selects it from the sampled data.
    pub degree: Option<usize>,
    pub half_width: f64,
    pub count: usize,
}

impl Default for ReconstructSettings {
    fn default() -> Self {
        Self {
            precision: Precision::default(),
            degree: None,
            half_width: DEFAULT_HALF_WIDTH,
            count: DEFAULT_SAMPLES,
        }
    }
}

/// Rerun the recurrence at `energy` with `k` iterations and rebuild `f`.
pub fn reconstruct(
    problem: &PdmProblem,
    state: usize,
    energy: f64,
    k: usize,
    settings: &ReconstructSettings,
) -> Result<PolynomialWavefunction, WavefunctionError> {
    match settings.precision {
        Precision::Double => reconstruct_in::<f64>(problem, state, energy, k, settings),
        Precision::DoubleDouble => reconstruct_in::<TwoFloat>(problem, state, energy, k, settings),
    }
}

fn reconstruct_in<T: Real>(
    problem: &PdmProblem,
    state: usize,
    energy: f64,
    k: usize,
    settings: &ReconstructSettings,
) -> Result<PolynomialWavefunction, WavefunctionError> {
    if k < atem::MIN_ITERATIONS {
        return Err(AtemError::TooFewIterations(k).into());
    }
    check_grid(settings.half_width, settings.count)?;
    let ode = problem.canonical_ode::<T>(atem::capacity_for(k))?;
    let trace = atem::iterate(&ode, energy, atem::recurrence_index(k), atem::Rescaling::Joint)?;
    let boundary = boundary_ratio(&trace)?;
    let cap = k / 2;
    // An explicit degree may exceed the automatic cap, up to the available rows.
    let top = settings.degree.map_or(cap, |d| d.max(cap));
    let coeffs = build_f(&trace, boundary, top.max(1))?;
    let degree = match settings.degree {
        Some(d) => d.min(coeffs.len() - 1),
        None => {
            let xs = sample_grid(settings.half_width, settings.count);
            let g = gauge_values(&problem.gauge, &problem.bindings, &xs)?;
            select_degree(&coeffs, &g, &xs, cap)
        }
    };
    Ok(PolynomialWavefunction {
        state,
        energy,
        iterations: k,
        coeffs,
        boundary,
        degree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atem::{capacity_for, iterate, recurrence_index, Rescaling};
    use crate::hamiltonian::OrderingPreset;

    fn harmonic() -> PdmProblem {
        PdmProblem::from_text("1", "0.5*x^2", &[], OrderingPreset::Bdd).unwrap()
    }

    fn trace(p: &PdmProblem, e: f64, k: usize) -> RecurrenceTrace<TwoFloat> {
        let ode = p.canonical_ode::<TwoFloat>(capacity_for(k)).unwrap();
        iterate(&ode, e, recurrence_index(k), Rescaling::Joint).unwrap()
    }

    #[test]
    fn harmonic_boundaries() {
        let h = harmonic();
        let b0 = boundary_ratio(&trace(&h, 0.5, 20)).unwrap();
        assert!((b0.0 - 1.0).abs() < 1e-14 && b0.1.abs() < 1e-14, "{b0:?}");
        let b1 = boundary_ratio(&trace(&h, 1.5, 20)).unwrap();
        assert!(b1.0.abs() < 1e-12 && (b1.1.abs() - 1.0).abs() < 1e-14, "{b1:?}");
    }

    #[test]
    fn hermite_two() {
        let t = trace(&harmonic(), 2.5, 20);
        let c = build_f(&t, boundary_ratio(&t).unwrap(), 10).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12);
        assert!((c[2] + 2.0).abs() < 1e-10, "{c:?}");
        assert!(c[3..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn eq_four_block() {
        let p = PdmProblem::from_text("1+gamma*x^2", "0.5*x^2", &[("gamma", 0.1)], OrderingPreset::Bdd).unwrap();
        let w = reconstruct(&p, 2, 2.35654908, 60, &ReconstructSettings::default()).unwrap();
        assert!((w.boundary.0 - 1.0).abs() < 1e-8 && w.boundary.1.abs() < 1e-8);
        let want = [(2, -1.856), (4, -0.1622), (6, 0.02051)];
        for (d, v) in want {
            assert!(
                (w.coeffs[d] - v).abs() < 5e-3 * v.abs().max(1e-3),
                "{d}: {}",
                w.coeffs[d]
            );
        }
        assert_eq!(w.parity(), Parity::Even);
    }

    #[test]
    fn gaussian_samples() {
        let w = reconstruct(&harmonic(), 0, 0.5, 20, &ReconstructSettings::default()).unwrap();
        let s = psi_samples(&w, &GaugeSpec::default(), &Bindings::new(), 8.0, 4001).unwrap();
        let c = std::f64::consts::PI.powf(-0.25);
        for (x, v) in &s.points {
            assert!((v - c * (-0.5 * x * x).exp()).abs() < 1e-6);
        }
        assert_eq!(s.sign_changes(), 0);
    }

    #[test]
    fn sample_count_checked() {
        let w = reconstruct(&harmonic(), 0, 0.5, 20, &ReconstructSettings::default()).unwrap();
        let g = GaugeSpec::default();
        let b = Bindings::new();
        assert_eq!(
            psi_samples(&w, &g, &b, 8.0, 2),
            Err(WavefunctionError::BadSampleCount(2))
        );
        assert_eq!(
            psi_samples(&w, &g, &b, 8.0, 100),
            Err(WavefunctionError::BadSampleCount(100))
        );
        assert!(matches!(
            psi_samples(&w, &g, &b, 1.0, 101),
            Err(WavefunctionError::DomainTooSmall { .. })
        ));
    }

    #[test]
    fn simpson_is_exact_on_cubics() {
        let xs = sample_grid(1.0, 11);
        let v: Vec<f64> = xs.iter().map(|x| x * x * x + x * x).collect();
        assert!((simpson(&v, xs[1] - xs[0]) - 2.0 / 3.0).abs() < 1e-14);
    }
}
