//! Independent eigenvalues from a flux-form finite-difference grid.
//!
//! `-(1/2)(psi'/m)' + (V + U) psi = E psi` on `[-L, L]` with Dirichlet ends
//! becomes a symmetric tridiagonal matrix whose lowest eigenvalues come from
//! Sturm-count bisection. Only pointwise expression evaluation is shared with
//! the series solver.

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::EvalError;
use crate::hamiltonian::PdmProblem;

pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
pub const DEFAULT_POINTS: usize = 4001;
pub const MIN_POINTS: usize = 101;
pub const MAX_STATES: usize = 10;
pub const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid needs an odd point count >= 101 and a positive half-width (got N = {points}, L = {half_width})")]
    BadGrid { half_width: f64, points: usize },
    #[error("mass must be positive on the grid, found m = {value} at x = {x}")]
    UnphysicalMass { x: f64, value: f64 },
    #[error("at most 10 states can be requested, got {0}")]
    TooManyStates(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            points: DEFAULT_POINTS,
        }
    }
}

impl GridSpec {
    pub fn new(half_width: f64, points: usize) -> Result<Self, OracleError> {
        if points < MIN_POINTS || points % 2 == 0 || !half_width.is_finite() || half_width <= 0.0 {
            return Err(OracleError::BadGrid { half_width, points });
        }
        Ok(Self { half_width, points })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    /// Same interval with `2N - 1` points, i.e. half the step.
    pub fn refined(&self) -> Self {
        Self {
            half_width: self.half_width,
            points: 2 * self.points - 1,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step()
    }
}

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i] = T[i][i+1] = T[i+1][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len(), "off-diagonal length must be n - 1");
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let coupling = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1] / d
            };
            d = self.diag[i] - x - coupling;
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing the spectrum.
    pub fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `j`-th smallest eigenvalue (0-based) to absolute `tol`.
    pub fn eigenvalue(&self, j: usize, tol: f64) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Flux-form discretisation on the interior points of `grid`.
pub fn discretize(problem: &PdmProblem, grid: &GridSpec) -> Result<SymTridiagonal, OracleError> {
    let h = grid.step();
    let ord = problem.ordering.spec;
    let n = grid.points - 2;
    let mass = |x: f64| -> Result<f64, OracleError> {
        let m = problem.mass.eval(x, &problem.bindings)?;
        if m > 0.0 {
            Ok(m)
        } else {
            Err(OracleError::UnphysicalMass { x, value: m })
        }
    };
    let k = 1.0 / (2.0 * h * h);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..=n {
        let x = grid.x(i);
        let left = mass(x - 0.5 * h)?;
        let right = mass(x + 0.5 * h)?;
        let (mm, m0, mp) = (mass(x - h)?, mass(x)?, mass(x + h)?);
        let dm = (mp - mm) / (2.0 * h);
        let d2m = (mp - 2.0 * m0 + mm) / (h * h);
        let u = ord.potential_at(m0, dm, d2m);
        let v = problem.potential.eval(x, &problem.bindings)?;
        diag.push(k * (1.0 / right + 1.0 / left) + v + u);
        if i < n {
            off.push(-k / right);
        }
    }
    Ok(SymTridiagonal::new(diag, off))
}

/// The `count` smallest eigenvalues, found in parallel.
pub fn lowest_eigenvalues(t: &SymTridiagonal, count: usize) -> Result<Vec<f64>, OracleError> {
    if count > MAX_STATES {
        return Err(OracleError::TooManyStates(count));
    }
    Ok((0..count.min(t.len()))
        .into_par_iter()
        .map(|j| t.eigenvalue(j, EIGEN_TOLERANCE))
        .collect())
}

/// Lowest eigenvalues of `problem`, optionally Richardson-extrapolated from
/// the grids with `N` and `2N - 1` points.
pub fn oracle_eigenvalues(
    problem: &PdmProblem,
    grid: &GridSpec,
    count: usize,
    refine: bool,
) -> Result<Vec<f64>, OracleError> {
    let grid = GridSpec::new(grid.half_width, grid.points)?;
    if count > MAX_STATES {
        return Err(OracleError::TooManyStates(count));
    }
    let coarse = lowest_eigenvalues(&discretize(problem, &grid)?, count)?;
    if !refine {
        return Ok(coarse);
    }
    let fine = lowest_eigenvalues(&discretize(problem, &grid.refined())?, count)?;
    Ok(richardson(&coarse, &fine))
}

/// `(4 E_fine - E_coarse) / 3`, cancelling the `h^2` error term.
pub fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
}
