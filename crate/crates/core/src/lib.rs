//! Bound states of position-dependent-mass Schrodinger operators by the
//! asymptotic Taylor expansion method, with a finite-difference cross-check.
//!
//! ```
//! use atem_core::hamiltonian::{OrderingPreset, PdmProblem};
//! use atem_core::atem::{find_roots, RootSettings};
//!
//! let problem = PdmProblem::from_text("1", "0.5*x^2", &[], OrderingPreset::Bdd).unwrap();
//! let roots = find_roots(&problem, 30, (0.0, 4.0), &RootSettings::default()).unwrap();
//! assert!((roots[0].energy - 0.5).abs() < 1e-10);
//! ```

pub mod atem;
pub mod config;
pub mod expr;
pub mod hamiltonian;
pub mod oracle;
pub mod scalar;
pub mod series;
pub mod wavefunction;

use thiserror::Error;

/// Any failure surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error(transparent)]
    Eval(#[from] expr::EvalError),
    #[error(transparent)]
    Expand(#[from] expr::ExpandError),
    #[error(transparent)]
    Series(#[from] series::SeriesError),
    #[error(transparent)]
    Hamiltonian(#[from] hamiltonian::HamiltonianError),
    #[error(transparent)]
    Atem(#[from] atem::AtemError),
    #[error(transparent)]
    Wavefunction(#[from] wavefunction::WavefunctionError),
    #[error(transparent)]
    Oracle(#[from] oracle::OracleError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}
