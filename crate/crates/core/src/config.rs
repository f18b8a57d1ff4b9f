//! Run configuration, the flat `key=value` file format and output records.
//!
//! Keys mirror the CLI flag names. Settings are applied in order, later ones
//! replace earlier ones, except `param` which accumulates.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atem::{self, Condition, ConvergeSettings, RootSettings};
use crate::expr::{self, Bindings, Expr};
use crate::hamiltonian::{Ordering, PdmProblem};
use crate::oracle::{self, GridSpec};
use crate::scalar::Precision;
use crate::wavefunction;

pub const KEYS: &[&str] = &[
    "mass",
    "potential",
    "param",
    "ordering",
    "iterations",
    "range",
    "threshold",
    "grid-step",
    "precision",
    "condition",
    "format",
    "output",
    "state",
    "states",
    "tolerance",
    "oracle-points",
    "oracle-half-width",
    "refine",
    "samples",
    "half-width",
    "degree",
    "gauge",
];

/// Parameters bound unless the user overrides them.
pub const DEFAULT_BINDINGS: &[(&str, f64)] = &[("m0", 1.0), ("omega", 1.0)];
pub const DEFAULT_ITERATIONS: &[usize] = &[20, 30, 40, 50, 60];
pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_COMPARED_STATES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("invalid value for '{key}': {message}")]
    InvalidValue { key: String, message: String },
    #[error("missing required setting '{0}'")]
    Missing(&'static str),
}

impl ConfigError {
    fn invalid(key: &str, message: impl fmt::Display) -> Self {
        ConfigError::InvalidValue {
            key: key.to_string(),
            message: message.to_string(),
        }
    }
}

/// Parse a flat `key=value` file. Blank lines and `#` comments are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            message: format!("expected key=value, got '{line}'"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey(key.to_string()));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (json, csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: Option<String>,
    pub potential: Option<String>,
    pub params: BTreeMap<String, f64>,
    pub ordering: String,
    pub iterations: Vec<usize>,
    pub range: Option<(f64, f64)>,
    pub threshold: f64,
    pub grid_step: f64,
    pub precision: Precision,
    pub condition: Condition,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub state: Option<usize>,
    pub states: usize,
    pub tolerance: f64,
    pub oracle_points: usize,
    pub oracle_half_width: f64,
    pub refine: bool,
    pub samples: usize,
    pub half_width: f64,
    pub degree: Option<usize>,
    pub gauge: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mass: None,
            potential: None,
            params: DEFAULT_BINDINGS.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            ordering: "BDD".into(),
            iterations: DEFAULT_ITERATIONS.to_vec(),
            range: None,
            threshold: atem::DEFAULT_THRESHOLD,
            grid_step: atem::DEFAULT_GRID_STEP,
            precision: Precision::default(),
            condition: Condition::Determinant,
            format: Format::Json,
            output: None,
            state: None,
            states: DEFAULT_COMPARED_STATES,
            tolerance: DEFAULT_ORACLE_TOLERANCE,
            oracle_points: oracle::DEFAULT_POINTS,
            oracle_half_width: oracle::DEFAULT_HALF_WIDTH,
            refine: true,
            samples: wavefunction::DEFAULT_SAMPLES,
            half_width: wavefunction::DEFAULT_HALF_WIDTH,
            degree: None,
            gauge: None,
        }
    }
}

fn number<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: fmt::Display,
{
    value.trim().parse().map_err(|e| ConfigError::invalid(key, e))
}

fn finite(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v: f64 = number(key, value)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be finite"))
    }
}

fn positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let v = finite(key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(ConfigError::invalid(key, "must be positive"))
    }
}

/// `lo:hi` with `lo < hi`.
pub fn parse_range(text: &str) -> Result<(f64, f64), ConfigError> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| ConfigError::invalid("range", format!("expected lo:hi, got '{text}'")))?;
    let lo = finite("range", lo)?;
    let hi = finite("range", hi)?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(ConfigError::invalid("range", format!("empty range {lo}:{hi}")))
    }
}

/// Comma-separated, strictly ascending, each at least 3.
pub fn parse_iterations(text: &str) -> Result<Vec<usize>, ConfigError> {
    let ks = text
        .split(',')
        .map(|s| number::<usize>("iterations", s))
        .collect::<Result<Vec<_>, _>>()?;
    if ks.is_empty() || ks.iter().any(|&k| k < atem::MIN_ITERATIONS) {
        return Err(ConfigError::invalid("iterations", "each count must be at least 3"));
    }
    if ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConfigError::invalid("iterations", "counts must be strictly ascending"));
    }
    Ok(ks)
}

fn boolean(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        other => Err(ConfigError::invalid(key, format!("expected true/false, got '{other}'"))),
    }
}

impl RunConfig {
    /// Apply settings in order on top of the defaults.
    pub fn from_pairs<K: AsRef<str>, V: AsRef<str>>(pairs: &[(K, V)]) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        for (k, v) in pairs {
            cfg.set(k.as_ref(), v.as_ref())?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let v = value.trim();
        match key {
            "mass" => self.mass = Some(v.to_string()),
            "potential" => self.potential = Some(v.to_string()),
            "param" => {
                let (name, val) = expr::parse_binding(v).map_err(|e| ConfigError::invalid(key, e))?;
                self.params.insert(name, val);
            }
            "ordering" => {
                v.parse::<Ordering>().map_err(|e| ConfigError::invalid(key, e))?;
                self.ordering = v.to_string();
            }
            "iterations" => self.iterations = parse_iterations(v)?,
            "range" => self.range = Some(parse_range(v)?),
            "threshold" => {
                let t = finite(key, v)?;
                if !(0.0..=atem::MAX_DIGITS).contains(&t) {
                    return Err(ConfigError::invalid(key, "must lie in [0, 16]"));
                }
                self.threshold = t;
            }
            "grid-step" => self.grid_step = positive(key, v)?,
            "precision" => self.precision = v.parse().map_err(|e| ConfigError::invalid(key, e))?,
            "condition" => self.condition = v.parse().map_err(|e| ConfigError::invalid(key, e))?,
            "format" => self.format = v.parse().map_err(|e| ConfigError::invalid(key, e))?,
            "output" => self.output = Some(PathBuf::from(v)),
            "state" => self.state = Some(number(key, v)?),
            "states" => {
                let n: usize = number(key, v)?;
                if n == 0 || n > oracle::MAX_STATES {
                    return Err(ConfigError::invalid(key, "must be between 1 and 10"));
                }
                self.states = n;
            }
            "tolerance" => self.tolerance = positive(key, v)?,
            "oracle-points" => {
                let n: usize = number(key, v)?;
                GridSpec::new(1.0, n).map_err(|e| ConfigError::invalid(key, e))?;
                self.oracle_points = n;
            }
            "oracle-half-width" => self.oracle_half_width = positive(key, v)?,
            "refine" => self.refine = boolean(key, v)?,
            "samples" => {
                let n: usize = number(key, v)?;
                if n < 3 || n % 2 == 0 {
                    return Err(ConfigError::invalid(key, "must be odd and at least 3"));
                }
                self.samples = n;
            }
            "half-width" => self.half_width = positive(key, v)?,
            "degree" => self.degree = Some(number(key, v)?),
            "gauge" => {
                expr::parse(v).map_err(|e| ConfigError::invalid(key, e))?;
                self.gauge = Some(v.to_string());
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering.parse().expect("validated on set")
    }

    pub fn require_range(&self) -> Result<(f64, f64), ConfigError> {
        self.range.ok_or(ConfigError::Missing("range"))
    }

    /// Parse and bind everything needed for a solve.
    pub fn problem(&self) -> Result<PdmProblem, ConfigError> {
        let mass_text = self.mass.as_deref().ok_or(ConfigError::Missing("mass"))?;
        let pot_text = self.potential.as_deref().ok_or(ConfigError::Missing("potential"))?;
        let bindings: Bindings = self.params.clone();
        let parse = |key: &str, text: &str| -> Result<Expr, ConfigError> {
            let e = expr::parse(text).map_err(|e| ConfigError::invalid(key, e))?;
            e.check_bound(&bindings).map_err(|e| ConfigError::invalid(key, e))?;
            Ok(e)
        };
        let mass = parse("mass", mass_text)?;
        let potential = parse("potential", pot_text)?;
        let mut problem = PdmProblem::new(mass, potential, bindings.clone(), self.ordering());
        if let Some(g) = &self.gauge {
            problem = problem.with_gauge(crate::hamiltonian::GaugeSpec::new(parse("gauge", g)?));
        }
        Ok(problem)
    }

    pub fn root_settings(&self) -> RootSettings {
        RootSettings {
            condition: self.condition,
            grid_step: self.grid_step,
            tolerance: atem::DEFAULT_TOLERANCE,
            precision: self.precision,
        }
    }

    pub fn converge_settings(&self) -> Result<ConvergeSettings, ConfigError> {
        if self.iterations.len() < 2 {
            return Err(ConfigError::invalid(
                "iterations",
                "need at least two counts to compare",
            ));
        }
        Ok(ConvergeSettings {
            k_list: self.iterations.clone(),
            threshold: self.threshold,
            max_gap: atem::DEFAULT_MAX_GAP,
            roots: self.root_settings(),
        })
    }

    pub fn oracle_grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.oracle_half_width, self.oracle_points).map_err(|e| ConfigError::invalid("oracle-points", e))
    }

    /// Echo of the solve-relevant settings.
    pub fn meta(&self) -> Result<Meta, ConfigError> {
        let ord = self.ordering();
        Ok(Meta {
            ordering: OrderingMeta {
                name: ord.label(),
                eta: round12(ord.spec.eta),
                eps: round12(ord.spec.eps),
                rho: round12(ord.spec.rho),
            },
            gamma: self.params.get("gamma").copied().map(round12),
            k_list: self.iterations.clone(),
            mass: self.mass.clone().ok_or(ConfigError::Missing("mass"))?,
            potential: self.potential.clone().ok_or(ConfigError::Missing("potential"))?,
            params: self.params.clone(),
            range: self.require_range()?.into(),
            digits: self.threshold,
            grid_step: self.grid_step,
            precision: self.precision.name().to_string(),
        })
    }

    /// Rebuild the solve-relevant part of a configuration from its echo.
    pub fn from_meta(meta: &Meta) -> Result<Self, ConfigError> {
        let mut pairs = vec![
            ("mass".to_string(), meta.mass.clone()),
            ("potential".to_string(), meta.potential.clone()),
            ("ordering".to_string(), meta.ordering.name.clone()),
            (
                "iterations".to_string(),
                meta.k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","),
            ),
            ("range".to_string(), format!("{}:{}", meta.range[0], meta.range[1])),
            ("threshold".to_string(), meta.digits.to_string()),
            ("grid-step".to_string(), meta.grid_step.to_string()),
            ("precision".to_string(), meta.precision.clone()),
        ];
        for (k, v) in &meta.params {
            pairs.push(("param".to_string(), format!("{k}={v}")));
        }
        RunConfig::from_pairs(&pairs)
    }
}

/// Round to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Text form with at most 12 significant digits.
pub fn fmt12(x: f64) -> String {
    let r = round12(x);
    if r == r.trunc() && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingMeta {
    pub name: String,
    pub eta: f64,
    pub eps: f64,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub ordering: OrderingMeta,
    pub gamma: Option<f64>,
    pub k_list: Vec<usize>,
    pub mass: String,
    pub potential: String,
    pub params: BTreeMap<String, f64>,
    pub range: [f64; 2],
    pub digits: f64,
    pub grid_step: f64,
    pub precision: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub n: usize,
    #[serde(rename = "E")]
    pub energy: f64,
    pub digits: f64,
    pub m: usize,
}

impl StateRecord {
    pub fn from_result(r: &atem::EigenResult) -> Self {
        Self {
            n: r.index,
            energy: round12(r.energy),
            digits: round12(r.digits.unwrap_or(0.0)),
            m: r.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub states: Vec<StateRecord>,
    pub meta: Meta,
}
