//! `atem` subcommands. [`run`] takes the argument list and writers so the
//! binary and the tests share one code path.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use atem_core::atem::{self, ConvergenceReport};
use atem_core::config::{self, fmt12, round12, ConfigError, Format, RunConfig, SolveReport, StateRecord};
use atem_core::hamiltonian::{OrderingPreset, PdmProblem};
use atem_core::oracle;
use atem_core::wavefunction::{self, ReconstructSettings};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_NUMERIC: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "atem",
    version,
    about = "Position-dependent-mass eigenvalues by asymptotic Taylor expansion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Converged eigenvalues over an energy range.
    Solve(ProblemArgs),
    /// Eigenvalue estimates for every iteration count.
    ConvergeTable(ProblemArgs),
    /// Taylor coefficients and sampled wavefunction of one state.
    Wavefunction {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        wave: WaveArgs,
    },
    /// Compare converged eigenvalues with the finite-difference solver.
    OracleCheck {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        oracle: OracleArgs,
    },
    /// List the named orderings.
    Presets {
        #[arg(long)]
        format: Option<String>,
    },
}

#[derive(Debug, Args, Default)]
pub struct ProblemArgs {
    /// Flat key=value file; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mass profile m(x).
    #[arg(long)]
    pub mass: Option<String>,
    /// Potential V(x).
    #[arg(long)]
    pub potential: Option<String>,
    /// Parameter binding name=value; repeatable.
    #[arg(long = "param")]
    pub params: Vec<String>,
    /// Preset (BDD, MM, ZK, LK-sym) or eta,eps,rho.
    #[arg(long, allow_hyphen_values = true)]
    pub ordering: Option<String>,
    /// Comma-separated iteration counts, ascending.
    #[arg(long)]
    pub iterations: Option<String>,
    /// Energy window lo:hi.
    #[arg(long, allow_hyphen_values = true)]
    pub range: Option<String>,
    /// Significant digits two iteration counts must share.
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub grid_step: Option<String>,
    /// double or double-double.
    #[arg(long)]
    pub precision: Option<String>,
    /// determinant, even or odd.
    #[arg(long)]
    pub condition: Option<String>,
    /// Gauge log-derivative lambda(x) = g'/g; default -x.
    #[arg(long, allow_hyphen_values = true)]
    pub gauge: Option<String>,
    /// json or csv.
    #[arg(long)]
    pub format: Option<String>,
    /// Output file (directory for wavefunction); stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct WaveArgs {
    /// State index n.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    #[arg(long)]
    pub half_width: Option<String>,
    /// Fixed polynomial degree instead of automatic selection.
    #[arg(long)]
    pub degree: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct OracleArgs {
    /// Largest accepted |E_atem - E_oracle|.
    #[arg(long)]
    pub tolerance: Option<String>,
    /// Number of lowest states compared.
    #[arg(long)]
    pub states: Option<String>,
    #[arg(long)]
    pub oracle_points: Option<String>,
    #[arg(long)]
    pub oracle_half_width: Option<String>,
    /// Skip Richardson extrapolation.
    #[arg(long)]
    pub no_refine: bool,
}

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Numeric(String),
    Mismatch,
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::Mismatch => EXIT_MISMATCH,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Config(format!("json error: {e}"))
    }
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

/// Parse `args` (including the program name) and execute.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Mismatch) => EXIT_MISMATCH,
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) => format!("error: {m}"),
                Failure::Numeric(m) => format!("numerical failure: {m}"),
                Failure::Mismatch => unreachable!(),
            };
            let _ = writeln!(err, "{msg}");
            f.code()
        }
    }
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Solve(args) => solve(&build_config(args, &[])?, out),
        Command::ConvergeTable(args) => converge_table(&build_config(args, &[])?, out),
        Command::Wavefunction { problem, wave } => {
            let extra = [
                ("state", &wave.state),
                ("samples", &wave.samples),
                ("half-width", &wave.half_width),
                ("degree", &wave.degree),
            ];
            wavefunction_cmd(&build_config(problem, &extra)?, out)
        }
        Command::OracleCheck { problem, oracle } => {
            let refine = oracle.no_refine.then(|| "false".to_string());
            let extra = [
                ("tolerance", &oracle.tolerance),
                ("states", &oracle.states),
                ("oracle-points", &oracle.oracle_points),
                ("oracle-half-width", &oracle.oracle_half_width),
                ("refine", &refine),
            ];
            oracle_check(&build_config(problem, &extra)?, out)
        }
        Command::Presets { format } => {
            let format = match format {
                Some(f) => f.parse().map_err(Failure::Config)?,
                None => Format::Json,
            };
            presets(format, out)
        }
    }
}

/// Config file settings first, then flags; later settings win.
pub fn build_config(args: &ProblemArgs, extra: &[(&str, &Option<String>)]) -> Result<RunConfig, Failure> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        pairs.extend(config::parse_pairs(&text)?);
    }
    let flags = [
        ("mass", &args.mass),
        ("potential", &args.potential),
        ("ordering", &args.ordering),
        ("iterations", &args.iterations),
        ("range", &args.range),
        ("threshold", &args.threshold),
        ("grid-step", &args.grid_step),
        ("precision", &args.precision),
        ("condition", &args.condition),
        ("gauge", &args.gauge),
        ("format", &args.format),
    ];
    for (k, v) in flags.iter().chain(extra) {
        if let Some(v) = v {
            pairs.push((k.to_string(), v.clone()));
        }
    }
    for p in &args.params {
        pairs.push(("param".into(), p.clone()));
    }
    if let Some(o) = &args.output {
        pairs.push(("output".into(), o.display().to_string()));
    }
    Ok(RunConfig::from_pairs(&pairs)?)
}

fn run_converge(cfg: &RunConfig) -> Result<(PdmProblem, ConvergenceReport), Failure> {
    let problem = cfg.problem()?;
    let range = cfg.require_range()?;
    let settings = cfg.converge_settings()?;
    let report = atem::converge(&problem, range, &settings).map_err(numeric)?;
    Ok((problem, report))
}

/// Write to `--output` when given, otherwise to `out`.
fn emit(cfg: &RunConfig, out: &mut dyn Write, body: &[u8]) -> Result<(), Failure> {
    match &cfg.output {
        Some(path) => fs::write(path, body)?,
        None => out.write_all(body)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut s = serde_json::to_vec_pretty(value)?;
    s.push(b'\n');
    Ok(s)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Failure::Config(e.to_string()))
}

pub fn solve(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, report) = run_converge(cfg)?;
    let states: Vec<StateRecord> = report.accepted.iter().map(StateRecord::from_result).collect();
    let body = match cfg.format {
        Format::Json => json_bytes(&SolveReport {
            states,
            meta: cfg.meta()?,
        })?,
        Format::Csv => {
            let header = ["n", "E", "digits", "m"].map(String::from);
            let rows: Vec<Vec<String>> = states
                .iter()
                .map(|s| vec![s.n.to_string(), fmt12(s.energy), fmt12(s.digits), s.m.to_string()])
                .collect();
            csv_bytes(&header, &rows)?
        }
    };
    emit(cfg, out, &body)
}

#[derive(Serialize)]
struct TableJson {
    k_list: Vec<usize>,
    table: Vec<Vec<Option<f64>>>,
}

pub fn converge_table(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let (_, report) = run_converge(cfg)?;
    let table: Vec<Vec<Option<f64>>> = report
        .table()
        .into_iter()
        .map(|row| row.into_iter().map(|c| c.map(round12)).collect())
        .collect();
    let body = match cfg.format {
        Format::Json => json_bytes(&TableJson {
            k_list: report.k_list.clone(),
            table,
        })?,
        Format::Csv => {
            let mut header = vec!["n".to_string()];
            header.extend(report.k_list.iter().map(|k| k.to_string()));
            let rows: Vec<Vec<String>> = table
                .iter()
                .enumerate()
                .map(|(n, row)| {
                    let mut r = vec![n.to_string()];
                    r.extend(row.iter().map(|c| c.map(fmt12).unwrap_or_default()));
                    r
                })
                .collect();
            csv_bytes(&header, &rows)?
        }
    };
    emit(cfg, out, &body)
}

#[derive(Serialize)]
struct CoefficientFile {
    n: usize,
    #[serde(rename = "E")]
    energy: f64,
    m: usize,
    ordering: String,
    gamma: Option<f64>,
    boundary: [f64; 2],
    degree: usize,
    normalization: f64,
    coeffs: Vec<f64>,
}

pub fn wavefunction_cmd(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let n = cfg.state.ok_or(ConfigError::Missing("state"))?;
    let (problem, report) = run_converge(cfg)?;
    let root = report.accepted.iter().find(|r| r.index == n).ok_or_else(|| {
        Failure::Numeric(format!(
            "state {n} is not among the {} accepted states",
            report.accepted.len()
        ))
    })?;
    let settings = ReconstructSettings {
        precision: cfg.precision,
        degree: cfg.degree,
        half_width: cfg.half_width,
        count: cfg.samples,
    };
    let w = wavefunction::reconstruct(&problem, n, root.energy, root.iterations, &settings).map_err(numeric)?;
    let samples = wavefunction::psi_samples(&w, &problem.gauge, &problem.bindings, cfg.half_width, cfg.samples)
        .map_err(numeric)?;
    let coeffs = CoefficientFile {
        n,
        energy: round12(w.energy),
        m: w.iterations,
        ordering: cfg.ordering().label(),
        gamma: cfg.params.get("gamma").copied().map(round12),
        boundary: [round12(w.boundary.0), round12(w.boundary.1)],
        degree: w.degree,
        normalization: round12(samples.normalization),
        coeffs: w.coeffs[..=w.degree].iter().map(|&c| round12(c)).collect(),
    };
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    let coeff_path = dir.join(format!("state{n}_coeffs.json"));
    let psi_path = dir.join(format!("state{n}_psi.csv"));
    fs::write(&coeff_path, json_bytes(&coeffs)?)?;
    let rows: Vec<Vec<String>> = samples.points.iter().map(|(x, v)| vec![fmt12(*x), fmt12(*v)]).collect();
    fs::write(&psi_path, csv_bytes(&["x".into(), "psi".into()], &rows)?)?;
    writeln!(out, "{}", display(&coeff_path))?;
    writeln!(out, "{}", display(&psi_path))?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

#[derive(Serialize)]
struct OracleRow {
    n: usize,
    atem: Option<f64>,
    oracle: f64,
    diff: Option<f64>,
    ok: bool,
}

#[derive(Serialize)]
struct OracleReport {
    tolerance: f64,
    passed: bool,
    rows: Vec<OracleRow>,
}

pub fn oracle_check(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), Failure> {
    let (problem, report) = run_converge(cfg)?;
    let grid = cfg.oracle_grid()?;
    let reference = oracle::oracle_eigenvalues(&problem, &grid, cfg.states, cfg.refine).map_err(numeric)?;
    let rows: Vec<OracleRow> = reference
        .iter()
        .enumerate()
        .map(|(n, &e)| {
            let atem = report.accepted.iter().find(|r| r.index == n).map(|r| r.energy);
            let diff = atem.map(|a| (a - e).abs());
            OracleRow {
                n,
                atem: atem.map(round12),
                oracle: round12(e),
                diff: diff.map(round12),
                ok: diff.is_some_and(|d| d <= cfg.tolerance),
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.ok);
    let body = match cfg.format {
        Format::Json => json_bytes(&OracleReport {
            tolerance: cfg.tolerance,
            passed,
            rows,
        })?,
        Format::Csv => {
            let header = ["n", "atem", "oracle", "diff", "ok"].map(String::from);
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.atem.map(fmt12).unwrap_or_default(),
                        fmt12(r.oracle),
                        r.diff.map(|d| format!("{d:e}")).unwrap_or_default(),
                        r.ok.to_string(),
                    ]
                })
                .collect();
            csv_bytes(&header, &cells)?
        }
    };
    emit(cfg, out, &body)?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

#[derive(Serialize)]
struct PresetRow {
    name: &'static str,
    eta: f64,
    eps: f64,
    rho: f64,
    operator: &'static str,
}

pub fn presets(format: Format, out: &mut dyn Write) -> Result<(), Failure> {
    let rows: Vec<PresetRow> = OrderingPreset::ALL
        .iter()
        .map(|p| {
            let s = p.spec();
            PresetRow {
                name: p.name(),
                eta: s.eta,
                eps: s.eps,
                rho: s.rho,
                operator: p.operator_form(),
            }
        })
        .collect();
    let body = match format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let header = ["name", "eta", "eps", "rho", "operator"].map(String::from);
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.name.to_string(),
                        r.eta.to_string(),
                        r.eps.to_string(),
                        r.rho.to_string(),
                        r.operator.to_string(),
                    ]
                })
                .collect();
            csv_bytes(&header, &cells)?
        }
    };
    out.write_all(&body)?;
    Ok(())
}
