//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 empty result (no phase-matching
//! solution where one is required), 3 invalid input.
//!
//! Every file written starts with provenance: tool version, method and the
//! SHA-256 of the effective configuration (after flag overrides). CSV files
//! carry it as `#` comment lines, JSON files under `"meta"`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::config::{MonteCarloSpec, OutputFormat, RunConfig, DEFAULT_SHOTS};
use crate::ensemble::{analytic_moments, monte_carlo_moments, VacuumEnsemble};
use crate::phasematch::{matched_triple, rainbow_locus, LocusPoint, Process};
use crate::scenarios::{
    pdc_rainbow, puc_satellite, rainbow_summary, solve_point, zwm_visibility, LossModel,
    RainbowCurve, ZwmSetup, HALF_PUMP,
};

pub const TOOL: &str = "pdc";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Value of `--config` that selects the built-in reference configuration.
pub const BUILTIN_REFERENCE: &str = "@reference";

#[derive(Debug, Parser)]
#[command(
    name = "pdc",
    version,
    about = "Zeropoint-field parametric conversion simulator"
)]
pub struct Cli {
    /// JSON run configuration (`@reference` for the shipped one).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides output.path).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Transfer method: exact, perturb2 or ode.
    #[arg(long, global = true)]
    pub method: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Phase-matching angle over the grid.
    Phasematch {
        #[arg(long, default_value = "down")]
        process: String,
    },
    /// Down-conversion rainbow, up-conversion satellite and ratio summary.
    Rainbow,
    /// Two-crystal induced-coherence fringe.
    Zwm {
        /// Idler transmission between the crystals.
        #[arg(long)]
        t: f64,
        #[arg(long = "n-phi", default_value_t = 64)]
        n_phi: usize,
    },
    /// Monte Carlo moments at one frequency.
    Sample {
        #[arg(long, default_value_t = HALF_PUMP)]
        omega: f64,
        #[arg(long, default_value = "down")]
        process: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Io(std::io::Error),
    Empty(String),
    Invalid(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Empty(_) => 2,
            CliError::Invalid(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Empty(m) => write!(f, "no result: {m}"),
            CliError::Invalid(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Diagnostics go to stderr, written file paths to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("pdc: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config named by `--config` and applies flag overrides
/// (flag > file > default).
pub fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Invalid("missing --config".into()))?;
    let text = if path.as_os_str() == BUILTIN_REFERENCE {
        crate::config::REFERENCE_JSON.to_string()
    } else {
        fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("cannot read {}: {e}", path.display())))?
    };
    let mut config = RunConfig::from_json(&text).map_err(|e| CliError::Invalid(e.to_string()))?;

    if let Some(m) = &cli.method {
        config.method = m.clone();
    }
    if cli.seed.is_some() || cli.shots.is_some() {
        let mc = config.montecarlo.get_or_insert(MonteCarloSpec::default());
        if cli.seed.is_some() {
            mc.seed = cli.seed;
        }
        if cli.shots.is_some() {
            mc.shots = cli.shots;
        }
    }
    if let Some(out) = &cli.out {
        config.output.path = out.to_string_lossy().into_owned();
    }
    config
        .validate()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(config)
}

pub fn run(cli: &Cli) -> Result<Vec<PathBuf>, CliError> {
    let config = effective_config(cli)?;
    let out_dir = PathBuf::from(&config.output.path);
    match &cli.command {
        Command::Phasematch { process } => {
            let process = parse_process(process)?;
            cmd_phasematch(&config, process, &out_dir)
        }
        Command::Rainbow => cmd_rainbow(&config, &out_dir),
        Command::Zwm { t, n_phi } => cmd_zwm(&config, *t, *n_phi, &out_dir),
        Command::Sample { omega, process } => {
            let process = parse_process(process)?;
            cmd_sample(&config, *omega, process, &out_dir)
        }
    }
}

fn parse_process(s: &str) -> Result<Process, CliError> {
    s.parse()
        .map_err(|e: crate::PdcError| CliError::Invalid(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
struct Meta<'a> {
    tool: &'a str,
    version: &'a str,
    config_sha256: String,
    method: &'a str,
}

fn meta(config: &RunConfig) -> Meta<'_> {
    Meta {
        tool: TOOL,
        version: VERSION,
        config_sha256: config.hash(),
        method: &config.method,
    }
}

fn csv_header(config: &RunConfig, extra: &[(&str, String)], columns: &[&str]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# tool: {TOOL} {VERSION}");
    let _ = writeln!(s, "# config_sha256: {}", config.hash());
    let _ = writeln!(s, "# method: {}", config.method);
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}: {v}");
    }
    s.push_str(&columns.join(","));
    s.push('\n');
    s
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    write_file(dir, name, &text)
}

fn locus_csv(config: &RunConfig, process: Process, locus: &[LocusPoint]) -> String {
    let mut s = csv_header(
        config,
        &[("process", process.as_str().into())],
        &["omega", "theta_rad", "status"],
    );
    for p in locus {
        let _ = writeln!(
            s,
            "{},{},{}",
            p.omega,
            opt(p.theta.as_ref().ok().copied()),
            p.status()
        );
    }
    s
}

pub fn cmd_phasematch(
    config: &RunConfig,
    process: Process,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let locus = rainbow_locus(&config.dispersion, &config.omega_grid(), process);
    let stem = format!("locus_{}", process.as_str());
    let path = match config.output.format {
        OutputFormat::Csv => write_file(
            out_dir,
            &format!("{stem}.csv"),
            &locus_csv(config, process, &locus),
        )?,
        OutputFormat::Json => {
            let points: Vec<_> = locus
                .iter()
                .map(|p| {
                    json!({
                        "omega": p.omega,
                        "theta_rad": p.theta.as_ref().ok(),
                        "status": p.status(),
                    })
                })
                .collect();
            write_json(
                out_dir,
                &format!("{stem}.json"),
                &json!({"meta": meta(config), "process": process, "points": points}),
            )?
        }
    };
    if locus.iter().all(|p| p.theta.is_err()) {
        return Err(CliError::Empty(format!(
            "no {} phase-matching solution on the grid (wrote {})",
            process.as_str(),
            path.display()
        )));
    }
    Ok(vec![path])
}

fn curve_csv(config: &RunConfig, curve: &RainbowCurve) -> String {
    let mut s = csv_header(
        config,
        &[("process", curve.process.as_str().into())],
        &[
            "omega",
            "theta_rad",
            "S_signal",
            "S_conjugate",
            "count_signal",
            "count_conjugate",
            "delta_other",
            "status",
        ],
    );
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            p.omega,
            opt(p.theta),
            opt(p.s_signal),
            opt(p.s_conjugate),
            opt(p.count_signal),
            opt(p.count_conjugate),
            opt(p.delta_other),
            p.status
        );
    }
    s
}

fn write_curve(
    config: &RunConfig,
    out_dir: &Path,
    stem: &str,
    curve: &RainbowCurve,
) -> Result<PathBuf, CliError> {
    match config.output.format {
        OutputFormat::Csv => write_file(out_dir, &format!("{stem}.csv"), &curve_csv(config, curve)),
        OutputFormat::Json => write_json(
            out_dir,
            &format!("{stem}.json"),
            &json!({"meta": meta(config), "process": curve.process, "points": curve.points}),
        ),
    }
}

/// Grid with half the pump frequency inserted if it is missing, so the
/// summary can always be read back from the written curves.
fn grid_with_half(config: &RunConfig) -> Vec<f64> {
    let mut grid = config.omega_grid();
    if !grid.iter().any(|w| (w - HALF_PUMP).abs() <= 1e-9) {
        let at = grid.partition_point(|&w| w < HALF_PUMP);
        grid.insert(at, HALF_PUMP);
    }
    grid
}

pub fn cmd_rainbow(config: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = grid_with_half(config);
    let method = config.method();
    let pdc = pdc_rainbow(&config.dispersion, &config.crystal, &grid, method);
    let puc = puc_satellite(&config.dispersion, &config.crystal, &grid, method);
    let mut paths = vec![
        write_curve(config, out_dir, "pdc_rainbow", &pdc)?,
        write_curve(config, out_dir, "puc_satellite", &puc)?,
    ];
    let summary = rainbow_summary(&pdc, &puc).ok_or_else(|| {
        CliError::Empty("a curve has no solution at omega = 0.5; summary not written".into())
    })?;
    paths.push(write_json(
        out_dir,
        "rainbow_summary.json",
        &json!({
            "meta": meta(config),
            "gL": config.crystal.gl(),
            "summary": summary,
            "ratio_intensity_at_half": summary.ratio_intensity_at_half,
            "ratio_angle_at_half": summary.ratio_angle_at_half,
        }),
    )?);
    Ok(paths)
}

pub fn cmd_zwm(
    config: &RunConfig,
    t: f64,
    n_phi: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(CliError::Invalid(format!(
            "--t must lie in [0, 1], got {t}"
        )));
    }
    if n_phi < 2 {
        return Err(CliError::Invalid("--n-phi must be >= 2".into()));
    }
    let (_, triple) = matched_triple(&config.dispersion, HALF_PUMP, Process::Down)
        .map_err(|e| CliError::Empty(format!("no down-conversion match at omega = 0.5: {e}")))?;
    let setup = ZwmSetup {
        slabs: [config.crystal, config.crystal],
        transmission: t,
        triple,
        loss: LossModel::NoisePort,
    };
    let result = zwm_visibility(&setup, config.method(), n_phi)
        .map_err(|e| CliError::Invalid(e.to_string()))?;

    let mut csv = csv_header(
        config,
        &[("t", t.to_string()), ("n_phi", n_phi.to_string())],
        &["phi", "count_rate"],
    );
    for (phi, rate) in &result.fringe {
        let _ = writeln!(csv, "{phi},{rate}");
    }
    let fringe = write_file(out_dir, "zwm_fringe.csv", &csv)?;
    let summary = write_json(
        out_dir,
        "zwm_summary.json",
        &json!({
            "meta": meta(config),
            "visibility": result.visibility,
            "t": t,
            "gL": config.crystal.gl(),
            "mean_rate": result.mean_rate,
            "fringe_amplitude": result.fringe_amplitude,
        }),
    )?;
    Ok(vec![fringe, summary])
}

pub fn cmd_sample(
    config: &RunConfig,
    omega: f64,
    process: Process,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let mc = config.montecarlo.unwrap_or_default();
    let seed = mc
        .seed
        .ok_or_else(|| CliError::Invalid("missing montecarlo.seed (or --seed)".into()))?;
    let shots = mc.shots.unwrap_or(DEFAULT_SHOTS);

    let point = solve_point(
        &config.dispersion,
        &config.crystal,
        omega,
        process,
        config.method(),
    )
    .map_err(|e| match e {
        crate::PdcError::NoSolution { .. } | crate::PdcError::Evanescent { .. } => {
            CliError::Empty(e.to_string())
        }
        other => CliError::Invalid(other.to_string()),
    })?;
    let ensemble = VacuumEnsemble {
        n_modes: point.transfer.dim(),
        seed,
        shots,
    };
    let sampled = monte_carlo_moments(&point.transfer, &ensemble)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let analytic = analytic_moments(&point.transfer);
    let path = write_json(
        out_dir,
        "sample.json",
        &json!({
            "meta": meta(config),
            "seed": seed,
            "shots": shots,
            "omega": omega,
            "process": process,
            "theta_rad": point.theta,
            "monte_carlo": sampled,
            "analytic": analytic,
        }),
    )?;
    Ok(vec![path])
}
