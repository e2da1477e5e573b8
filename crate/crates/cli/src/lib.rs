//! Command-line front end: boundary evaluation, parameter sweeps,
//! verification suites and exponent fits driven by one config file.
//!
//! Exit codes: 0 success, 1 failed check or runtime error, 2 bad config.

pub mod config;
pub mod sweep;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use superradiance::boundary::{critical_omega, BoundaryResult, CriticalCoupling};
use superradiance::landau::{fit_exponent, ExponentFit, ExponentScan};
use superradiance::models::ModelSpec;

pub use config::{Config, ConfigError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("check failed: {0}")]
    Check(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Check(_) | CliError::Runtime(_) => 1,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }
}

#[derive(Debug, Parser)]
#[command(name = "superradiance", version, about = "Superradiant phase transitions in spin-boson models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Critical frequency, critical coupling and classicality of the model.
    Boundary(CommonArgs),
    /// Runs the configured pipelines over a parameter grid.
    Sweep(CommonArgs),
    /// Identity, vertex-oracle and bound suites; nonzero exit on any failure.
    Verify(CommonArgs),
    /// Fits the order-parameter exponent near the boundary.
    Exponent(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Config file (JSON, or TOML by extension).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Seed for the random-draw suites; overrides the config's `seed`.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Print the machine-readable report on stdout.
    #[arg(long)]
    pub json: bool,
}

impl CommonArgs {
    fn load(&self, required: bool) -> Result<Config, CliError> {
        let mut config = match &self.config {
            Some(p) => Config::load(p)?,
            None if required => return Err(ConfigError::Invalid("--config PATH is required".into()).into()),
            None => Config::default(),
        };
        if self.seed.is_some() {
            config.seed = self.seed;
        }
        Ok(config)
    }

    fn out_dir(&self, config: &Config) -> Option<PathBuf> {
        self.out.clone().or_else(|| config.output.clone())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = self.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Boundary(a) => cmd_boundary(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Verify(a) => cmd_verify(a, out),
        Command::Exponent(a) => cmd_exponent(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn emit(out: &mut dyn Write, text: impl AsRef<str>) -> Result<(), CliError> {
    writeln!(out, "{}", text.as_ref()).map_err(|e| CliError::Runtime(format!("stdout: {e}")))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    s.push('\n');
    write_file(path, s.as_bytes())
}

fn write_report(dir: Option<PathBuf>, value: &impl Serialize) -> Result<(), CliError> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        write_json(&dir.join("report.json"), value)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct BoundaryReport {
    pub model: ModelSpec<f64>,
    pub result: BoundaryResult<f64>,
}

pub fn boundary_report(config: &Config) -> Result<BoundaryReport, CliError> {
    let model = config.model()?.clone();
    let result = critical_omega(&model, config.beta()).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(BoundaryReport { model, result })
}

fn cmd_boundary(args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.load(true)?;
    let report = boundary_report(&config)?;
    write_report(args.out_dir(&config), &report)?;
    if args.json {
        return emit(out, serde_json::to_string_pretty(&report).expect("report serializes"));
    }
    let r = &report.result;
    let g_c = match r.critical_g {
        Some(CriticalCoupling::Value(g)) => format!("{g}"),
        Some(CriticalCoupling::AlwaysSuperradiant) => "none (superradiant at any coupling)".into(),
        None => "undefined for this family".into(),
    };
    emit(
        out,
        format!(
            "family        {:?}\nbeta          {}\nomega_c       {}\n  couplings   {}\n  kappa       {}\ng_c           {g_c}\nclassicality  {}",
            r.family, r.beta, r.critical_omega, r.coupling_part, r.kappa_part, r.classicality
        ),
    )
}

fn cmd_sweep(args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.load(true)?;
    if config.sweep.is_none() {
        return Err(ConfigError::Invalid("sweep needs a `sweep` section".into()).into());
    }
    let dir = args.out_dir(&config).unwrap_or_else(|| PathBuf::from("out"));
    let outcome = sweep::run_sweep(&config, args.threads)?;
    let report = sweep::write_artifacts(&dir, &config, &outcome)?;
    if args.json {
        return emit(out, serde_json::to_string_pretty(&report).expect("report serializes"));
    }
    emit(
        out,
        format!(
            "{} points ({} failed) in {:.2} s -> {}",
            report.points,
            report.failed,
            outcome.wall_time_s,
            dir.display()
        ),
    )?;
    for line in &report.lines {
        let mut s = match line.line_lambda {
            Some(l) => format!("  λ = {l}:"),
            None => "  sweep:".to_string(),
        };
        if let Some(c) = line.analytic_critical {
            s += &format!(" critical {c:.6}");
        }
        if let Some((a, b)) = line.classical_onset {
            s += &format!(", classical onset in [{a:.6}, {b:.6}]");
        }
        if let Some(t) = &line.ed_transition {
            s += &format!(", ED ratio n(0.8)/n(1.2) = {:.3e}", t.ratio);
            if let Some(w) = t.width {
                s += &format!(", 80-20 width {w:.4} ω_c");
            }
        }
        emit(out, s)?;
    }
    Ok(())
}

fn cmd_verify(args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.load(false)?;
    let report = args.pool()?.install(|| verify::run_verify(&config));
    write_report(args.out_dir(&config), &report)?;
    if args.json {
        emit(out, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    } else {
        if let Some(s) = &report.schwinger {
            emit(
                out,
                format!(
                    "schwinger identity: {}/{} passed, worst relative error {:.2e}, worst imaginary residue {:.2e}",
                    s.summary.checks - s.summary.failures,
                    s.summary.checks,
                    s.summary.worst,
                    s.worst_imaginary_residue
                ),
            )?;
        }
        if let Some(c) = &report.chi {
            emit(
                out,
                format!(
                    "chi oracle: {}/{} passed, worst relative error {:.2e}, negative static vertices {}",
                    c.summary.checks - c.summary.failures,
                    c.summary.checks,
                    c.summary.worst,
                    c.negative_chi4_zero
                ),
            )?;
        }
        if let Some(b) = &report.bounds {
            for c in &b.certificates {
                emit(
                    out,
                    format!(
                        "bounds m = {}: {} samples, {} violations, sup/bound {:.3}{}",
                        c.m,
                        c.samples,
                        c.violations + c.sqrt6_violations,
                        c.empirical_sup / c.bound,
                        c.sqrt6_sup_ratio.map_or(String::new(), |r| format!(", sup/√6 bound {r:.3}"))
                    ),
                )?;
            }
        }
        for f in &report.failures {
            emit(out, format!("FAIL {f}"))?;
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Check(format!("{} verification check(s) failed", report.failures.len())))
    }
}

#[derive(Debug, Serialize)]
pub struct ExponentReport {
    pub model: ModelSpec<f64>,
    pub fit: ExponentFit<f64>,
    pub passed: Option<bool>,
}

pub fn exponent_report(config: &Config) -> Result<ExponentReport, CliError> {
    let model = config.model()?.clone();
    let spec = config.exponent.clone().ok_or_else(|| ConfigError::Invalid("exponent needs an `exponent` section".into()))?;
    let scan = ExponentScan { window: spec.window, points: spec.points };
    let fit = fit_exponent(&model, config.beta(), scan).map_err(|e| CliError::Runtime(e.to_string()))?;
    let passed = spec.expect.as_ref().map(|x| (fit.alpha - x.alpha).abs() <= x.tolerance);
    Ok(ExponentReport { model, fit, passed })
}

fn cmd_exponent(args: &CommonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = args.load(true)?;
    let report = exponent_report(&config)?;
    write_report(args.out_dir(&config), &report)?;
    let f = &report.fit;
    if args.json {
        emit(out, serde_json::to_string_pretty(&report).expect("report serializes"))?;
    } else {
        emit(
            out,
            format!(
                "alpha = {:.4} (|b0|^2 exponent {:.4}), rms residual {:.2e}, {} points, s_c = {}",
                f.alpha, f.photon_exponent, f.residual, f.points, f.critical_scale
            ),
        )?;
    }
    match (report.passed, &config.exponent.as_ref().and_then(|e| e.expect.clone())) {
        (Some(false), Some(x)) => Err(CliError::Check(format!(
            "alpha {:.4} outside {} ± {}",
            f.alpha, x.alpha, x.tolerance
        ))),
        _ => Ok(()),
    }
}
