//! Parameter sweeps: grid expansion, per-point pipelines and artifacts.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use superradiance::boundary::{critical_coupling_scale, critical_g, critical_omega, CriticalCoupling};
use superradiance::eigensolve::{adaptive_cutoff, model_observables, CutoffError, CutoffOptions};
use superradiance::landau::minimize_free_energy;
use superradiance::models::{Family, ModelSpec};
use superradiance::Beta;

use crate::config::{sha256_hex, Config, ConfigError, EdOptions, FaultKind, Parameter, Pipeline, SweepSpec, Units};
use crate::CliError;

/// One grid point, fully resolved.
#[derive(Clone, Debug)]
pub struct Point {
    pub index: usize,
    pub line: Option<f64>,
    /// Grid value as configured (critical units stay relative).
    pub value: f64,
    pub spec: ModelSpec<f64>,
    pub beta: Beta<f64>,
}

fn single_coupling(family: Family) -> bool {
    matches!(family, Family::JaynesCummings | Family::Dicke | Family::NonlinearKappa)
}

/// Critical value of the swept parameter for a template, where one exists.
fn critical_value(sweep: &SweepSpec, spec: &ModelSpec<f64>, beta: Beta<f64>) -> Result<Option<f64>, String> {
    let coupling = |c: CriticalCoupling<f64>| c.value().ok_or("superradiant at every coupling".to_string());
    match sweep.parameter {
        Parameter::Omega => {
            critical_omega(spec, beta).map(|r| Some(r.critical_omega)).map_err(|e| e.to_string())
        }
        Parameter::G if single_coupling(spec.family) => {
            coupling(critical_g(spec, beta, spec.omega).map_err(|e| e.to_string())?).map(Some)
        }
        Parameter::G => coupling(critical_coupling_scale(spec, beta).map_err(|e| e.to_string())?).map(Some),
        _ => Ok(None),
    }
}

fn apply(param: Parameter, spec: &ModelSpec<f64>, beta: Beta<f64>, v: f64) -> (ModelSpec<f64>, Beta<f64>) {
    match param {
        Parameter::Omega => (spec.with_omega(v), beta),
        Parameter::G if single_coupling(spec.family) => (spec.with_g(v), beta),
        Parameter::G => (spec.with_coupling_scale(v), beta),
        Parameter::Lambda => (spec.lambda_scaled(v), beta),
        Parameter::Temperature => (spec.clone(), Beta::from_temperature(v)),
    }
}

fn templates(config: &Config, sweep: &SweepSpec) -> Result<Vec<(Option<f64>, ModelSpec<f64>)>, ConfigError> {
    let model = config.model()?;
    Ok(if sweep.lines.is_empty() {
        vec![(None, model.clone())]
    } else {
        sweep.lines.iter().map(|&l| (Some(l), model.lambda_scaled(l))).collect()
    })
}

/// Expands the sweep into points ordered by line, then swept value.
pub fn expand(config: &Config) -> Result<Vec<Point>, ConfigError> {
    let sweep = sweep_spec(config)?;
    let beta = config.beta();
    let grid = sweep.grid.values();
    let mut points = Vec::new();
    for (line, template) in templates(config, sweep)? {
        let scale = match sweep.units {
            Units::Absolute => 1.0,
            Units::Critical => critical_value(sweep, &template, beta)
                .map_err(|e| ConfigError::Invalid(format!("critical units: {e}")))?
                .filter(|c| *c > 0.0)
                .ok_or_else(|| ConfigError::Invalid("critical units need a positive critical value".into()))?,
        };
        for &value in &grid {
            let (spec, b) = apply(sweep.parameter, &template, beta, value * scale);
            points.push(Point { index: points.len(), line, value, spec, beta: b });
        }
    }
    Ok(points)
}

fn sweep_spec(config: &Config) -> Result<&SweepSpec, ConfigError> {
    config.sweep.as_ref().ok_or_else(|| ConfigError::Invalid("sweep needs a `sweep` section".into()))
}

/// One CSV row. Missing values (pipeline not run or failed) are empty cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRecord {
    pub index: usize,
    pub line_lambda: Option<f64>,
    pub parameter: Parameter,
    pub value: f64,
    pub omega: f64,
    pub beta: String,
    pub status: String,
    pub photon_number: Option<f64>,
    pub photon_fluct: Option<f64>,
    pub collective_sz: Option<f64>,
    pub parity: Option<f64>,
    pub ground_energy: Option<f64>,
    pub gap: Option<f64>,
    pub degeneracy: Option<usize>,
    pub fock_cutoff: Option<usize>,
    pub classical_b0_sq: Option<f64>,
    pub classical_phase: Option<f64>,
    pub condensation_energy: Option<f64>,
    pub omega_c: Option<f64>,
    pub critical_g: Option<f64>,
    pub classicality: Option<f64>,
    pub config_hash: String,
}

impl SweepRecord {
    fn empty(p: &Point, parameter: Parameter, hash: &str) -> Self {
        SweepRecord {
            index: p.index,
            line_lambda: p.line,
            parameter,
            value: p.value,
            omega: p.spec.omega,
            beta: p.beta.to_string(),
            status: String::new(),
            photon_number: None,
            photon_fluct: None,
            collective_sz: None,
            parity: None,
            ground_energy: None,
            gap: None,
            degeneracy: None,
            fock_cutoff: None,
            classical_b0_sq: None,
            classical_phase: None,
            condensation_energy: None,
            omega_c: None,
            critical_g: None,
            classicality: None,
            config_hash: hash.to_string(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PointTiming {
    pub index: usize,
    pub ed_s: Option<f64>,
    pub classical_s: Option<f64>,
    pub analytic_s: Option<f64>,
}

fn timed<R>(slot: &mut Option<f64>, f: impl FnOnce() -> R) -> R {
    let t = Instant::now();
    let r = f();
    *slot = Some(t.elapsed().as_secs_f64());
    r
}

fn run_ed(p: &Point, opts: &EdOptions, rec: &mut SweepRecord) -> Result<Option<String>, String> {
    let mut note = None;
    let cutoff = match opts.fock_cutoff {
        Some(n) => n,
        None => {
            let co = CutoffOptions { start: opts.start_cutoff, hard_cap: opts.max_cutoff };
            match adaptive_cutoff(&p.spec, p.beta, opts.tail_tol, co) {
                Ok(r) => r.fock_cutoff,
                // beyond the supported range: report at the cap and flag the row
                Err(CutoffError::Divergent { cap, .. }) => {
                    note = Some("cutoff_capped".to_string());
                    cap
                }
                Err(e) => return Err(e.to_string()),
            }
        }
    };
    let (obs, gm) = model_observables(&p.spec, p.beta, cutoff, opts.tol).map_err(|e| e.to_string())?;
    rec.photon_number = Some(obs.photon_number);
    rec.photon_fluct = Some(obs.photon_fluct);
    rec.collective_sz = Some(obs.collective_sz);
    rec.parity = Some(obs.parity);
    rec.fock_cutoff = Some(cutoff);
    if let Some(gm) = gm {
        rec.ground_energy = Some(gm.energy);
        rec.gap = gm.gap.is_finite().then_some(gm.gap);
        rec.degeneracy = Some(gm.states.len());
    }
    Ok(note)
}

fn run_classical(p: &Point, rec: &mut SweepRecord) -> Result<(), String> {
    let m = minimize_free_energy(&p.spec, p.beta).map_err(|e| e.to_string())?;
    rec.classical_b0_sq = Some(m.field.x());
    rec.classical_phase = Some(m.field.phase);
    rec.condensation_energy = Some(m.condensation_energy);
    Ok(())
}

fn run_analytic(p: &Point, rec: &mut SweepRecord) -> Result<(), String> {
    let r = critical_omega(&p.spec, p.beta).map_err(|e| e.to_string())?;
    rec.omega_c = Some(r.critical_omega);
    rec.critical_g = r.critical_g.and_then(|g| g.value());
    rec.classicality = Some(r.classicality);
    Ok(())
}

fn compute(
    p: &Point,
    sweep: &SweepSpec,
    ed: &EdOptions,
    hash: &str,
) -> (SweepRecord, PointTiming) {
    let mut rec = SweepRecord::empty(p, sweep.parameter, hash);
    let mut timing = PointTiming { index: p.index, ..Default::default() };
    let mut problems = Vec::new();
    let mut notes = Vec::new();
    match sweep.faults.iter().find(|f| f.index == p.index).map(|f| f.kind) {
        Some(FaultKind::Error) => problems.push("injected: fault".to_string()),
        Some(FaultKind::Panic) => panic!("injected fault at point {}", p.index),
        None => {}
    }
    if problems.is_empty() {
        if sweep.runs(Pipeline::Ed) {
            match timed(&mut timing.ed_s, || run_ed(p, ed, &mut rec)) {
                Ok(note) => notes.extend(note),
                Err(e) => problems.push(format!("ed: {e}")),
            }
        }
        if sweep.runs(Pipeline::Classical) {
            if let Err(e) = timed(&mut timing.classical_s, || run_classical(p, &mut rec)) {
                problems.push(format!("classical: {e}"));
            }
        }
        if sweep.runs(Pipeline::Analytic) {
            if let Err(e) = timed(&mut timing.analytic_s, || run_analytic(p, &mut rec)) {
                problems.push(format!("analytic: {e}"));
            }
        }
    }
    rec.status = if !problems.is_empty() {
        format!("error: {}", problems.join("; "))
    } else if !notes.is_empty() {
        notes.join("; ")
    } else {
        "ok".to_string()
    };
    (rec, timing)
}

fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string())
}

/// A point that never aborts the sweep: errors and panics become status rows.
pub fn evaluate(p: &Point, sweep: &SweepSpec, ed: &EdOptions, hash: &str) -> (SweepRecord, PointTiming) {
    panic::catch_unwind(AssertUnwindSafe(|| compute(p, sweep, ed, hash))).unwrap_or_else(|payload| {
        let mut rec = SweepRecord::empty(p, sweep.parameter, hash);
        rec.status = format!("panic: {}", panic_message(payload.as_ref()));
        (rec, PointTiming { index: p.index, ..Default::default() })
    })
}

pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub timings: Vec<PointTiming>,
    pub wall_time_s: f64,
    pub threads: usize,
}

/// Runs every point on a pool of `threads` workers (rayon's default when
/// `None`); the output order is the grid order regardless of scheduling.
pub fn run_sweep(config: &Config, threads: Option<usize>) -> Result<SweepOutcome, CliError> {
    let points = expand(config)?;
    let sweep = sweep_spec(config)?;
    let ed = config.ed_options();
    let hash = config.content_hash();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let start = Instant::now();
    let (records, timings): (Vec<_>, Vec<_>) =
        pool.install(|| points.par_iter().map(|p| evaluate(p, sweep, &ed, &hash)).collect::<Vec<_>>()).into_iter().unzip();
    Ok(SweepOutcome { records, timings, wall_time_s: start.elapsed().as_secs_f64(), threads: pool.current_num_threads() })
}

pub fn records_to_csv(records: &[SweepRecord]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(format!("csv: {e}")))
}

/// Photon-number drop across an ω sweep in units of ω_c.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub below: f64,
    pub above: f64,
    /// n(0.8 ω_c) / n(1.2 ω_c); infinite when the upper value is exactly 0.
    pub ratio: f64,
    /// ω span (in ω_c) over which n falls from 80% to 20% of n(0.8 ω_c).
    pub width: Option<f64>,
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    let k = xs.windows(2).position(|w| w[0] <= x && x <= w[1])?;
    let (x0, x1, y0, y1) = (xs[k], xs[k + 1], ys[k], ys[k + 1]);
    Some(if x1 == x0 { y0 } else { y0 + (y1 - y0) * (x - x0) / (x1 - x0) })
}

// First downward crossing of `level` along the polyline.
fn crossing(path: &[(f64, f64)], level: f64) -> Option<f64> {
    path.windows(2).find_map(|w| {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        (y0 > level && y1 <= level).then(|| x0 + (x1 - x0) * (y0 - level) / (y0 - y1))
    })
}

/// Measures the transition on ascending `x = ω/ω_c` with photon numbers `n`.
pub fn transition(x: &[f64], n: &[f64]) -> Option<Transition> {
    let below = interp(x, n, 0.8)?;
    let above = interp(x, n, 1.2)?;
    let ratio = if above == 0.0 { f64::INFINITY } else { below / above };
    let mut path = vec![(0.8, below)];
    path.extend(x.iter().zip(n).filter(|(xi, _)| **xi > 0.8).map(|(a, b)| (*a, *b)));
    let width = (below > 0.0)
        .then(|| Some(crossing(&path, 0.2 * below)? - crossing(&path, 0.8 * below)?))
        .flatten();
    Some(Transition { below, above, ratio, width })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineReport {
    pub line_lambda: Option<f64>,
    pub points: usize,
    pub failed: usize,
    /// Analytic critical value on the swept axis (ω_c or g_c).
    pub analytic_critical: Option<f64>,
    /// Grid interval where the classical amplitude switches on or off.
    pub classical_onset: Option<(f64, f64)>,
    pub classical_matches_analytic: Option<bool>,
    /// For ω sweeps: the ED photon-number drop around ω_c.
    pub ed_transition: Option<Transition>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepReport {
    pub config_hash: String,
    pub points: usize,
    pub failed: usize,
    pub lines: Vec<LineReport>,
}

/// Per-line summary; swept values are converted to absolute units.
pub fn summarize(config: &Config, records: &[SweepRecord]) -> Result<SweepReport, CliError> {
    let sweep = sweep_spec(config)?;
    let beta = config.beta();
    let mut lines = Vec::new();
    for (line, template) in templates(config, sweep)? {
        let rows: Vec<&SweepRecord> = records.iter().filter(|r| r.line_lambda == line).collect();
        let critical = critical_value(sweep, &template, beta).ok().flatten();
        let scale = match sweep.units {
            Units::Critical => critical.unwrap_or(f64::NAN),
            Units::Absolute => 1.0,
        };
        let onset = classical_onset(&rows, scale);
        let matches = match (onset, critical) {
            (Some((a, b)), Some(c)) => Some(a.min(b) <= c && c <= a.max(b)),
            _ => None,
        };
        let ed_transition = match (sweep.parameter, critical) {
            (Parameter::Omega, Some(wc)) if wc > 0.0 => {
                let pts: Vec<(f64, f64)> = rows
                    .iter()
                    .filter_map(|r| Some((r.omega / wc, r.photon_number?)))
                    .collect();
                let (x, n): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                transition(&x, &n)
            }
            _ => None,
        };
        lines.push(LineReport {
            line_lambda: line,
            points: rows.len(),
            failed: rows.iter().filter(|r| r.status.starts_with("error") || r.status.starts_with("panic")).count(),
            analytic_critical: critical,
            classical_onset: onset,
            classical_matches_analytic: matches,
            ed_transition,
        });
    }
    Ok(SweepReport {
        config_hash: config.content_hash(),
        points: records.len(),
        failed: lines.iter().map(|l| l.failed).sum(),
        lines,
    })
}

fn classical_onset(rows: &[&SweepRecord], scale: f64) -> Option<(f64, f64)> {
    let ordered: Vec<(f64, bool)> =
        rows.iter().filter_map(|r| Some((r.value * scale, r.classical_b0_sq? > 0.0))).collect();
    ordered.windows(2).find(|w| w[0].1 != w[1].1).map(|w| (w[0].0, w[1].0))
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    versions: Versions,
    config: &'a Config,
    config_hash: String,
    results_sha256: String,
    started_unix_s: u64,
    wall_time_s: f64,
    threads: usize,
    points: usize,
    failed: usize,
    timings: &'a [PointTiming],
}

#[derive(Serialize)]
pub struct Versions {
    pub superradiance_cli: &'static str,
    pub superradiance: &'static str,
}

pub fn versions() -> Versions {
    Versions { superradiance_cli: env!("CARGO_PKG_VERSION"), superradiance: superradiance::VERSION }
}

/// Writes results.csv, manifest.json and report.json into `dir`.
pub fn write_artifacts(dir: &Path, config: &Config, outcome: &SweepOutcome) -> Result<SweepReport, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv = records_to_csv(&outcome.records)?;
    let report = summarize(config, &outcome.records)?;
    let started = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().saturating_sub(outcome.wall_time_s as u64))
        .unwrap_or(0);
    let manifest = Manifest {
        tool: "superradiance-cli",
        versions: versions(),
        config,
        config_hash: config.content_hash(),
        results_sha256: sha256_hex(&csv),
        started_unix_s: started,
        wall_time_s: outcome.wall_time_s,
        threads: outcome.threads,
        points: outcome.records.len(),
        failed: report.failed,
        timings: &outcome.timings,
    };
    crate::write_file(&dir.join("results.csv"), &csv)?;
    crate::write_json(&dir.join("manifest.json"), &manifest)?;
    crate::write_json(&dir.join("report.json"), &report)?;
    Ok(report)
}
