//! Run configuration: one document shared by every subcommand.
//!
//! JSON is the canonical format; files ending in `.toml` are read as TOML.
//! Each subcommand reads only the sections it needs, so a verify-only
//! config may omit the model entirely.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use superradiance::models::{Family, ModelSpec};
use superradiance::Beta;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}: {location}field `{field}`: {message}")]
    Parse { origin: String, location: String, field: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec<f64>>,
    /// Inverse temperature; `"inf"` selects the ground-state path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Beta<f64>>,
    /// Alternative to `beta`; `0` selects the ground-state path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ed: Option<EdOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<ExponentSpec>,
    /// Seed for the random-draw suites.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    Omega,
    /// Shared coupling of single-g families; an overall coupling scale for
    /// the anisotropic and inhomogeneous families.
    G,
    /// gᵢ → √λ gᵢ, Ωᵢ → λ Ωᵢ applied to the template.
    Lambda,
    Temperature,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Grid values are absolute, or in units of the template's analytic critical
/// value (ω_c for ω sweeps, g_c or the critical coupling scale for g sweeps).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    #[default]
    Absolute,
    Critical,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let t = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => (self.min.ln() + (self.max.ln() - self.min.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    Ed,
    Classical,
    Analytic,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultKind {
    /// The point returns an error.
    Error,
    /// The point panics mid-computation.
    Panic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fault {
    /// Row index in output order.
    pub index: usize,
    pub kind: FaultKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub parameter: Parameter,
    pub grid: Grid,
    #[serde(default)]
    pub units: Units,
    /// Repeats the sweep once per λ with the template rescaled, one line per
    /// value.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub lines: Vec<f64>,
    #[serde(default = "all_pipelines")]
    pub pipelines: Vec<Pipeline>,
    /// Test hook: deliberately failing points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<Fault>,
}

fn all_pipelines() -> Vec<Pipeline> {
    vec![Pipeline::All]
}

impl SweepSpec {
    pub fn runs(&self, p: Pipeline) -> bool {
        self.pipelines.contains(&Pipeline::All) || self.pipelines.contains(&p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdOptions {
    /// Fixed Fock cutoff; adaptive when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fock_cutoff: Option<usize>,
    /// Population allowed in the top two Fock levels.
    pub tail_tol: f64,
    pub start_cutoff: usize,
    pub max_cutoff: usize,
    pub tol: f64,
}

impl Default for EdOptions {
    fn default() -> Self {
        EdOptions { fock_cutoff: None, tail_tol: 1e-8, start_cutoff: 8, max_cutoff: 512, tol: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchwingerSuite {
    pub families: Vec<Family>,
    pub atoms: Vec<usize>,
    pub betas: Vec<f64>,
    pub fock_cutoff: usize,
    /// Random parameter draws per (family, N).
    pub draws: usize,
    pub rel_tol: f64,
    pub imag_tol: f64,
    /// Test hook: overrides the per-fermion phase angle (correct: −π/2).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase_per_fermion: Option<f64>,
}

impl Default for SchwingerSuite {
    fn default() -> Self {
        SchwingerSuite {
            families: Family::ALL.to_vec(),
            atoms: vec![1, 2],
            betas: vec![0.1, 1.0, 10.0],
            fock_cutoff: 30,
            draws: 1,
            rel_tol: 1e-9,
            imag_tol: 1e-10,
            phase_per_fermion: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChiSuite {
    pub points: usize,
    pub rel_tol: f64,
    pub max_index: i64,
}

impl Default for ChiSuite {
    fn default() -> Self {
        ChiSuite { points: 100, rel_tol: 1e-8, max_index: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundSuite {
    pub orders: Vec<usize>,
    pub samples: usize,
    pub index_range: i64,
    /// Model the tuples are drawn for; JC with N = 2 by default.
    pub model: ModelSpec<f64>,
    pub beta: f64,
}

impl Default for BoundSuite {
    fn default() -> Self {
        BoundSuite {
            orders: vec![2, 3],
            samples: 10_000,
            index_range: 12,
            model: ModelSpec::jaynes_cummings(2, 1.0, 1.3, 0.7),
            beta: 3.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schwinger: Option<SchwingerSuite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiSuite>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundSuite>,
}

impl VerifySpec {
    /// The suites to run: all three at defaults when none is named.
    pub fn resolved(&self) -> (Option<SchwingerSuite>, Option<ChiSuite>, Option<BoundSuite>) {
        if self.schwinger.is_none() && self.chi.is_none() && self.bounds.is_none() {
            (Some(Default::default()), Some(Default::default()), Some(Default::default()))
        } else {
            (self.schwinger.clone(), self.chi.clone(), self.bounds.clone())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectation {
    pub alpha: f64,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentSpec {
    /// Relative distance (s − s_c)/s_c from the boundary.
    #[serde(default = "default_window")]
    pub window: (f64, f64),
    #[serde(default = "default_points")]
    pub points: usize,
    /// Turns the fit into a check: exit status 1 when α misses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expectation>,
}

fn default_window() -> (f64, f64) {
    (1e-4, 1e-2)
}

fn default_points() -> usize {
    21
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Toml,
}

impl Format {
    pub fn of(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("toml") => Format::Toml,
            _ => Format::Json,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Toml => "toml",
        })
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Config::parse(&text, Format::of(path), &path.display().to_string())
    }

    /// Parses and validates; `origin` names the source in diagnostics.
    pub fn parse(text: &str, format: Format, origin: &str) -> Result<Config, ConfigError> {
        let config: Config = match format {
            Format::Json => {
                let mut de = serde_json::Deserializer::from_str(text);
                serde_path_to_error::deserialize(&mut de).map_err(|e| {
                    let inner = e.inner();
                    ConfigError::Parse {
                        origin: origin.to_string(),
                        location: format!("line {} column {}: ", inner.line(), inner.column()),
                        field: e.path().to_string(),
                        message: strip_position(&inner.to_string()),
                    }
                })?
            }
            Format::Toml => {
                let de = toml::Deserializer::parse(text).map_err(|e| toml_error(origin, text, &e, "."))?;
                serde_path_to_error::deserialize(de)
                    .map_err(|e| toml_error(origin, text, e.inner(), &e.path().to_string()))?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Thermal state: `beta` or `temperature`, ground state when neither is set.
    pub fn beta(&self) -> Beta<f64> {
        match (self.beta, self.temperature) {
            (Some(b), _) => b,
            (None, Some(t)) => Beta::from_temperature(t),
            (None, None) => Beta::Infinite,
        }
    }

    pub fn model(&self) -> Result<&ModelSpec<f64>, ConfigError> {
        self.model.as_ref().ok_or_else(|| invalid("this command needs a `model` section"))
    }

    pub fn ed_options(&self) -> EdOptions {
        self.ed.clone().unwrap_or_default()
    }

    /// Git-style content hash of everything that determines the results:
    /// sha256 over `blob <len>\0<canonical json>`, with the output directory
    /// left out.
    pub fn content_hash(&self) -> String {
        let canonical = Config { output: None, ..self.clone() };
        let body = serde_json::to_string(&canonical).expect("config serializes");
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        hex(&h.finalize())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.beta.is_some() && self.temperature.is_some() {
            return Err(invalid("give either `beta` or `temperature`, not both"));
        }
        if let Some(b) = self.beta {
            if !b.is_valid() {
                return Err(invalid("`beta` must be positive or \"inf\""));
            }
        }
        if let Some(t) = self.temperature {
            if !(t.is_finite() && t >= 0.0) {
                return Err(invalid("`temperature` must be finite and non-negative"));
            }
        }
        if let Some(m) = &self.model {
            m.validate().map_err(|e| invalid(format!("model: {e}")))?;
        }
        if let Some(s) = &self.sweep {
            self.validate_sweep(s)?;
        }
        if let Some(ed) = &self.ed {
            if !(ed.tail_tol > 0.0 && ed.tail_tol < 1.0) {
                return Err(invalid("ed.tail_tol must lie in (0, 1)"));
            }
            if ed.fock_cutoff == Some(0) || ed.max_cutoff < 2 || !(ed.tol > 0.0) {
                return Err(invalid("ed: cutoffs must be at least 1 (max_cutoff ≥ 2) and tol positive"));
            }
        }
        if let Some(x) = &self.exponent {
            if x.points < 2 {
                return Err(invalid("exponent.points must be at least 2"));
            }
        }
        if let Some(v) = &self.verify {
            if let Some(s) = &v.schwinger {
                if s.atoms.iter().any(|&n| n == 0 || n > 2) {
                    return Err(invalid("verify.schwinger.atoms must be 1 or 2"));
                }
                if s.betas.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
                    return Err(invalid("verify.schwinger.betas must be finite and positive"));
                }
            }
            if let Some(b) = &v.bounds {
                if b.orders.iter().any(|&m| m < 2) || !(b.beta.is_finite() && b.beta > 0.0) {
                    return Err(invalid("verify.bounds: orders must be ≥ 2 and beta positive"));
                }
                b.model.validate().map_err(|e| invalid(format!("verify.bounds.model: {e}")))?;
            }
        }
        Ok(())
    }

    fn validate_sweep(&self, s: &SweepSpec) -> Result<(), ConfigError> {
        let g = &s.grid;
        if g.count < 2 {
            return Err(invalid("sweep.grid.count must be at least 2"));
        }
        if !(g.min.is_finite() && g.max.is_finite()) || g.max <= g.min {
            return Err(invalid("sweep.grid needs finite min < max"));
        }
        if g.spacing == Spacing::Log && g.min <= 0.0 {
            return Err(invalid("a log grid needs min > 0"));
        }
        if s.pipelines.is_empty() {
            return Err(invalid("sweep.pipelines is empty"));
        }
        if s.lines.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(invalid("sweep.lines must be positive λ values"));
        }
        let positive_only = matches!(s.parameter, Parameter::Omega | Parameter::Lambda);
        if positive_only && g.min <= 0.0 {
            return Err(invalid(format!("sweep over {:?} needs min > 0", s.parameter)));
        }
        if s.parameter == Parameter::Temperature && g.min < 0.0 {
            return Err(invalid("temperatures must be non-negative"));
        }
        if s.units == Units::Critical && !matches!(s.parameter, Parameter::Omega | Parameter::G) {
            return Err(invalid("critical units apply to omega and g sweeps only"));
        }
        if s.parameter == Parameter::Temperature && (self.beta.is_some() || self.temperature.is_some()) {
            return Err(invalid("a temperature sweep sets the temperature; drop `beta`/`temperature`"));
        }
        if s.parameter == Parameter::Lambda && !s.lines.is_empty() {
            return Err(invalid("`lines` already rescale λ; sweep another parameter"));
        }
        let points = g.count * s.lines.len().max(1);
        if let Some(f) = s.faults.iter().find(|f| f.index >= points) {
            return Err(invalid(format!("fault index {} is outside the {points} points", f.index)));
        }
        Ok(())
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

// serde_json appends " at line L column C"; the location is reported separately.
fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn toml_error(origin: &str, text: &str, e: &toml::de::Error, path: &str) -> ConfigError {
    let location = e
        .span()
        .map(|span| {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line} column {column}: ")
        })
        .unwrap_or_default();
    ConfigError::Parse {
        origin: origin.to_string(),
        location,
        field: path.to_string(),
        message: e.message().to_string(),
    }
}
