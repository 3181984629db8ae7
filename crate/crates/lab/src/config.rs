//! Experiment configuration: TOML sections with dotted-path addressing for
//! sweeps. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lg4nmr_core::constants::TAU;
use lg4nmr_core::sensor::{optimal_t1, SensorSequence};
use lg4nmr_core::sequence::lg_condition;

use crate::error::{FieldError, LabError, Result};
use crate::molecule::{load_geometry, Geometry};

/// Desk-scale evolution time, seconds.
pub const DESK_DURATION: f64 = 0.05;
/// Evolution time restored by `--full`, seconds.
pub const FULL_DURATION: f64 = 0.5;
/// Fewest blocks that still make a spectrum.
pub const MIN_BLOCKS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub sample: SampleConfig,
    pub rf: RfConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub sensor: SensorConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub run: RunConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Geometry file, `x y z ppm` per line in ångström.
    pub geometry: PathBuf,
    #[serde(default = "default_b0")]
    pub b0_t: f64,
    #[serde(default = "default_temperature")]
    pub temperature_k: f64,
    #[serde(default = "default_density")]
    pub spin_density_m3: f64,
    #[serde(default = "default_geometric_factor")]
    pub geometric_factor: f64,
    #[serde(default = "default_t2_star")]
    pub t2_star_s: f64,
    #[serde(default = "yes")]
    pub dipolar: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfConfig {
    pub rabi_hz: f64,
    #[serde(default = "default_alpha")]
    pub alpha_deg: f64,
    /// Evolution time; the block count is `round(duration / 4T)`.
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Explicit block count, overriding `duration_s`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_blocks: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_tau")]
    pub tau_s: f64,
    #[serde(default = "default_rel_amplitude")]
    pub rel_amplitude: f64,
    /// Noise seed; `run.seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { enabled: true, tau_s: default_tau(), rel_amplitude: default_rel_amplitude(), seed: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T1Mode {
    Explicit(f64),
    Named(T1Name),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum T1Name {
    Optimal,
    Cpmg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorConfig {
    #[serde(default = "default_mw_rabi")]
    pub mw_rabi_hz: f64,
    /// `"optimal"`, `"cpmg"`, or the first pulse time in seconds.
    #[serde(default = "default_t1")]
    pub t1: T1Mode,
    /// Peak of the RF crosstalk on the sensor, rad/s. The waveform follows
    /// the RF amplitude envelope, noise included.
    #[serde(default)]
    pub crosstalk_rad_s: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig { mw_rabi_hz: default_mw_rabi(), t1: default_t1(), crosstalk_rad_s: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    None,
    Hann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_window")]
    pub window: Window,
    /// Minimum peak prominence as a fraction of the largest amplitude.
    #[serde(default = "default_prominence")]
    pub prominence: f64,
    #[serde(default = "yes")]
    pub svg: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig { window: default_window(), prominence: default_prominence(), svg: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Quantum,
    Oracle,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    /// Integrator steps per RF segment.
    #[serde(default = "default_steps")]
    pub steps_per_segment: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    /// Also write the full-rate signal trace (one line per integrator step).
    #[serde(default = "yes")]
    pub write_trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            steps_per_segment: default_steps(),
            output_dir: default_output(),
            engine: default_engine(),
            write_trace: true,
        }
    }
}

fn yes() -> bool {
    true
}
fn default_b0() -> f64 {
    2.1
}
fn default_temperature() -> f64 {
    300.0
}
fn default_density() -> f64 {
    5.2e28
}
fn default_geometric_factor() -> f64 {
    4.1
}
fn default_t2_star() -> f64 {
    0.2
}
fn default_alpha() -> f64 {
    55.0
}
fn default_duration() -> f64 {
    DESK_DURATION
}
fn default_tau() -> f64 {
    1e-3
}
fn default_rel_amplitude() -> f64 {
    0.0024
}
fn default_mw_rabi() -> f64 {
    20e6
}
fn default_t1() -> T1Mode {
    T1Mode::Named(T1Name::Optimal)
}
fn default_window() -> Window {
    Window::Hann
}
fn default_prominence() -> f64 {
    0.1
}
fn default_steps() -> usize {
    64
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn default_engine() -> Engine {
    Engine::Quantum
}

/// Quantities derived from a config that every stage needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derived {
    /// Angular RF Rabi frequency.
    pub rabi: f64,
    pub alpha: f64,
    pub effective_rabi: f64,
    /// Segment length T.
    pub segment: f64,
    pub n_blocks: usize,
    pub noise_seed: u64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| parse_error(&e))?;
        Self::from_table(table, base_dir)
    }

    pub fn from_table(table: toml::Table, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = table.try_into().map_err(|e: toml::de::Error| parse_error(&e))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(format!("reading {}", path.display()), e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config always serializes")
    }

    /// Returns a copy with the dotted `path` set to `value`.
    pub fn with_override(&self, path: &str, value: toml::Value) -> Result<Self> {
        let mut table = self.to_table();
        set_path(&mut table, path, value)?;
        Self::from_table(table, &self.base_dir)
    }

    /// Switches to the full 0.5 s evolution time.
    pub fn full_scale(mut self) -> Self {
        self.rf.duration_s = FULL_DURATION;
        self.rf.n_blocks = None;
        self
    }

    pub fn geometry_path(&self) -> PathBuf {
        self.base_dir.join(&self.sample.geometry)
    }

    /// Output directory, relative to the working directory.
    pub fn output_dir(&self) -> PathBuf {
        self.run.output_dir.clone()
    }

    /// Requires a validated config.
    pub fn derived(&self) -> Derived {
        let rabi = TAU * self.rf.rabi_hz;
        let detuning = lg_condition(rabi, 1.0).unwrap_or(0.0);
        let effective_rabi = rabi.hypot(detuning);
        let segment = TAU / effective_rabi;
        let n_blocks = self.rf.n_blocks.unwrap_or_else(|| (self.rf.duration_s / (4.0 * segment)).round() as usize);
        Derived {
            rabi,
            alpha: self.rf.alpha_deg.to_radians(),
            effective_rabi,
            segment,
            n_blocks,
            noise_seed: self.noise.seed.unwrap_or(self.run.seed),
        }
    }

    /// First π-pulse time in the A segment.
    pub fn t1(&self, d: &Derived) -> Result<f64> {
        Ok(match self.sensor.t1 {
            T1Mode::Explicit(t) => t,
            T1Mode::Named(T1Name::Cpmg) => d.segment / 4.0,
            T1Mode::Named(T1Name::Optimal) => optimal_t1(d.alpha, d.effective_rabi)?,
        })
    }
}

fn parse_error(e: &toml::de::Error) -> LabError {
    LabError::Config(vec![FieldError::new("<file>", e.message().trim().to_string() + &span_hint(e))])
}

fn span_hint(e: &toml::de::Error) -> String {
    e.span().map(|s| format!(" (at byte {})", s.start)).unwrap_or_default()
}

fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let bad = |msg: &str| LabError::Config(vec![FieldError::new(path, msg)]);
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| bad("empty parameter path"))?;
    let mut cursor = table;
    for part in parts {
        cursor = match cursor.get_mut(part) {
            Some(toml::Value::Table(t)) => t,
            Some(_) => return Err(bad("path goes through a value, not a section")),
            None => return Err(bad("no such section")),
        };
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// Parses a CLI sweep value as a TOML literal, falling back to a string.
pub fn parse_value(text: &str) -> toml::Value {
    let wrapped = format!("v = {text}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(text.into())),
        Err(_) => toml::Value::String(text.trim().into()),
    }
}

/// Checks every field and collects all problems. On success returns the
/// parsed geometry so callers do not read it twice.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<Geometry> {
    let mut errors = Vec::new();
    let mut positive = |path: &str, v: f64| {
        if !(v > 0.0 && v.is_finite()) {
            errors.push(FieldError::new(path, format!("must be positive and finite, got {v}")));
        }
    };
    positive("sample.b0_t", cfg.sample.b0_t);
    positive("sample.temperature_k", cfg.sample.temperature_k);
    positive("sample.spin_density_m3", cfg.sample.spin_density_m3);
    positive("sample.geometric_factor", cfg.sample.geometric_factor);
    positive("sample.t2_star_s", cfg.sample.t2_star_s);
    positive("rf.rabi_hz", cfg.rf.rabi_hz);
    positive("rf.duration_s", cfg.rf.duration_s);
    positive("noise.tau_s", cfg.noise.tau_s);
    positive("sensor.mw_rabi_hz", cfg.sensor.mw_rabi_hz);
    if !(cfg.rf.alpha_deg.is_finite() && cfg.rf.alpha_deg.abs() < 90.0) {
        errors.push(FieldError::new("rf.alpha_deg", format!("must lie in (-90, 90), got {}", cfg.rf.alpha_deg)));
    } else if cfg.rf.alpha_deg.to_radians().sin().abs() <= 1e-9 {
        errors.push(FieldError::new("rf.alpha_deg", "must be nonzero; A and B coincide at 0"));
    }
    if !(cfg.noise.rel_amplitude >= 0.0 && cfg.noise.rel_amplitude.is_finite()) {
        errors.push(FieldError::new("noise.rel_amplitude", "must be non-negative and finite"));
    }
    if !cfg.sensor.crosstalk_rad_s.is_finite() {
        errors.push(FieldError::new("sensor.crosstalk_rad_s", "must be finite"));
    }
    if !(0.0..1.0).contains(&cfg.analysis.prominence) {
        errors.push(FieldError::new(
            "analysis.prominence",
            format!("must lie in [0, 1), got {}", cfg.analysis.prominence),
        ));
    }
    if cfg.run.steps_per_segment < lg4nmr_core::dynamics::MIN_STEPS_PER_SEGMENT {
        errors.push(FieldError::new(
            "run.steps_per_segment",
            format!("must be at least {}", lg4nmr_core::dynamics::MIN_STEPS_PER_SEGMENT),
        ));
    }

    if errors.iter().all(|e| !e.path.starts_with("rf.")) {
        let d = cfg.derived();
        if d.n_blocks < MIN_BLOCKS {
            let path = if cfg.rf.n_blocks.is_some() { "rf.n_blocks" } else { "rf.duration_s" };
            errors
                .push(FieldError::new(path, format!("gives {} blocks; at least {MIN_BLOCKS} are needed", d.n_blocks)));
        }
        if errors.iter().all(|e| !e.path.starts_with("sensor.")) {
            match cfg.t1(&d) {
                Ok(t1) if !(0.0..d.segment / 2.0).contains(&t1) => errors.push(FieldError::new(
                    "sensor.t1",
                    format!("{t1:e} s is outside [0, T/2) with T = {:e} s", d.segment),
                )),
                Ok(t1) => {
                    if let Err(e) = SensorSequence::new(d.segment, t1, TAU * cfg.sensor.mw_rabi_hz) {
                        errors.push(FieldError::new("sensor", e.to_string()));
                    }
                }
                Err(e) => errors.push(FieldError::new("sensor.t1", e.to_string())),
            }
        }
    }

    let geometry = match load_geometry(&cfg.geometry_path()) {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(FieldError::new("sample.geometry", e.to_string()));
            None
        }
    };
    match geometry {
        Some(g) if errors.is_empty() => Ok(g),
        _ => Err(LabError::Config(errors)),
    }
}
