//! Full experiment pipeline: sample → LG4 + master equation → NV readout →
//! spectrum → files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use lg4nmr_core::algebra::build_spin_operators;
use lg4nmr_core::constants::TAU;
use lg4nmr_core::dynamics::{evolve_master_equation, signal_amplitude_scale, EngineSettings, SampleModel};
use lg4nmr_core::geometry::{effective_shift, oracle_full_trace, species_of};
use lg4nmr_core::noise::OuNoiseProcess;
use lg4nmr_core::sample::{thermal_state, SpinSystem};
use lg4nmr_core::sensor::{evolve_nv, MeasurementRecord, SensorSequence};
use lg4nmr_core::sequence::{build_lg4_schedule, Lg4Schedule};
use lg4nmr_core::vector::Vec3;

use crate::config::{validate_config, Derived, Engine, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::export::{self, sha256_hex, FileEntry};
use crate::molecule::Geometry;
use crate::spectrum::{find_peaks, record_spectrum, Spectrum};

/// Half-width, in bins, of the window around each expected peak that
/// counts as signal when measuring spurious spectral mass.
pub const PEAK_HALF_WIDTH_BINS: f64 = 3.0;
/// Upper edge of the plotted spectrum, Hz.
const PLOT_MAX_HZ: f64 = 400.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub status: String,
    pub config_hash: String,
    pub geometry_hash: String,
    pub seed: u64,
    pub engine: Engine,
    pub versions: Versions,
    pub n_spins: usize,
    pub n_blocks: usize,
    pub block_interval_s: f64,
    /// Expected peak positions |δ*|/2π, Hz.
    pub expected_peaks_hz: Vec<f64>,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Versions {
    pub lg4nmr_lab: String,
    pub lg4nmr_core: String,
}

/// Sensor series and spectrum from one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineOutput {
    pub records: Vec<MeasurementRecord>,
    pub spectrum: Spectrum,
    /// Fraction of spectral power outside the expected peaks.
    pub off_peak_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    /// RMS of `⟨σ_z⟩_quantum − ⟨σ_z⟩_oracle` over blocks.
    pub rms: f64,
    /// Largest `|⟨σ_z⟩_oracle|`.
    pub oracle_amplitude: f64,
    pub relative: f64,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub output_dir: PathBuf,
    pub quantum: Option<EngineOutput>,
    pub oracle: Option<EngineOutput>,
    pub residual: Option<Residual>,
}

impl RunReport {
    /// The quantum result when present, otherwise the oracle.
    pub fn primary(&self) -> &EngineOutput {
        self.quantum.as_ref().or(self.oracle.as_ref()).expect("every run has at least one engine")
    }
}

/// Everything built from a validated config before any evolution.
struct Setup {
    system: SpinSystem,
    schedule: Lg4Schedule,
    sequence: SensorSequence,
    derived: Derived,
    expected_hz: Vec<f64>,
}

fn build_setup(cfg: &ExperimentConfig, geometry: &Geometry) -> Result<Setup> {
    let mut system = SpinSystem::protons(geometry.positions.clone(), geometry.shifts_ppm.clone(), cfg.sample.b0_t)?;
    system.temperature = cfg.sample.temperature_k;
    system.spin_density = cfg.sample.spin_density_m3;
    system.geometric_factor = cfg.sample.geometric_factor;
    system.validate()?;
    let derived = cfg.derived();
    let schedule = build_lg4_schedule(derived.rabi, derived.alpha, derived.n_blocks)?;
    let sequence = SensorSequence::new(derived.segment, cfg.t1(&derived)?, TAU * cfg.sensor.mw_rabi_hz)?;
    let expected_hz = species_of(&system).iter().map(|s| effective_shift(s.shift, derived.alpha).abs() / TAU).collect();
    Ok(Setup { system, schedule, sequence, derived, expected_hz })
}

fn analyze(cfg: &ExperimentConfig, setup: &Setup, records: Vec<MeasurementRecord>) -> Result<EngineOutput> {
    let spectrum = record_spectrum(&records, setup.schedule.block_duration(), cfg.analysis.window)?;
    let peaks = find_peaks(&spectrum, cfg.analysis.prominence);
    let spectrum = spectrum.with_peaks(peaks, setup.derived.alpha);
    let off_peak_fraction = spectrum.off_peak_fraction(&setup.expected_hz, PEAK_HALF_WIDTH_BINS);
    Ok(EngineOutput { records, spectrum, off_peak_fraction })
}

/// Quantum pipeline; also returns the signal trace for export.
fn run_quantum(
    cfg: &ExperimentConfig,
    setup: &Setup,
) -> Result<(Vec<MeasurementRecord>, lg4nmr_core::dynamics::SignalTrace)> {
    let sys = &setup.system;
    let ops = build_spin_operators(sys.n_spins())?;
    let initial = setup.schedule.trigger().map(|t| t.target).unwrap_or(Vec3::Z);
    let rho0 = thermal_state(&ops, sys, initial)?;
    let model = SampleModel::from_system(&ops, sys, Vec3::Z, cfg.sample.dipolar)?
        .with_signal_scale(signal_amplitude_scale(sys));
    let noise = if cfg.noise.enabled && cfg.noise.rel_amplitude > 0.0 {
        OuNoiseProcess::new(cfg.noise.tau_s, cfg.noise.rel_amplitude, setup.derived.noise_seed)?
    } else {
        OuNoiseProcess::silent()
    };
    let settings = EngineSettings {
        t2_star: cfg.sample.t2_star_s,
        steps_per_segment: cfg.run.steps_per_segment,
        check_invariants: true,
    };
    let evolution = evolve_master_equation(&rho0, &model, &setup.schedule, &noise, &settings)?;
    let crosstalk = (cfg.sensor.crosstalk_rad_s != 0.0).then(|| {
        let steps = settings.steps_per_segment;
        let rabi = setup.derived.rabi;
        (0..evolution.signal.len())
            .map(|j| {
                let segment = j.saturating_sub(1) / steps;
                cfg.sensor.crosstalk_rad_s * (rabi + evolution.noise[segment]) / rabi
            })
            .collect::<Vec<f64>>()
    });
    let records = evolve_nv(&evolution.signal, &setup.sequence, crosstalk.as_deref())?;
    Ok((records, evolution.signal))
}

fn run_oracle(setup: &Setup) -> Result<Vec<MeasurementRecord>> {
    let initial = setup.schedule.trigger().map(|t| t.target).unwrap_or(Vec3::Z);
    Ok(oracle_full_trace(&setup.schedule, &species_of(&setup.system), initial, &setup.sequence, &setup.system)?)
}

pub fn residual(quantum: &[MeasurementRecord], oracle: &[MeasurementRecord]) -> Residual {
    let n = quantum.len().min(oracle.len()).max(1);
    let rms = (quantum.iter().zip(oracle).map(|(q, o)| (q.sigma_z - o.sigma_z).powi(2)).sum::<f64>() / n as f64).sqrt();
    let oracle_amplitude = oracle.iter().map(|o| o.sigma_z.abs()).fold(0.0, f64::max);
    let relative = if oracle_amplitude > 0.0 { rms / oracle_amplitude } else { rms };
    Residual { rms, oracle_amplitude, relative }
}

fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(serde_json::to_string(cfg).expect("config serializes").as_bytes())
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
    let path = dir.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

fn spectrum_files(
    dir: &Path,
    prefix: &str,
    cfg: &ExperimentConfig,
    out: &EngineOutput,
    title: &str,
) -> Result<Vec<FileEntry>> {
    let mut files = vec![
        export::write_file(dir, &format!("{prefix}records.csv"), export::records_csv(&out.records).as_bytes())?,
        export::write_file(dir, &format!("{prefix}spectrum.json"), export::spectrum_json(&out.spectrum).as_bytes())?,
        export::write_file(dir, &format!("{prefix}spectrum.csv"), export::spectrum_csv(&out.spectrum).as_bytes())?,
    ];
    if cfg.analysis.svg {
        let svg = export::spectrum_svg(&out.spectrum, PLOT_MAX_HZ, title);
        files.push(export::write_file(dir, &format!("{prefix}spectrum.svg"), svg.as_bytes())?);
    }
    Ok(files)
}

/// Validates `cfg`, runs the selected engines, and writes every artifact to
/// `cfg.output_dir()`. The manifest is written first with status
/// `running` and rewritten once the run completes or fails.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    let start = Instant::now();
    let geometry = validate_config(cfg)?;
    let geometry_bytes = std::fs::read(cfg.geometry_path())
        .map_err(|e| LabError::io(format!("reading {}", cfg.geometry_path().display()), e))?;
    let dir = cfg.output_dir();
    std::fs::create_dir_all(&dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;

    let derived = cfg.derived();
    let mut manifest = RunManifest {
        status: "running".into(),
        config_hash: config_hash(cfg),
        geometry_hash: sha256_hex(&geometry_bytes),
        seed: derived.noise_seed,
        engine: cfg.run.engine,
        versions: Versions { lg4nmr_lab: env!("CARGO_PKG_VERSION").into(), lg4nmr_core: lg4nmr_core::VERSION.into() },
        n_spins: geometry.positions.len(),
        n_blocks: derived.n_blocks,
        block_interval_s: 4.0 * derived.segment,
        expected_peaks_hz: Vec::new(),
        wall_time_s: 0.0,
        files: Vec::new(),
    };
    write_manifest(&dir, &manifest)?;

    let result = execute(cfg, &geometry, &dir, &mut manifest);
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    match result {
        Ok((quantum, oracle, residual)) => {
            manifest.status = "complete".into();
            write_manifest(&dir, &manifest)?;
            Ok(RunReport { manifest, output_dir: dir, quantum, oracle, residual })
        }
        Err(e) => {
            manifest.status = format!("failed: {e}");
            write_manifest(&dir, &manifest)?;
            Err(e)
        }
    }
}

type Outputs = (Option<EngineOutput>, Option<EngineOutput>, Option<Residual>);

fn execute(cfg: &ExperimentConfig, geometry: &Geometry, dir: &Path, manifest: &mut RunManifest) -> Result<Outputs> {
    let setup = build_setup(cfg, geometry)?;
    manifest.expected_peaks_hz = setup.expected_hz.clone();
    let rabi_khz = cfg.rf.rabi_hz / 1e3;

    let quantum = if matches!(cfg.run.engine, Engine::Quantum | Engine::Both) {
        let (records, trace) = run_quantum(cfg, &setup)?;
        if cfg.run.write_trace {
            manifest.files.push(export::write_file(dir, "trace.csv", export::trace_csv(&trace).as_bytes())?);
        }
        let out = analyze(cfg, &setup, records)?;
        let title = format!("LG4 spectrum, quantum engine, Ω/2π = {rabi_khz} kHz");
        manifest.files.extend(spectrum_files(dir, "", cfg, &out, &title)?);
        Some(out)
    } else {
        None
    };

    let oracle = if matches!(cfg.run.engine, Engine::Oracle | Engine::Both) {
        let out = analyze(cfg, &setup, run_oracle(&setup)?)?;
        let prefix = if quantum.is_some() { "oracle_" } else { "" };
        let title = format!("LG4 spectrum, geometric oracle, Ω/2π = {rabi_khz} kHz");
        manifest.files.extend(spectrum_files(dir, prefix, cfg, &out, &title)?);
        Some(out)
    } else {
        None
    };

    let residual = match (&quantum, &oracle) {
        (Some(q), Some(o)) => {
            let r = residual(&q.records, &o.records);
            let text = serde_json::to_string_pretty(&r).expect("residual serializes") + "\n";
            manifest.files.push(export::write_file(dir, "residual.json", text.as_bytes())?);
            Some(r)
        }
        _ => None,
    };
    Ok((quantum, oracle, residual))
}
