//! Parameter sweeps: one independent run per value, in parallel, each in
//! its own subdirectory. A failing run is reported and the rest continue.

use std::fmt::Write as _;
use std::path::PathBuf;

use rayon::prelude::*;

use crate::config::{parse_value, ExperimentConfig};
use crate::error::{LabError, Result};
use crate::export::{self, FileEntry};
use crate::run::{run_experiment, RunReport};
use crate::spectrum::most_prominent;

pub struct SweepOutcome {
    pub value: String,
    pub output_dir: PathBuf,
    pub result: Result<RunReport>,
}

/// Directory-safe rendering of a sweep value.
fn slug(path: &str, value: &str) -> String {
    let clean: String = value
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '+') { c } else { '_' })
        .collect();
    format!("{path}={clean}")
}

/// Runs `cfg` once per entry of `values` with `path` overridden, then writes
/// `sweep_summary.csv` into the base output directory.
pub fn sweep(cfg: &ExperimentConfig, path: &str, values: &[String]) -> Result<(Vec<SweepOutcome>, FileEntry)> {
    if values.is_empty() {
        return Err(LabError::Config(vec![crate::error::FieldError::new(path, "sweep needs at least one value")]));
    }
    // reject a bad path once, before any work is scheduled
    cfg.with_override(path, parse_value(&values[0]))?;
    let base = cfg.output_dir();
    std::fs::create_dir_all(&base).map_err(|e| LabError::io(format!("creating {}", base.display()), e))?;

    let outcomes: Vec<SweepOutcome> = values
        .par_iter()
        .map(|value| {
            let output_dir = base.join(slug(path, value));
            let result = cfg.with_override(path, parse_value(value)).and_then(|mut c| {
                c.run.output_dir = output_dir.clone();
                run_experiment(&c)
            });
            SweepOutcome { value: value.clone(), output_dir, result }
        })
        .collect();

    let summary = export::write_file(&base, "sweep_summary.csv", summary_csv(path, &outcomes).as_bytes())?;
    Ok((outcomes, summary))
}

/// One row per value: the two most prominent peaks and the spurious mass.
pub fn summary_csv(path: &str, outcomes: &[SweepOutcome]) -> String {
    let mut out = format!(
        "{path},status,peak1_hz,peak1_amp,peak1_delta_hz,peak2_hz,peak2_amp,peak2_delta_hz,off_peak_fraction\n"
    );
    for o in outcomes {
        match &o.result {
            Ok(report) => {
                let primary = report.primary();
                let peaks = most_prominent(&primary.spectrum.peaks, 2);
                let _ = write!(out, "{},ok", o.value);
                for i in 0..2 {
                    match peaks.get(i) {
                        Some(p) => {
                            let _ = write!(
                                out,
                                ",{:.6},{:.6e},{:.6}",
                                p.frequency,
                                p.amplitude,
                                p.shift.unwrap_or(f64::NAN)
                            );
                        }
                        None => out.push_str(",,,"),
                    }
                }
                let _ = writeln!(out, ",{:.6e}", primary.off_peak_fraction);
            }
            Err(e) => {
                let msg = e.to_string().replace(['\n', ','], " ");
                let _ = writeln!(out, "{},error: {},,,,,,,", o.value, msg.trim());
            }
        }
    }
    out
}
