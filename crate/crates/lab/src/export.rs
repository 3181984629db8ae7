//! File writers. Every writer returns the manifest entry of what it wrote.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use lg4nmr_core::dynamics::SignalTrace;
use lg4nmr_core::sensor::MeasurementRecord;

use crate::error::{LabError, Result};
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to `dir/name` and hashes it.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<FileEntry> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| LabError::io(format!("writing {}", path.display()), e))?;
    Ok(FileEntry { path: name.to_string(), sha256: sha256_hex(contents), bytes: contents.len() as u64 })
}

/// `t_s,signal_T`, 17 significant digits.
pub fn trace_csv(trace: &SignalTrace) -> String {
    let mut out = String::with_capacity(48 * trace.len() + 16);
    out.push_str("t_s,signal_T\n");
    for (i, s) in trace.samples.iter().enumerate() {
        let _ = writeln!(out, "{:.16e},{:.16e}", trace.time(i), s);
    }
    out
}

/// `k,sigma_z,phase_rad`.
pub fn records_csv(records: &[MeasurementRecord]) -> String {
    let mut out = String::from("k,sigma_z,phase_rad\n");
    for r in records {
        let _ = writeln!(out, "{},{:.16e},{:.16e}", r.block, r.sigma_z, r.phase);
    }
    out
}

/// `f_hz,amplitude,normalized`.
pub fn spectrum_csv(spec: &Spectrum) -> String {
    let mut out = String::from("f_hz,amplitude,normalized\n");
    for ((f, a), n) in spec.frequencies.iter().zip(&spec.amplitudes).zip(spec.normalized()) {
        let _ = writeln!(out, "{f:.16e},{a:.16e},{n:.16e}");
    }
    out
}

pub fn spectrum_json(spec: &Spectrum) -> String {
    serde_json::to_string_pretty(spec).expect("spectrum serializes") + "\n"
}

/// Line plot of max-normalized amplitude against frequency, up to `f_max` Hz.
pub fn spectrum_svg(spec: &Spectrum, f_max: f64, title: &str) -> String {
    const W: f64 = 720.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let f_max = f_max.min(*spec.frequencies.last().unwrap_or(&1.0)).max(f64::MIN_POSITIVE);
    let visible: Vec<(f64, f64)> =
        spec.frequencies.iter().zip(&spec.amplitudes).filter(|(f, _)| **f <= f_max).map(|(f, a)| (*f, *a)).collect();
    let a_max = visible.iter().map(|p| p.1).fold(0.0, f64::max);
    let a_max = if a_max > 0.0 { a_max } else { 1.0 };
    let x = |f: f64| PAD + (W - 2.0 * PAD) * f / f_max;
    let y = |a: f64| H - PAD - (H - 2.0 * PAD) * a / a_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD},{} H{} M{PAD},{} V{PAD}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for i in 0..=5 {
        let f = f_max * i as f64 / 5.0;
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{}" text-anchor="middle">{:.0}</text>"#, x(f), H - PAD + 16.0, f);
    }
    let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="middle">frequency (Hz)</text>"#, W / 2.0, H - 8.0);
    let _ = writeln!(
        svg,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">amplitude (max = 1)</text>"#,
        H / 2.0,
        H / 2.0
    );
    let mut points = String::new();
    for (f, a) in &visible {
        let _ = write!(points, "{:.2},{:.2} ", x(*f), y(*a));
    }
    let _ = writeln!(
        svg,
        r##"<polyline points="{}" stroke="#1f5fa8" stroke-width="1.5" fill="none"/>"##,
        points.trim_end()
    );
    for p in spec.peaks.iter().filter(|p| p.frequency <= f_max) {
        let _ = writeln!(
            svg,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#c0392b"/><text x="{:.2}" y="{:.2}" text-anchor="middle">{:.1} Hz</text>"##,
            x(p.frequency),
            y(p.amplitude),
            x(p.frequency),
            y(p.amplitude) - 8.0,
            p.frequency
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
