//! One-sided amplitude spectra of the per-block sensor series, peak
//! detection, and the δ* → δ inversion.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use lg4nmr_core::geometry::effective_shift_factor;
use lg4nmr_core::sensor::MeasurementRecord;

use crate::config::Window;
use crate::error::{LabError, Result};

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    /// Interpolated frequency, Hz.
    #[serde(rename = "f_hz")]
    pub frequency: f64,
    #[serde(rename = "amp")]
    pub amplitude: f64,
    #[serde(skip)]
    pub prominence: f64,
    /// Chemical shift this δ* maps back to, Hz.
    #[serde(rename = "delta_hz")]
    pub shift: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    #[serde(rename = "frequencies_hz")]
    pub frequencies: Vec<f64>,
    /// `2|X_k|/Σw`: a unit cosine shows up with amplitude 1.
    pub amplitudes: Vec<f64>,
    #[serde(rename = "sample_interval_s")]
    pub sample_interval: f64,
    pub peaks: Vec<Peak>,
    #[serde(skip)]
    n_samples: usize,
    #[serde(skip)]
    window_sum: f64,
}

impl Spectrum {
    pub fn bin_width(&self) -> f64 {
        1.0 / (self.n_samples as f64 * self.sample_interval)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// `Σ|X_k|²/N` over the two-sided DFT, rebuilt from the one-sided amplitudes.
    pub fn energy(&self) -> f64 {
        let n = self.n_samples;
        let last = self.amplitudes.len() - 1;
        let sum: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| {
                let unpaired = k == 0 || (n % 2 == 0 && k == last);
                let mag = if unpaired { a * self.window_sum } else { a * self.window_sum / 2.0 };
                let copies = if unpaired { 1.0 } else { 2.0 };
                copies * mag * mag
            })
            .sum();
        sum / n as f64
    }

    /// Amplitudes scaled so the largest is 1.
    pub fn normalized(&self) -> Vec<f64> {
        let max = self.amplitudes.iter().cloned().fold(0.0, f64::max);
        if max > 0.0 {
            self.amplitudes.iter().map(|a| a / max).collect()
        } else {
            self.amplitudes.clone()
        }
    }

    /// Fraction of `Σ a_k²` lying further than `half_width` bins from every target.
    pub fn off_peak_fraction(&self, targets_hz: &[f64], half_width: f64) -> f64 {
        let df = self.bin_width();
        let (mut off, mut total) = (0.0, 0.0);
        for (f, a) in self.frequencies.iter().zip(&self.amplitudes) {
            let p = a * a;
            total += p;
            if targets_hz.iter().all(|t| ((f - t) / df).abs() > half_width) {
                off += p;
            }
        }
        if total > 0.0 {
            off / total
        } else {
            0.0
        }
    }

    /// Attaches the inverted shift of every peak for drive phase `alpha`.
    pub fn with_peaks(mut self, mut peaks: Vec<Peak>, alpha: f64) -> Self {
        for p in &mut peaks {
            p.shift = Some(invert_shift(p.frequency, alpha));
        }
        self.peaks = peaks;
        self
    }
}

pub fn window_weights(window: Window, n: usize) -> Vec<f64> {
    match window {
        Window::None => vec![1.0; n],
        Window::Hann => {
            let m = (n - 1).max(1) as f64;
            (0..n).map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / m).cos())).collect()
        }
    }
}

/// Mean-removed, windowed copy of `series`.
fn prepare(series: &[f64], window: Window) -> (Vec<f64>, f64) {
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let w = window_weights(window, series.len());
    let sum = w.iter().sum();
    (series.iter().zip(&w).map(|(x, w)| (x - mean) * w).collect(), sum)
}

/// `Σ (w_k (x_k − x̄))²`, the time-domain side of Parseval's identity.
pub fn windowed_energy(series: &[f64], window: Window) -> f64 {
    prepare(series, window).0.iter().map(|x| x * x).sum()
}

/// One-sided amplitude spectrum of a uniformly sampled series.
pub fn dft_spectrum(series: &[f64], sample_interval: f64, window: Window) -> Result<Spectrum> {
    if series.len() < MIN_SAMPLES {
        return Err(LabError::Sampling(format!("{} samples; at least {MIN_SAMPLES} are needed", series.len())));
    }
    if !(sample_interval > 0.0 && sample_interval.is_finite()) {
        return Err(LabError::Sampling(format!("sample interval must be positive, got {sample_interval}")));
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(LabError::Sampling("series contains non-finite values".into()));
    }
    let n = series.len();
    let (prepared, window_sum) = prepare(series, window);
    let mut buf: Vec<Complex64> = prepared.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let amplitudes = (0..=half)
        .map(|k| {
            let unpaired = k == 0 || (n % 2 == 0 && k == half);
            let scale = if unpaired { 1.0 } else { 2.0 };
            scale * buf[k].norm() / window_sum
        })
        .collect();
    let frequencies = (0..=half).map(|k| k as f64 / (n as f64 * sample_interval)).collect();
    Ok(Spectrum { frequencies, amplitudes, sample_interval, peaks: Vec::new(), n_samples: n, window_sum })
}

/// Spectrum of `⟨σ_z⟩_k`; records must cover consecutive blocks.
pub fn record_spectrum(records: &[MeasurementRecord], block_interval: f64, window: Window) -> Result<Spectrum> {
    if let Some(w) = records.windows(2).find(|w| w[1].block != w[0].block + 1) {
        return Err(LabError::Sampling(format!(
            "records jump from block {} to block {}; spacing must be uniform",
            w[0].block, w[1].block
        )));
    }
    let series: Vec<f64> = records.iter().map(|r| r.sigma_z).collect();
    dft_spectrum(&series, block_interval, window)
}

/// Local maxima whose prominence reaches `min_prominence` times the largest
/// amplitude, refined by three-point parabolic interpolation and sorted by
/// frequency. The DC bin is never reported.
pub fn find_peaks(spec: &Spectrum, min_prominence: f64) -> Vec<Peak> {
    let a = &spec.amplitudes;
    let max = a.iter().cloned().fold(0.0, f64::max);
    if a.len() < 3 || max <= 0.0 {
        return Vec::new();
    }
    let df = spec.bin_width();
    let threshold = min_prominence * max;
    let mut peaks = Vec::new();
    for i in 1..a.len() - 1 {
        if !(a[i] > a[i - 1] && a[i] >= a[i + 1]) {
            continue;
        }
        let mut left_min = a[i];
        for j in (0..i).rev() {
            if a[j] > a[i] {
                break;
            }
            left_min = left_min.min(a[j]);
        }
        let mut right_min = a[i];
        for &v in &a[i + 1..] {
            if v > a[i] {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = a[i] - left_min.max(right_min);
        if prominence <= 0.0 || prominence < threshold {
            continue;
        }
        let (l, c, r) = (a[i - 1], a[i], a[i + 1]);
        let denom = l - 2.0 * c + r;
        let offset = if denom != 0.0 { (0.5 * (l - r) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        peaks.push(Peak {
            frequency: (i as f64 + offset) * df,
            amplitude: c - 0.25 * (l - r) * offset,
            prominence,
            shift: None,
        });
    }
    peaks
}

/// The `count` most prominent peaks, sorted by frequency.
pub fn most_prominent(peaks: &[Peak], count: usize) -> Vec<Peak> {
    let mut sorted = peaks.to_vec();
    sorted.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    sorted.truncate(count);
    sorted.sort_by(|a, b| a.frequency.total_cmp(&b.frequency));
    sorted
}

/// `δ = 3δ*/√(1 + 2cos²α)`.
pub fn invert_shift(effective: f64, alpha: f64) -> f64 {
    effective / effective_shift_factor(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn nyquist_and_dc_are_unpaired() {
        let series: Vec<f64> = (0..16).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let s = dft_spectrum(&series, 1.0, Window::None).unwrap();
        assert_abs_diff_eq!(*s.amplitudes.last().unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*s.frequencies.last().unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn short_and_gappy_input_is_rejected() {
        assert!(matches!(dft_spectrum(&[1.0; 7], 1.0, Window::None), Err(LabError::Sampling(_))));
        let recs: Vec<MeasurementRecord> = [0, 1, 3, 4, 5, 6, 7, 8]
            .iter()
            .map(|&b| MeasurementRecord { block: b, sigma_z: 0.0, phase: 0.0 })
            .collect();
        assert!(matches!(record_spectrum(&recs, 1.0, Window::None), Err(LabError::Sampling(_))));
    }
}
