//! NV sensor driven by a CPMG-like microwave train synchronized to the LG4
//! blocks: it accumulates phase during A, Ā, and B̄, and is read out and
//! reset during B.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::constants::{GAMMA_ELECTRON, PI};
use crate::dynamics::{integrate_linear, interpolate, SignalTrace};
use crate::sequence::{Axis, Lg4Schedule};
use crate::{Error, Result};

/// Default microwave Rabi frequency, 2π·20 MHz.
pub const DEFAULT_MW_RABI: f64 = 2.0 * PI * 20e6;

/// Sub-steps used to integrate each finite π pulse.
const PULSE_SUBSTEPS: usize = 32;

/// Projection angle that aligns the readout with the major axis of the
/// magnetization ellipse: `arccos(√3 cosα / √(2 + cos2α))`.
pub fn optimal_projection_angle(alpha: f64) -> f64 {
    let ratio = libm::sqrt(3.0) * libm::cos(alpha) / libm::sqrt(2.0 + libm::cos(2.0 * alpha));
    libm::acos(ratio.clamp(-1.0, 1.0))
}

/// First-pulse time `t₁ = (π/2 − φ_opt)/Ω̄` for the A segment.
pub fn optimal_t1(alpha: f64, omega_bar: f64) -> Result<f64> {
    if !(omega_bar > 0.0) {
        return Err(Error::Parameter(format!("effective Rabi frequency must be positive, got {omega_bar}")));
    }
    Ok((PI / 2.0 - optimal_projection_angle(alpha)) / omega_bar)
}

/// Phase picked up over one segment from `s(t) = Γ cos(Ω̄t + φ_k) + b`
/// with π pulses at `t₁` and `t₁ + T/2`:
/// `Φ = 4 γ_e Γ cos(φ_k − φ)/Ω̄`, `φ = π/2 − Ω̄t₁`. Pass `|γ_e|` for the
/// sign-free form.
pub fn accumulated_phase_analytic(amplitude: f64, signal_phase: f64, t1: f64, omega_bar: f64, gamma_e: f64) -> f64 {
    let projection = PI / 2.0 - omega_bar * t1;
    4.0 * gamma_e * amplitude * libm::cos(signal_phase - projection) / omega_bar
}

/// Microwave timing for one LG4 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSequence {
    segment: f64,
    t1_a: f64,
    mw_rabi: f64,
}

impl SensorSequence {
    /// `t1_a` is the first π-pulse center in the A segment; Ā uses
    /// `T/2 − t1_a` and B̄ reuses `t1_a`. B carries readout and reset.
    pub fn new(segment: f64, t1_a: f64, mw_rabi: f64) -> Result<Self> {
        if !(segment > 0.0) || !segment.is_finite() {
            return Err(Error::Parameter(format!("segment length must be positive, got {segment}")));
        }
        if !(t1_a >= 0.0 && t1_a < segment / 2.0) {
            return Err(Error::Schedule(format!("t1 = {t1_a:e} s must lie in [0, T/2) with T = {segment:e} s")));
        }
        if !(mw_rabi > 0.0) || !mw_rabi.is_finite() {
            return Err(Error::Parameter(format!("MW Rabi frequency must be positive, got {mw_rabi}")));
        }
        let seq = SensorSequence { segment, t1_a, mw_rabi };
        seq.check_pulses()?;
        Ok(seq)
    }

    /// Timing that projects onto the ellipse major axis.
    pub fn tailored(schedule: &Lg4Schedule, mw_rabi: f64) -> Result<Self> {
        let t1 = optimal_t1(schedule.alpha(), schedule.effective_rabi())?;
        Self::new(schedule.segment_duration(), t1, mw_rabi)
    }

    /// Plain CPMG reference: `t₁ = T/4` in every segment.
    pub fn cpmg(schedule: &Lg4Schedule, mw_rabi: f64) -> Result<Self> {
        Self::new(schedule.segment_duration(), schedule.segment_duration() / 4.0, mw_rabi)
    }

    pub fn segment(&self) -> f64 {
        self.segment
    }

    pub fn mw_rabi(&self) -> f64 {
        self.mw_rabi
    }

    pub fn pi_duration(&self) -> f64 {
        PI / self.mw_rabi
    }

    /// First π-pulse center for a sensing segment; `None` for the readout segment B.
    pub fn t1(&self, axis: Axis) -> Option<f64> {
        match axis {
            Axis::A | Axis::BBar => Some(self.t1_a),
            Axis::ABar => Some(self.segment / 2.0 - self.t1_a),
            Axis::B => None,
        }
    }

    /// Second π-pulse center, `t₁ + T/2`.
    pub fn t2(&self, axis: Axis) -> Option<f64> {
        self.t1(axis).map(|t| t + self.segment / 2.0)
    }

    fn check_pulses(&self) -> Result<()> {
        let half = self.pi_duration() / 2.0;
        if 2.0 * half >= self.segment / 2.0 {
            return Err(Error::Schedule(format!(
                "π pulses of {:e} s overlap at T/2 spacing (T = {:e} s)",
                2.0 * half,
                self.segment
            )));
        }
        for axis in [Axis::A, Axis::ABar, Axis::BBar] {
            let (t1, t2) = (self.t1(axis).unwrap(), self.t2(axis).unwrap());
            if t1 - half < 0.0 || t2 + half > self.segment {
                return Err(Error::Schedule(format!(
                    "π pulses centred at {t1:e} s and {t2:e} s do not fit inside the {} segment",
                    axis.label()
                )));
            }
        }
        Ok(())
    }
}

/// Sensor outcome for one LG4 block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub block: usize,
    /// `⟨σ_z⟩` after the final π/2 pulse.
    pub sigma_z: f64,
    /// Phase accumulated over the three sensing segments, radians.
    pub phase: f64,
}

/// Two-level sensor state.
#[derive(Clone, Copy)]
struct Qubit([Complex64; 2]);

impl Qubit {
    fn plus() -> Self {
        let h = Complex64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        Qubit([h, h])
    }

    /// `exp(−i(h_x σ_x + h_z σ_z)τ/2)`.
    fn rotate(&mut self, hx: f64, hz: f64, tau: f64) {
        let norm = libm::hypot(hx, hz);
        if norm == 0.0 {
            return;
        }
        let angle = 0.5 * norm * tau;
        let (s, c) = (libm::sin(angle), libm::cos(angle));
        let (nx, nz) = (hx / norm, hz / norm);
        let [a, b] = self.0;
        let mi = Complex64::new(0.0, -s);
        self.0 = [a * (c + mi * nz) + b * mi * nx, a * mi * nx + b * (c - mi * nz)];
    }

    /// `exp(−iθσ_z/2)`.
    fn precess(&mut self, theta: f64) {
        let half = 0.5 * theta;
        let (s, c) = (libm::sin(half), libm::cos(half));
        self.0[0] *= Complex64::new(c, -s);
        self.0[1] *= Complex64::new(c, s);
    }

    /// `(⟨σ_x⟩, ⟨σ_y⟩)`.
    fn transverse(&self) -> (f64, f64) {
        let p = self.0[0].conj() * self.0[1];
        (2.0 * p.re, 2.0 * p.im)
    }
}

/// Simulates the NV under `H = γ_e s(t) σ_z/2 + C(t) σ_z/2 + Ω_MW(t) σ_x/2`
/// block by block.
///
/// Each block starts in |+⟩; finite square π pulses about x sit centred at
/// `t₁` and `t₁ + T/2` in A, Ā, and B̄; an ideal π/2 pulse during B maps the
/// phase Φ to `⟨σ_z⟩ = sin Φ`. `crosstalk` holds C(t) in rad/s on the
/// trace's time grid.
pub fn evolve_nv(
    trace: &SignalTrace,
    seq: &SensorSequence,
    crosstalk: Option<&[f64]>,
) -> Result<Vec<MeasurementRecord>> {
    if let Some(c) = crosstalk {
        if c.len() != trace.len() {
            return Err(Error::Contract(format!("crosstalk has {} samples, trace has {}", c.len(), trace.len())));
        }
    }
    if trace.len() < 2 || !(trace.dt > 0.0) {
        return Err(Error::Schedule("signal trace needs at least two samples".into()));
    }
    let block = 4.0 * seq.segment;
    let span = trace.end_time() - trace.start_time;
    // every block needs its three sensing segments covered
    let n_blocks = libm::floor((span - 3.0 * seq.segment) / block + 1e-9) as i64 + 1;
    if n_blocks < 1 {
        return Err(Error::Schedule(format!(
            "trace spans {span:e} s, shorter than the {:e} s sensing window",
            3.0 * seq.segment
        )));
    }

    let field = |a: f64, b: f64| {
        let mut theta = GAMMA_ELECTRON * trace.integral(a, b);
        if let Some(c) = crosstalk {
            theta += integrate_linear(c, trace.start_time, trace.dt, a, b);
        }
        theta
    };
    let detuning_at = |t: f64| {
        let mut hz = GAMMA_ELECTRON * trace.value_at(t);
        if let Some(c) = crosstalk {
            hz += interpolate(c, trace.start_time, trace.dt, t);
        }
        hz
    };

    let width = seq.pi_duration();
    let sub = width / PULSE_SUBSTEPS as f64;
    let mut records = Vec::with_capacity(n_blocks as usize);
    for k in 0..n_blocks as usize {
        let block_start = trace.start_time + block * k as f64;
        let mut qubit = Qubit::plus();
        let mut cursor = block_start;
        for (j, axis) in [Axis::A, Axis::ABar, Axis::BBar].into_iter().enumerate() {
            let seg_start = block_start + seq.segment * j as f64;
            for center in [seq.t1(axis).unwrap(), seq.t2(axis).unwrap()] {
                let pulse_start = seg_start + center - width / 2.0;
                qubit.precess(field(cursor, pulse_start));
                for n in 0..PULSE_SUBSTEPS {
                    let mid = pulse_start + sub * (n as f64 + 0.5);
                    qubit.rotate(seq.mw_rabi, detuning_at(mid), sub);
                }
                cursor = pulse_start + width;
            }
        }
        qubit.precess(field(cursor, block_start + 3.0 * seq.segment));
        let (sx, sy) = qubit.transverse();
        // π/2 about x maps ⟨σ_y⟩ onto ⟨σ_z⟩
        records.push(MeasurementRecord { block: k, sigma_z: sy, phase: libm::atan2(sy, sx) });
    }
    Ok(records)
}

/// Same pipeline with the plain CPMG timing `t₁ = T/4` in every segment.
pub fn reference_cpmg_trace(
    trace: &SignalTrace,
    schedule: &Lg4Schedule,
    mw_rabi: f64,
    crosstalk: Option<&[f64]>,
) -> Result<Vec<MeasurementRecord>> {
    evolve_nv(trace, &SensorSequence::cpmg(schedule, mw_rabi)?, crosstalk)
}
