//! Classical-magnetization model of the protocol: Rodrigues propagation of
//! each shift species, elliptic projection geometry, and the closed-form
//! sensor trace. It cross-checks the full density-matrix pipeline.

use alloc::format;
use alloc::vec::Vec;

use crate::constants::{magic_angle, GAMMA_ELECTRON};
use crate::dynamics::{frame_offset, signal_amplitude_scale};
use crate::sample::SpinSystem;
use crate::sensor::{accumulated_phase_analytic, MeasurementRecord, SensorSequence};
use crate::sequence::{Axis, Lg4Schedule};
use crate::vector::Vec3;
use crate::{Error, Result};

/// `δ* = δ √(1 + 2cos²α)/3`, the precession rate about C per unit shift.
pub fn effective_shift(shift: f64, alpha: f64) -> f64 {
    shift * effective_shift_factor(alpha)
}

pub fn effective_shift_factor(alpha: f64) -> f64 {
    let c = libm::cos(alpha);
    libm::sqrt(1.0 + 2.0 * c * c) / 3.0
}

/// Effective rotation axis of one LG4 block, `(√2 cosα ŷ + ẑ)/√(2cos²α + 1)`.
pub fn effective_axis(alpha: f64) -> Vec3 {
    let c = libm::cos(alpha);
    Vec3::new(0.0, libm::sqrt(2.0) * c, 1.0) * (1.0 / libm::sqrt(2.0 * c * c + 1.0))
}

/// Rodrigues rotation of `m` by `angle` about the unit `axis`.
pub fn rodrigues_step(m: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let (s, c) = (libm::sin(angle), libm::cos(angle));
    m * c + axis.cross(&m) * s + axis * (axis.dot(&m) * (1.0 - c))
}

/// `s ∝ Γ cos(Ω̄t + φ) + b` for magnetization `m` turning about `axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalComponents {
    /// `|M⊥| sinθ`, θ the angle between axis and ẑ.
    pub amplitude: f64,
    /// Signed angle from ẑ⊥ to M⊥.
    pub phase: f64,
    /// `(axis·M) cosθ`.
    pub bias: f64,
}

/// Splits `m` into the part that rotates about `axis` and the static part.
///
/// `φ` is undefined when `m ∥ axis` (or `axis ∥ ẑ`); it is reported as 0.
pub fn signal_decomposition(m: Vec3, axis: Vec3) -> SignalComponents {
    let z_par = axis.z();
    let z_perp = Vec3::Z - axis * z_par;
    let m_par = axis.dot(&m);
    let m_perp = m - axis * m_par;
    let amplitude = m_perp.norm() * z_perp.norm();
    let phase = if amplitude > 1e-12 {
        // Γcosφ = m·ẑ⊥ and Γsinφ = −(axis × m)·ẑ⊥
        libm::atan2(-axis.cross(&m).dot(&z_perp), m.dot(&z_perp))
    } else {
        0.0
    };
    SignalComponents { amplitude, phase, bias: m_par * z_par }
}

/// A shift species and the fraction of spins carrying it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Species {
    /// Chemical shift δ, rad/s.
    pub shift: f64,
    pub fraction: f64,
}

/// Groups the nuclei of `sys` by chemical shift, in order of first appearance.
pub fn species_of(sys: &SpinSystem) -> Vec<Species> {
    let larmor = sys.larmor();
    let n = sys.n_spins() as f64;
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &ppm in &sys.shifts_ppm {
        match out.iter_mut().find(|(p, _)| *p == ppm) {
            Some(entry) => entry.1 += 1,
            None => out.push((ppm, 1)),
        }
    }
    out.into_iter().map(|(ppm, count)| Species { shift: larmor * ppm * 1e-6, fraction: count as f64 / n }).collect()
}

/// Per-species magnetization directions at the start of a block.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnetizationState {
    pub vectors: Vec<Vec3>,
    pub block: usize,
}

impl MagnetizationState {
    pub fn uniform(direction: Vec3, n_species: usize) -> Self {
        MagnetizationState { vectors: alloc::vec![direction; n_species], block: 0 }
    }

    /// Advances one LG4 block: each species turns about C by `4 δ*_off T`
    /// with `δ_off` its rotating-frame offset.
    pub fn advance(&self, species: &[Species], schedule: &Lg4Schedule) -> Self {
        let c = effective_axis(schedule.alpha());
        let t = schedule.segment_duration();
        let vectors = self
            .vectors
            .iter()
            .zip(species)
            .map(|(m, sp)| {
                let rate = effective_shift(frame_offset(sp.shift), schedule.alpha());
                rodrigues_step(*m, c, 4.0 * rate * t)
            })
            .collect();
        MagnetizationState { vectors, block: self.block + 1 }
    }
}

/// `√[(cosφ sinα/√3 − cosα sinφ)² + (√3 cosα cosφ + sinα sinφ)²/(2 + cos2α)]`,
/// the fraction of the full ellipse amplitude seen at projection angle φ.
pub fn projection_factor(alpha: f64, phi: f64) -> f64 {
    let (sa, ca) = (libm::sin(alpha), libm::cos(alpha));
    let (sp, cp) = (libm::sin(phi), libm::cos(phi));
    let first = cp * sa / libm::sqrt(3.0) - ca * sp;
    let second = libm::sqrt(3.0) * ca * cp + sa * sp;
    libm::sqrt(first * first + second * second / (2.0 + libm::cos(2.0 * alpha)))
}

/// Trace phase offset `β_φ = atan2(3(√3 cosα cosφ + sinα sinφ),
/// √(2 + cos2α)(√3 cosφ sinα − 3 cosα sinφ))`.
pub fn beta_angle(alpha: f64, phi: f64) -> f64 {
    let (sa, ca) = (libm::sin(alpha), libm::cos(alpha));
    let (sp, cp) = (libm::sin(phi), libm::cos(phi));
    let s3 = libm::sqrt(3.0);
    let num = 3.0 * (s3 * ca * cp + sa * sp);
    let den = libm::sqrt(2.0 + libm::cos(2.0 * alpha)) * (s3 * cp * sa - 3.0 * ca * sp);
    libm::atan2(num, den)
}

/// Closed-form sensor trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePrediction {
    /// Per-segment phase amplitude `D_φ`, radians.
    pub amplitude: f64,
    pub beta: f64,
    /// `ν_φ = μ − β_φ`; μ is chosen so that this is zero.
    pub nu: f64,
    /// Rotating-frame δ* of each species, rad/s.
    pub effective_shifts: Vec<f64>,
    /// `3 D_φ Σ_i ρ_i cos(4 δ*_i T k + ν_φ)`.
    pub series: Vec<f64>,
}

/// Evaluates `D_φ`, `β_φ` and the small-angle trace for `n_blocks` blocks.
///
/// `D_φ = γ_e K ε sinθ_LG · projection_factor(α, φ) / Ω̄` with
/// `K = γħμ₀σ_h g/4π` and `ε` the thermal polarization; the block phase is
/// `4δ*T` with `T = 2π/Ω̄`.
pub fn trace_prediction(
    species: &[Species],
    alpha: f64,
    omega_bar: f64,
    phi: f64,
    sys: &SpinSystem,
    n_blocks: usize,
) -> Result<TracePrediction> {
    if !(0.0..core::f64::consts::PI).contains(&phi) {
        return Err(Error::Parameter(format!("projection angle {phi} outside [0, π)")));
    }
    if !(omega_bar > 0.0) {
        return Err(Error::Parameter(format!("effective Rabi frequency must be positive, got {omega_bar}")));
    }
    let amplitude = GAMMA_ELECTRON
        * signal_amplitude_scale(sys)
        * sys.thermal_polarization()
        * libm::sin(magic_angle())
        * projection_factor(alpha, phi)
        / omega_bar;
    let beta = beta_angle(alpha, phi);
    let nu = 0.0;
    let t = core::f64::consts::TAU / omega_bar;
    let effective_shifts: Vec<f64> = species.iter().map(|s| effective_shift(frame_offset(s.shift), alpha)).collect();
    let series = (0..n_blocks)
        .map(|k| {
            let sum: f64 = species
                .iter()
                .zip(&effective_shifts)
                .map(|(s, w)| s.fraction * libm::cos(4.0 * w * t * k as f64 + nu))
                .sum();
            3.0 * amplitude * sum
        })
        .collect();
    Ok(TracePrediction { amplitude, beta, nu, effective_shifts, series })
}

/// Full geometric pipeline: block-boundary magnetization precesses about C,
/// each sensing segment is decomposed into `(Γ, φ)`, and the phases follow
/// from the analytic CPMG integral.
pub fn oracle_full_trace(
    schedule: &Lg4Schedule,
    species: &[Species],
    initial: Vec3,
    seq: &SensorSequence,
    sys: &SpinSystem,
) -> Result<Vec<MeasurementRecord>> {
    let initial =
        initial.normalized().ok_or_else(|| Error::Parameter("initial magnetization must be nonzero".into()))?;
    let omega_bar = schedule.effective_rabi();
    let t = schedule.segment_duration();
    let field_per_fraction = signal_amplitude_scale(sys) * sys.thermal_polarization() / 4.0;
    let mut state = MagnetizationState::uniform(initial, species.len());
    let mut records = Vec::with_capacity(schedule.n_blocks());
    for k in 0..schedule.n_blocks() {
        let mut phase = 0.0;
        for (m0, sp) in state.vectors.iter().zip(species) {
            let offset = frame_offset(sp.shift);
            let mut m = *m0;
            for seg in schedule.segments() {
                let axis = seg.direction();
                if let Some(t1) = seq.t1(seg.axis) {
                    let comps = signal_decomposition(m, axis);
                    let gamma = field_per_fraction * sp.fraction * comps.amplitude;
                    phase += accumulated_phase_analytic(gamma, comps.phase, t1, omega_bar, GAMMA_ELECTRON);
                }
                if seg.axis != Axis::B {
                    m = rodrigues_step(m, axis, offset * axis.z() * t);
                }
            }
        }
        records.push(MeasurementRecord { block: k, sigma_z: libm::sin(phase), phase });
        state = state.advance(species, schedule);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TAU;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn effective_shifts_at_55_degrees() {
        let a = 55f64.to_radians();
        assert_abs_diff_eq!(effective_shift(327.0, a), 140.4, epsilon = 0.1);
        assert_abs_diff_eq!(effective_shift(106.0, a), 45.5, epsilon = 0.1);
        assert_relative_eq!(effective_shift(9.0, core::f64::consts::FRAC_PI_2), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn rodrigues_cases() {
        let m = Vec3::new(0.3, -0.4, 0.5).normalized().unwrap();
        assert_eq!(rodrigues_step(m, Vec3::Z, 0.0), m);
        let axis = m;
        assert!((rodrigues_step(m, axis, 1.234) - m).norm() < 1e-15);
        assert!((rodrigues_step(Vec3::X, Vec3::Z, core::f64::consts::FRAC_PI_2) - Vec3::Y).norm() < 1e-15);
    }

    #[test]
    fn decomposition_cases() {
        let axis = Vec3::new(1.0, 1.0, 1.0).normalized().unwrap();
        let along = signal_decomposition(axis, axis);
        assert_abs_diff_eq!(along.amplitude, 0.0, epsilon = 1e-15);
        assert_relative_eq!(along.bias, 1.0 / libm::sqrt(3.0), max_relative = 1e-14);
        let z_perp = (Vec3::Z - axis * axis.z()).normalized().unwrap();
        let c = signal_decomposition(z_perp, axis);
        assert_abs_diff_eq!(c.phase, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn contrast_gain_of_tailored_projection() {
        let a = 55f64.to_radians();
        let phi = crate::sensor::optimal_projection_angle(a);
        assert_abs_diff_eq!(projection_factor(a, phi) / projection_factor(a, 0.0), 1.105, epsilon = 0.01);
        let first = libm::cos(phi) * libm::sin(a) / libm::sqrt(3.0) - libm::cos(a) * libm::sin(phi);
        assert_abs_diff_eq!(first, 0.0, epsilon = 1e-12);
        assert_relative_eq!(projection_factor(a, phi), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn amplitude_scales_inversely_with_drive() {
        let sys = SpinSystem::protons(alloc::vec![Vec3::default()], alloc::vec![3.66], 2.1).unwrap();
        let sp = species_of(&sys);
        let a = 55f64.to_radians();
        let one = trace_prediction(&sp, a, TAU * 1e5, 0.3, &sys, 4).unwrap();
        let two = trace_prediction(&sp, a, TAU * 2e5, 0.3, &sys, 4).unwrap();
        assert_relative_eq!(one.amplitude, 2.0 * two.amplitude, max_relative = 1e-14);
        assert!(trace_prediction(&sp, a, TAU * 1e5, core::f64::consts::PI, &sys, 4).is_err());
    }

    #[test]
    fn species_grouping() {
        let sys = SpinSystem::protons(
            (0..5).map(|i| Vec3::new(2e-10 * i as f64, 0.0, 0.0)).collect(),
            alloc::vec![3.66, 3.66, 3.66, 1.19, 1.19],
            2.1,
        )
        .unwrap();
        let sp = species_of(&sys);
        assert_eq!(sp.len(), 2);
        assert_relative_eq!(sp[0].fraction, 0.6);
        assert_relative_eq!(sp[1].fraction, 0.4);
    }
}
