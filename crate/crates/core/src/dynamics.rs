//! Nuclear master-equation integration under the LG4 drive and the magnetic
//! signal the sample produces at the sensor.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{ComplexMatrix, SpinOperatorSet};
use crate::constants::{HBAR, MU_0, PI};
use crate::noise::{ou_sample_path, OuNoiseProcess};
use crate::sample::{dipolar_couplings, larmor_and_shifts, DipolarTable, SpinSystem};
use crate::sequence::{Lg4Schedule, RfDrive};
use crate::vector::Vec3;
use crate::{Error, Result};

/// Rotating-frame coefficient of `I_z` produced by a chemical shift `δ`.
///
/// The shift enters as `−δ I_z`; the sign only sets the sense of the slow
/// precession and drops out of magnitude spectra.
#[inline]
pub fn frame_offset(shift: f64) -> f64 {
    -shift
}

/// Fewest integrator steps allowed per RF segment.
pub const MIN_STEPS_PER_SEGMENT: usize = 20;

const TRACE_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-9;
const POSITIVITY_TOL: f64 = -1e-7;

/// Density matrix stamped with the time it describes.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    time: f64,
}

impl DensityMatrix {
    /// Accepts `matrix` if it is Hermitian and unit-trace to 1e-10 with no
    /// eigenvalue below −1e-8.
    pub fn new(matrix: ComplexMatrix, time: f64) -> Result<Self> {
        if let Some(problem) = state_defect(&matrix, 1e-10, 1e-10, -1e-8)? {
            return Err(Error::Contract(problem));
        }
        Ok(DensityMatrix { matrix, time })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `Re Tr(ρ O)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> f64 {
        let n = self.dim();
        let (r, o) = (self.matrix.as_slice(), op.as_slice());
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += r[i * n + k] * o[k * n + i];
            }
        }
        acc.re
    }

    /// Bloch vector `(⟨I_x⟩, ⟨I_y⟩, ⟨I_z⟩)` of one spin.
    pub fn spin_vector(&self, ops: &SpinOperatorSet, spin: usize) -> Vec3 {
        Vec3::new(self.expectation(ops.x(spin)), self.expectation(ops.y(spin)), self.expectation(ops.z(spin)))
    }
}

/// Describes the first violated density-matrix invariant, if any.
fn state_defect(m: &ComplexMatrix, trace_tol: f64, herm_tol: f64, min_eig: f64) -> Result<Option<String>> {
    let tr = m.trace();
    if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
        return Ok(Some(format!("trace is {} {:+}i", tr.re, tr.im)));
    }
    let anti = (m - &m.adjoint()).frobenius_norm();
    if !(anti <= herm_tol) {
        return Ok(Some(format!("‖ρ − ρ†‖_F = {anti:.3e}")));
    }
    let lowest = m.hermitian_part().hermitian_eigen()?.min_value();
    if lowest < min_eig {
        return Ok(Some(format!("lowest eigenvalue {lowest:.3e}")));
    }
    Ok(None)
}

/// Uniformly sampled magnetic field at the sensor, tesla.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub dt: f64,
    pub start_time: f64,
    pub samples: Vec<f64>,
}

impl SignalTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + self.dt * index as f64
    }

    pub fn end_time(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }

    /// Linear interpolation, clamped to the end samples.
    pub fn value_at(&self, t: f64) -> f64 {
        interpolate(&self.samples, self.start_time, self.dt, t)
    }

    /// Exact integral of the piecewise-linear interpolant over `[a, b]`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        integrate_linear(&self.samples, self.start_time, self.dt, a, b)
    }
}

pub(crate) fn interpolate(samples: &[f64], start: f64, dt: f64, t: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let x = (t - start) / dt;
    if x <= 0.0 {
        return samples[0];
    }
    let last = samples.len() - 1;
    let i = libm::floor(x) as usize;
    if i >= last {
        return samples[last];
    }
    let f = x - i as f64;
    samples[i] * (1.0 - f) + samples[i + 1] * f
}

pub(crate) fn integrate_linear(samples: &[f64], start: f64, dt: f64, a: f64, b: f64) -> f64 {
    if b <= a || samples.is_empty() {
        return 0.0;
    }
    let xa = (a - start) / dt;
    let xb = (b - start) / dt;
    let first_node = libm::ceil(xa) as i64;
    let last_node = libm::floor(xb) as i64;
    if first_node > last_node {
        // both ends inside one interval
        return 0.5 * (interpolate(samples, start, dt, a) + interpolate(samples, start, dt, b)) * (b - a);
    }
    let node_t = |k: i64| start + dt * k as f64;
    let node_v = |k: i64| samples[(k.max(0) as usize).min(samples.len() - 1)];
    let mut acc = 0.5 * (interpolate(samples, start, dt, a) + node_v(first_node)) * (node_t(first_node) - a);
    for k in first_node..last_node {
        acc += 0.5 * (node_v(k) + node_v(k + 1)) * dt;
    }
    acc + 0.5 * (node_v(last_node) + interpolate(samples, start, dt, b)) * (b - node_t(last_node))
}

/// Field per unit mean single-spin polarization, `γ ħ μ₀ σ_h g / 4π` (tesla).
pub fn signal_amplitude_scale(sys: &SpinSystem) -> f64 {
    sys.gamma * HBAR * MU_0 * sys.spin_density * sys.geometric_factor / (4.0 * PI)
}

/// Rotating-frame sample Hamiltonian, split into a static part (shift
/// offsets plus secular dipolar coupling) and the collective drive operators.
#[derive(Debug, Clone)]
pub struct SampleModel {
    n_spins: usize,
    static_part: ComplexMatrix,
    dipolar_part: ComplexMatrix,
    total_x: ComplexMatrix,
    total_y: ComplexMatrix,
    total_z: ComplexMatrix,
    /// `Σ_i m_z^i / N` for each computational basis state.
    mean_z: Vec<f64>,
    signal_scale: f64,
}

impl SampleModel {
    /// `shifts` are chemical shifts δ_i in rad/s (see [`frame_offset`]).
    pub fn new(ops: &SpinOperatorSet, shifts: &[f64], couplings: Option<&DipolarTable>) -> Result<Self> {
        let n = ops.n_spins();
        if shifts.len() != n {
            return Err(Error::Contract(format!("{} shifts for {n} spins", shifts.len())));
        }
        let dim = ops.dim();
        let dipolar_part = match couplings {
            Some(table) => {
                if table.n_spins() != n {
                    return Err(Error::Contract(format!(
                        "coupling table for {} spins, register has {n}",
                        table.n_spins()
                    )));
                }
                dipolar_hamiltonian(ops, table)
            }
            None => ComplexMatrix::zeros(dim),
        };
        let mut static_part = dipolar_part.clone();
        for (i, &d) in shifts.iter().enumerate() {
            static_part.add_scaled(Complex64::new(frame_offset(d), 0.0), ops.z(i));
        }
        let total = |axis: Vec3| ops.total_along(axis.0);
        let mean_z = (0..dim).map(|a| (0..n).map(|i| ops.z_eigenvalue(i, a)).sum::<f64>() / n as f64).collect();
        Ok(SampleModel {
            n_spins: n,
            static_part,
            dipolar_part,
            total_x: total(Vec3::X),
            total_y: total(Vec3::Y),
            total_z: total(Vec3::Z),
            mean_z,
            signal_scale: 1.0,
        })
    }

    /// Model of `sys` with the crystal oriented so that `orientation` is along B₀.
    pub fn from_system(ops: &SpinOperatorSet, sys: &SpinSystem, orientation: Vec3, with_dipolar: bool) -> Result<Self> {
        sys.validate()?;
        let (_, shifts) = larmor_and_shifts(sys);
        let table = if with_dipolar { Some(dipolar_couplings(sys, orientation)?) } else { None };
        Ok(Self::new(ops, &shifts, table.as_ref())?.with_signal_scale(signal_amplitude_scale(sys)))
    }

    pub fn with_signal_scale(mut self, scale: f64) -> Self {
        self.signal_scale = scale;
        self
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn signal_scale(&self) -> f64 {
        self.signal_scale
    }

    pub fn dipolar_part(&self) -> &ComplexMatrix {
        &self.dipolar_part
    }

    pub fn static_part(&self) -> &ComplexMatrix {
        &self.static_part
    }

    /// Total z projection `Σ_i I_z^i`.
    pub fn total_z(&self) -> &ComplexMatrix {
        &self.total_z
    }

    /// `H = H_static + (Ω + η)(sinφ ΣI_x + cosφ ΣI_y) + Δ ΣI_z`.
    pub fn drive_hamiltonian(&self, rabi: f64, detuning: f64, phase: f64, eta: f64) -> ComplexMatrix {
        let amp = rabi + eta;
        let mut h = self.static_part.clone();
        h.add_scaled(Complex64::new(amp * libm::sin(phase), 0.0), &self.total_x);
        h.add_scaled(Complex64::new(amp * libm::cos(phase), 0.0), &self.total_y);
        h.add_scaled(Complex64::new(detuning, 0.0), &self.total_z);
        h
    }

    /// `Tr[ρ Ī_z]` with `Ī_z` the mean single-spin `I_z`.
    pub fn mean_polarization(&self, rho: &ComplexMatrix) -> f64 {
        let n = rho.dim();
        let data = rho.as_slice();
        self.mean_z.iter().enumerate().map(|(a, m)| data[a * n + a].re * m).sum()
    }
}

fn dipolar_hamiltonian(ops: &SpinOperatorSet, table: &DipolarTable) -> ComplexMatrix {
    let mut h = ComplexMatrix::zeros(ops.dim());
    for (i, j, d) in table.pairs() {
        if d == 0.0 {
            continue;
        }
        let zz = ops.z(i).matmul(ops.z(j));
        h.add_scaled(Complex64::new(3.0 * d, 0.0), &zz);
        h.add_scaled(Complex64::new(-d, 0.0), &ops.scalar_product(i, j));
    }
    h
}

/// Hamiltonian during `drive` with drive noise `eta` (rad/s).
///
/// In the rotating frame each segment's Hamiltonian is time-independent.
pub fn sample_hamiltonian(model: &SampleModel, drive: &RfDrive, eta: f64) -> ComplexMatrix {
    model.drive_hamiltonian(drive.rabi, drive.detuning, drive.phase, eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineSettings {
    /// Dephasing time T₂*, seconds; `f64::INFINITY` disables dephasing.
    pub t2_star: f64,
    /// Integrator steps per RF segment, `dt = T / steps`.
    pub steps_per_segment: usize,
    /// Check trace, Hermiticity, and positivity at every block boundary.
    pub check_invariants: bool,
}

impl Default for EngineSettings {
    fn default() -> Self {
        EngineSettings { t2_star: 0.2, steps_per_segment: 64, check_invariants: true }
    }
}

/// Output of [`evolve_master_equation`].
#[derive(Debug, Clone)]
pub struct Evolution {
    /// States at every block boundary, starting with the initial state.
    pub block_states: Vec<DensityMatrix>,
    /// `s(t)` at every integrator step, both ends included.
    pub signal: SignalTrace,
    /// Drive noise η (rad/s) held over each segment, in segment order.
    pub noise: Vec<f64>,
}

/// Piecewise-constant propagator with the exact pure-dephasing channel
/// `ρ_ab → e^{−h(a,b) t/T₂*} ρ_ab` (h the Hamming distance of the basis
/// labels), Strang-split around each unitary step.
struct Stepper {
    dim: usize,
    half_dephasing: Vec<f64>,
    u: ComplexMatrix,
    u_adj: ComplexMatrix,
    scratch: ComplexMatrix,
}

impl Stepper {
    fn new(dim: usize, dt: f64, t2_star: f64) -> Self {
        let mut half_dephasing = vec![1.0; dim * dim];
        if t2_star.is_finite() {
            for a in 0..dim {
                for b in 0..dim {
                    let flips = (a ^ b).count_ones() as f64;
                    half_dephasing[a * dim + b] = libm::exp(-flips * 0.5 * dt / t2_star);
                }
            }
        }
        Stepper {
            dim,
            half_dephasing,
            u: ComplexMatrix::identity(dim),
            u_adj: ComplexMatrix::identity(dim),
            scratch: ComplexMatrix::zeros(dim),
        }
    }

    fn set_hamiltonian(&mut self, h: &ComplexMatrix, dt: f64) -> Result<()> {
        self.u = h.hermitian_eigen()?.propagator(dt);
        self.u_adj = self.u.adjoint();
        Ok(())
    }

    fn dephase(&self, rho: &mut ComplexMatrix) {
        for (v, f) in rho.as_mut_slice().iter_mut().zip(&self.half_dephasing) {
            *v *= *f;
        }
    }

    fn step(&mut self, rho: &mut ComplexMatrix) {
        debug_assert_eq!(rho.dim(), self.dim);
        self.dephase(rho);
        crate::algebra::matmul_into(&self.u, rho, &mut self.scratch);
        crate::algebra::matmul_into(&self.scratch, &self.u_adj, rho);
        self.dephase(rho);
    }
}

/// Integrates `ρ̇ = −i[H, ρ] + (1/2T₂*) Σ_j (4 I_z^j ρ I_z^j − ρ)` over the
/// whole schedule.
///
/// Drive noise is sampled once per RF segment (τ ≫ T) and held.
pub fn evolve_master_equation(
    rho0: &DensityMatrix,
    model: &SampleModel,
    schedule: &Lg4Schedule,
    noise: &OuNoiseProcess,
    settings: &EngineSettings,
) -> Result<Evolution> {
    if rho0.dim() != model.dim() {
        return Err(Error::Contract(format!(
            "state dimension {} does not match the {}-spin model",
            rho0.dim(),
            model.n_spins()
        )));
    }
    if settings.steps_per_segment < MIN_STEPS_PER_SEGMENT {
        return Err(Error::Accuracy(format!(
            "{} steps per segment; at least {MIN_STEPS_PER_SEGMENT} are needed to resolve the drive",
            settings.steps_per_segment
        )));
    }
    if !(settings.t2_star > 0.0) {
        return Err(Error::Parameter(format!("T2* must be positive, got {}", settings.t2_star)));
    }
    let seg_t = schedule.segment_duration();
    let steps = settings.steps_per_segment;
    let dt = seg_t / steps as f64;
    let n_blocks = schedule.n_blocks();
    let eta = ou_sample_path(noise, seg_t, 4 * n_blocks, schedule.rabi())?;

    let mut stepper = Stepper::new(model.dim(), dt, settings.t2_star);
    let mut rho = rho0.matrix().clone();
    let t0 = rho0.time();
    let mut samples = Vec::with_capacity(n_blocks * 4 * steps + 1);
    samples.push(model.signal_scale * model.mean_polarization(&rho));
    let mut block_states = Vec::with_capacity(n_blocks + 1);
    block_states.push(rho0.clone());

    // noiseless segments repeat, so their propagators are cached
    let mut cached: [Option<(f64, ComplexMatrix, ComplexMatrix)>; 4] = [None, None, None, None];
    for block in 0..n_blocks {
        for (s, seg) in schedule.segments().iter().enumerate() {
            let eta_seg = eta[block * 4 + s];
            match &cached[s] {
                Some((e, u, ud)) if *e == eta_seg => {
                    stepper.u.clone_from(u);
                    stepper.u_adj.clone_from(ud);
                }
                _ => {
                    stepper.set_hamiltonian(&sample_hamiltonian(model, seg, eta_seg), dt)?;
                    cached[s] = Some((eta_seg, stepper.u.clone(), stepper.u_adj.clone()));
                }
            }
            for _ in 0..steps {
                stepper.step(&mut rho);
                let s = model.signal_scale * model.mean_polarization(&rho);
                if !s.is_finite() {
                    return Err(Error::Integrator { block, detail: "signal became non-finite".into() });
                }
                samples.push(s);
            }
        }
        let t = t0 + schedule.block_duration() * (block + 1) as f64;
        if settings.check_invariants {
            if let Some(detail) = state_defect(&rho, TRACE_TOL, HERMITIAN_TOL, POSITIVITY_TOL)? {
                return Err(Error::Integrator { block, detail });
            }
        }
        // strip the rounding drift so the check above sees one block's error
        let tr = rho.trace().re;
        rho = rho.hermitian_part().scaled(Complex64::new(1.0 / tr, 0.0));
        block_states.push(DensityMatrix { matrix: rho.clone(), time: t });
    }

    Ok(Evolution { block_states, signal: SignalTrace { dt, start_time: t0, samples }, noise: eta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::build_spin_operators;
    use approx::assert_relative_eq;

    #[test]
    fn pure_dephasing_of_single_coherence() {
        let ops = build_spin_operators(1).unwrap();
        let model = SampleModel::new(&ops, &[0.0], None).unwrap();
        let mut stepper = Stepper::new(2, 1e-3, 0.2);
        stepper.set_hamiltonian(&ComplexMatrix::zeros(2), 1e-3).unwrap();
        let c = Complex64::new(0.1, -0.2);
        let mut rho = ComplexMatrix::identity(2).scaled(Complex64::new(0.5, 0.0));
        rho.set(0, 1, c);
        rho.set(1, 0, c.conj());
        for _ in 0..250 {
            stepper.step(&mut rho);
        }
        let expected = c * libm::exp(-0.25 / 0.2);
        assert!((rho.get(0, 1) - expected).norm() < 1e-13);
        assert_eq!(model.mean_polarization(&rho), 0.0);
    }

    #[test]
    fn signal_scale_is_linear() {
        let sys = SpinSystem::protons(alloc::vec![Vec3::default()], alloc::vec![0.0], 2.1).unwrap();
        let k = signal_amplitude_scale(&sys);
        let expected = 2.675_221_874_4e8 * 1.054_571_817e-34 * 1e-7 * 5.2e28 * 4.1;
        assert_relative_eq!(k, expected, max_relative = 1e-9);
        let doubled = SpinSystem { geometric_factor: 8.2, ..sys.clone() };
        assert_relative_eq!(signal_amplitude_scale(&doubled), 2.0 * k, max_relative = 1e-15);
        assert_eq!(signal_amplitude_scale(&SpinSystem { spin_density: 0.0, ..sys }), 0.0);
    }

    #[test]
    fn linear_integral_matches_trapezoid_on_nodes() {
        let tr = SignalTrace { dt: 0.5, start_time: 1.0, samples: alloc::vec![0.0, 1.0, 4.0, 9.0] };
        assert_relative_eq!(tr.integral(1.0, 2.5), 0.5 * (0.5 + 2.5 + 6.5), max_relative = 1e-15);
        // inside one interval: interpolant is 1 + 6(t−1.5)
        assert_relative_eq!(tr.integral(1.6, 1.8), 0.2 * (1.0 + 6.0 * 0.2), max_relative = 1e-14);
        assert_relative_eq!(tr.value_at(1.75), 2.5, max_relative = 1e-15);
        assert_eq!(tr.integral(2.0, 1.0), 0.0);
    }

    #[test]
    fn coarse_step_rejected() {
        let ops = build_spin_operators(1).unwrap();
        let model = SampleModel::new(&ops, &[0.0], None).unwrap();
        let schedule = crate::sequence::build_lg4_schedule(1e5, 0.9, 1).unwrap();
        let rho = crate::sample::polarized_state(&ops, 1.0, Vec3::Z).unwrap();
        let settings = EngineSettings { steps_per_segment: 19, ..Default::default() };
        let err = evolve_master_equation(&rho, &model, &schedule, &OuNoiseProcess::silent(), &settings);
        assert!(matches!(err, Err(Error::Accuracy(_))));
    }
}
