//! Nuclear spin system: geometry, chemical shifts, dipolar couplings, and
//! the thermal initial state.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::algebra::{ComplexMatrix, SpinOperatorSet};
use crate::constants::{GAMMA_PROTON, HBAR, K_B, MU_0, PI};
use crate::dynamics::DensityMatrix;
use crate::vector::Vec3;
use crate::{Error, Result};

/// Closest allowed approach of two nuclei, meters.
pub const MIN_SEPARATION: f64 = 0.5e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinSystem {
    /// Nuclear positions, meters.
    pub positions: Vec<Vec3>,
    /// Chemical shift of each nucleus, ppm.
    pub shifts_ppm: Vec<f64>,
    /// Gyromagnetic ratio, rad/(s·T).
    pub gamma: f64,
    /// External field B₀, tesla.
    pub b0: f64,
    /// Number density of the observed spins σ_h, m⁻³.
    pub spin_density: f64,
    /// Dimensionless factor relating sample magnetization to the field at the sensor.
    pub geometric_factor: f64,
    /// Kelvin.
    pub temperature: f64,
}

impl SpinSystem {
    /// Proton system with the ethanol sample constants (σ_h = 5.2e28 m⁻³,
    /// g = 4.1) at 300 K.
    pub fn protons(positions: Vec<Vec3>, shifts_ppm: Vec<f64>, b0: f64) -> Result<Self> {
        let sys = SpinSystem {
            positions,
            shifts_ppm,
            gamma: GAMMA_PROTON,
            b0,
            spin_density: 5.2e28,
            geometric_factor: 4.1,
            temperature: 300.0,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn n_spins(&self) -> usize {
        self.positions.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return Err(Error::Geometry("spin system has no nuclei".into()));
        }
        if self.shifts_ppm.len() != self.positions.len() {
            return Err(Error::Geometry(format!(
                "{} positions but {} chemical shifts",
                self.positions.len(),
                self.shifts_ppm.len()
            )));
        }
        if let Some(i) = self.positions.iter().position(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("position of spin {i} is not finite")));
        }
        for i in 0..self.positions.len() {
            for j in (i + 1)..self.positions.len() {
                let r = (self.positions[j] - self.positions[i]).norm();
                if r <= MIN_SEPARATION {
                    return Err(Error::Geometry(format!(
                        "spins {i} and {j} are {:.3} Å apart (minimum 0.5 Å)",
                        r * 1e10
                    )));
                }
            }
        }
        let positive = [("b0", self.b0), ("temperature", self.temperature), ("gamma", self.gamma.abs())];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("spin_density", self.spin_density), ("geometric_factor", self.geometric_factor)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.shifts_ppm.iter().any(|s| !s.is_finite()) {
            return Err(Error::Parameter("chemical shifts must be finite".into()));
        }
        Ok(())
    }

    /// ω_L = γ B₀, rad/s.
    pub fn larmor(&self) -> f64 {
        self.gamma * self.b0
    }

    /// Thermal polarization `ε = ħγB₀/(k_B T)` of the high-temperature expansion.
    pub fn thermal_polarization(&self) -> f64 {
        HBAR * self.gamma * self.b0 / (K_B * self.temperature)
    }
}

/// Returns `(ω_L, [δ_i])` with `δ_i = γ B₀ ppm_i · 10⁻⁶`, all rad/s.
pub fn larmor_and_shifts(sys: &SpinSystem) -> (f64, Vec<f64>) {
    let larmor = sys.larmor();
    (larmor, sys.shifts_ppm.iter().map(|ppm| larmor * ppm * 1e-6).collect())
}

/// Secular couplings `d_ij` (rad/s) such that the dipolar Hamiltonian is
/// `Σ_{i<j} d_ij [3 I_z^i I_z^j − I⃗_i·I⃗_j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DipolarTable {
    n: usize,
    upper: Vec<f64>,
}

impl DipolarTable {
    pub fn n_spins(&self) -> usize {
        self.n
    }

    /// Coupling between `i` and `j` (symmetric, zero on the diagonal).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.upper[a * self.n - a * (a + 1) / 2 + (b - a - 1)]
    }

    /// `(i, j, d_ij)` for every `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn max_abs(&self) -> f64 {
        self.upper.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// Table with all couplings switched off.
    pub fn zeros(n: usize) -> Self {
        DipolarTable { n, upper: alloc::vec![0.0; n * n.saturating_sub(1) / 2] }
    }

    /// Table from explicit couplings, given in `pairs()` order.
    pub fn from_upper(n: usize, upper: Vec<f64>) -> Result<Self> {
        if upper.len() != n * n.saturating_sub(1) / 2 || upper.iter().any(|d| !d.is_finite()) {
            return Err(Error::Parameter(format!("expected {} finite couplings", n * n.saturating_sub(1) / 2)));
        }
        Ok(DipolarTable { n, upper })
    }
}

/// `d_ij = −μ₀ħγ²(3cos²θ_ij − 1)/(8π r_ij³)`, θ_ij the angle between r⃗_ij and `z_axis`.
pub fn dipolar_couplings(sys: &SpinSystem, z_axis: Vec3) -> Result<DipolarTable> {
    let z =
        z_axis.normalized().ok_or_else(|| Error::Parameter("crystal orientation must be a nonzero vector".into()))?;
    let n = sys.n_spins();
    let prefactor = MU_0 * HBAR * sys.gamma * sys.gamma / (8.0 * PI);
    let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let r = sys.positions[j] - sys.positions[i];
            let dist = r.norm();
            if !(dist > 0.0) || !dist.is_finite() {
                return Err(Error::Geometry(format!("spins {i} and {j} coincide")));
            }
            let cos_theta = r.dot(&z) / dist;
            upper.push(-prefactor * (3.0 * cos_theta * cos_theta - 1.0) / (dist * dist * dist));
        }
    }
    Ok(DipolarTable { n, upper })
}

/// High-temperature thermal state `ρ = 2^−N (𝟙 + ε Σ_i n̂·I⃗_i)` with the
/// magnetization along `orientation`.
pub fn thermal_state(ops: &SpinOperatorSet, sys: &SpinSystem, orientation: Vec3) -> Result<DensityMatrix> {
    if ops.n_spins() != sys.n_spins() {
        return Err(Error::Contract(format!("operator set has {} spins, sample has {}", ops.n_spins(), sys.n_spins())));
    }
    polarized_state(ops, sys.thermal_polarization(), orientation)
}

/// `2^−N (𝟙 + ε Σ_i n̂·I⃗_i)` for arbitrary polarization `ε ∈ [0, 2/N]`.
pub fn polarized_state(ops: &SpinOperatorSet, epsilon: f64, orientation: Vec3) -> Result<DensityMatrix> {
    if (orientation.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("orientation must be a unit vector, |n| = {}", orientation.norm())));
    }
    let dim = ops.dim();
    let mut rho = ComplexMatrix::identity(dim);
    rho.add_scaled(Complex64::new(epsilon, 0.0), &ops.total_along(orientation.0));
    let rho = rho.scaled(Complex64::new(1.0 / dim as f64, 0.0));
    DensityMatrix::new(rho, 0.0)
}
