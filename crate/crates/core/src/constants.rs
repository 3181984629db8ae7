//! CODATA 2018 values, SI units.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;

/// Vacuum permeability, N/A².
pub const MU_0: f64 = 1.256_637_062_12e-6;

/// Proton gyromagnetic ratio, rad/(s·T).
pub const GAMMA_PROTON: f64 = 2.675_221_874_4e8;

/// Electron gyromagnetic ratio, rad/(s·T). Negative: the electron moment is
/// antiparallel to its spin.
pub const GAMMA_ELECTRON: f64 = -1.760_859_630_23e11;

pub const PI: f64 = core::f64::consts::PI;
pub const TAU: f64 = core::f64::consts::TAU;

/// `arccos(1/√3)`, where `3cos²θ − 1` vanishes.
pub fn magic_angle() -> f64 {
    libm::acos(1.0 / libm::sqrt(3.0))
}
