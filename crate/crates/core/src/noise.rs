//! Ornstein-Uhlenbeck amplitude noise on the RF drive.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Result};

/// Stationary OU process `η(t)` with exponential autocorrelation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuNoiseProcess {
    /// Correlation time τ, seconds.
    pub correlation_time: f64,
    /// Stationary standard deviation as a fraction of the Rabi frequency.
    pub relative_amplitude: f64,
    pub seed: u64,
}

impl OuNoiseProcess {
    pub fn new(correlation_time: f64, relative_amplitude: f64, seed: u64) -> Result<Self> {
        if !(correlation_time > 0.0) || !correlation_time.is_finite() {
            return Err(Error::Parameter(format!("OU correlation time must be positive, got {correlation_time}")));
        }
        if !(relative_amplitude >= 0.0) || !relative_amplitude.is_finite() {
            return Err(Error::Parameter(format!(
                "OU relative amplitude must be non-negative, got {relative_amplitude}"
            )));
        }
        Ok(OuNoiseProcess { correlation_time, relative_amplitude, seed })
    }

    /// Noise-free process.
    pub fn silent() -> Self {
        OuNoiseProcess { correlation_time: 1.0, relative_amplitude: 0.0, seed: 0 }
    }
}

/// Draws `n_steps` samples spaced by `dt` with the exact discretization
/// `x_{k+1} = x_k e^{−dt/τ} + σ √(1 − e^{−2dt/τ}) ξ_k`, started from the
/// stationary law, with `σ = relative_amplitude · rabi`.
pub fn ou_sample_path(process: &OuNoiseProcess, dt: f64, n_steps: usize, rabi: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parameter(format!("OU time step must be positive, got {dt}")));
    }
    let sigma = process.relative_amplitude * rabi.abs();
    if sigma == 0.0 {
        return Ok(alloc::vec![0.0; n_steps]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(process.seed);
    let decay = libm::exp(-dt / process.correlation_time);
    let kick = sigma * libm::sqrt(-libm::expm1(-2.0 * dt / process.correlation_time));
    let first: f64 = StandardNormal.sample(&mut rng);
    let mut x = sigma * first;
    let mut path = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        path.push(x);
        let xi: f64 = StandardNormal.sample(&mut rng);
        x = x * decay + kick * xi;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_amplitude_is_silent() {
        let p = OuNoiseProcess::new(1e-3, 0.0, 9).unwrap();
        assert!(ou_sample_path(&p, 1e-6, 100, 1e6).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn seeds_are_deterministic() {
        let p = OuNoiseProcess::new(1e-3, 0.01, 42).unwrap();
        let a = ou_sample_path(&p, 1e-6, 1000, 1e6).unwrap();
        let b = ou_sample_path(&p, 1e-6, 1000, 1e6).unwrap();
        assert_eq!(a, b);
        let c = ou_sample_path(&OuNoiseProcess { seed: 43, ..p }, 1e-6, 1000, 1e6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(OuNoiseProcess::new(0.0, 0.1, 0).is_err());
        assert!(OuNoiseProcess::new(1.0, -0.1, 0).is_err());
        assert!(ou_sample_path(&OuNoiseProcess::silent(), 0.0, 3, 1.0).is_err());
    }
}
