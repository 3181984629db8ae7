use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::sequence::Axis;
use crate::{Error, Result};

/// Largest register: `2^12 = 4096` rows.
pub const MAX_SPINS: usize = 12;

/// Per-spin Cartesian spin-1/2 operators embedded in the `2^N` register.
///
/// Spin 0 is the most significant tensor factor, so basis index `a` has spin
/// `i` up when bit `N−1−i` of `a` is clear.
#[derive(Debug, Clone)]
pub struct SpinOperatorSet {
    n_spins: usize,
    x: Vec<ComplexMatrix>,
    y: Vec<ComplexMatrix>,
    z: Vec<ComplexMatrix>,
}

impl SpinOperatorSet {
    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn x(&self, spin: usize) -> &ComplexMatrix {
        &self.x[spin]
    }

    pub fn y(&self, spin: usize) -> &ComplexMatrix {
        &self.y[spin]
    }

    pub fn z(&self, spin: usize) -> &ComplexMatrix {
        &self.z[spin]
    }

    /// `n·I⃗` for spin `spin`.
    pub fn along(&self, spin: usize, n: [f64; 3]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim());
        out.add_scaled(Complex64::new(n[0], 0.0), &self.x[spin]);
        out.add_scaled(Complex64::new(n[1], 0.0), &self.y[spin]);
        out.add_scaled(Complex64::new(n[2], 0.0), &self.z[spin]);
        out
    }

    /// `Σ_i n·I⃗_i`.
    pub fn total_along(&self, n: [f64; 3]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim());
        for i in 0..self.n_spins {
            out.add_scaled(Complex64::new(n[0], 0.0), &self.x[i]);
            out.add_scaled(Complex64::new(n[1], 0.0), &self.y[i]);
            out.add_scaled(Complex64::new(n[2], 0.0), &self.z[i]);
        }
        out
    }

    /// `I⃗_i·I⃗_j`.
    pub fn scalar_product(&self, i: usize, j: usize) -> ComplexMatrix {
        let mut out = self.x[i].matmul(&self.x[j]);
        out.add_scaled(Complex64::new(1.0, 0.0), &self.y[i].matmul(&self.y[j]));
        out.add_scaled(Complex64::new(1.0, 0.0), &self.z[i].matmul(&self.z[j]));
        out
    }

    /// `m_z` of spin `spin` in computational basis state `index` (±1/2).
    #[inline]
    pub fn z_eigenvalue(&self, spin: usize, index: usize) -> f64 {
        if (index >> (self.n_spins - 1 - spin)) & 1 == 0 {
            0.5
        } else {
            -0.5
        }
    }
}

/// Builds `I_x^i, I_y^i, I_z^i` for `n_spins` spin-1/2 particles.
pub fn build_spin_operators(n_spins: usize) -> Result<SpinOperatorSet> {
    if n_spins == 0 || n_spins > MAX_SPINS {
        return Err(Error::Capacity(format!("{n_spins} spins requested, supported range is 1..={MAX_SPINS}")));
    }
    let dim = 1usize << n_spins;
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let mut x = Vec::with_capacity(n_spins);
    let mut y = Vec::with_capacity(n_spins);
    let mut z = Vec::with_capacity(n_spins);
    for spin in 0..n_spins {
        let bit = 1usize << (n_spins - 1 - spin);
        let mut ix = ComplexMatrix::zeros(dim);
        let mut iy = ComplexMatrix::zeros(dim);
        let mut iz = ComplexMatrix::zeros(dim);
        for a in 0..dim {
            let b = a ^ bit;
            let up = a & bit == 0;
            ix.set(a, b, half);
            // σ_y = [[0, −i], [i, 0]]: ⟨up|σ_y|down⟩ = −i
            iy.set(a, b, if up { -half_i } else { half_i });
            iz.set(a, a, if up { half } else { -half });
        }
        x.push(ix);
        y.push(iy);
        z.push(iz);
    }
    Ok(SpinOperatorSet { n_spins, x, y, z })
}

/// Unit-normalized spin operator of `spin` along one of the four LG4 axes.
pub fn tilted_axis_operator(
    ops: &SpinOperatorSet,
    spin: usize,
    axis: Axis,
    rabi: f64,
    detuning: f64,
    alpha: f64,
) -> Result<ComplexMatrix> {
    let n = axis.direction(rabi, detuning, alpha)?;
    Ok(ops.along(spin, n.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn single_spin_z() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(ops.z(0), &ComplexMatrix::from_real_diagonal(&[0.5, -0.5]));
    }

    #[test]
    fn two_spin_embedding_of_first_spin() {
        let ops = build_spin_operators(2).unwrap();
        assert_eq!(ops.z(0), &ComplexMatrix::from_real_diagonal(&[0.5, 0.5, -0.5, -0.5]));
        assert_eq!(ops.z(1), &ComplexMatrix::from_real_diagonal(&[0.5, -0.5, 0.5, -0.5]));
    }

    #[test]
    fn three_spin_commutator_entrywise() {
        // [I_x^2, I_y^2] = i I_z^2, checked with an explicit triple loop
        let ops = build_spin_operators(3).unwrap();
        let (a, b) = (ops.x(1), ops.y(1));
        let n = ops.dim();
        for r in 0..n {
            for col in 0..n {
                let mut ab = c(0.0);
                let mut ba = c(0.0);
                for k in 0..n {
                    ab += a.get(r, k) * b.get(k, col);
                    ba += b.get(r, k) * a.get(k, col);
                }
                let expected = Complex64::new(0.0, 1.0) * ops.z(1).get(r, col);
                assert_abs_diff_eq!((ab - ba - expected).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn capacity_limits() {
        assert!(matches!(build_spin_operators(0), Err(Error::Capacity(_))));
        assert!(matches!(build_spin_operators(13), Err(Error::Capacity(_))));
    }

    #[test]
    fn untilted_axis_is_y() {
        let ops = build_spin_operators(1).unwrap();
        let ia = tilted_axis_operator(&ops, 0, Axis::A, 1.0, 0.0, 0.0).unwrap();
        assert!((&ia - ops.y(0)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn lg_axis_z_component() {
        let delta = 1.0;
        let ops = build_spin_operators(1).unwrap();
        let ia = tilted_axis_operator(&ops, 0, Axis::A, delta * 2f64.sqrt(), delta, 55f64.to_radians()).unwrap();
        // I_z coefficient sits on the diagonal as ±n_z/2
        assert_abs_diff_eq!(2.0 * ia.get(0, 0).re, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(1.0 / 3f64.sqrt(), 0.57735, epsilon = 1e-5);
    }

    #[test]
    fn bar_axes_are_negations() {
        let ops = build_spin_operators(2).unwrap();
        for (axis, bar) in [(Axis::A, Axis::ABar), (Axis::B, Axis::BBar)] {
            let p = tilted_axis_operator(&ops, 1, axis, 3.0, -1.2, 0.4).unwrap();
            let q = tilted_axis_operator(&ops, 1, bar, 3.0, -1.2, 0.4).unwrap();
            assert_eq!(q, -&p);
        }
    }

    #[test]
    fn degenerate_axis() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(tilted_axis_operator(&ops, 0, Axis::B, 0.0, 0.0, 0.3), Err(Error::DegenerateAxis));
    }
}
