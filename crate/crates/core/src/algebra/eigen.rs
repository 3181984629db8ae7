use alloc::format;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::matrix::ComplexMatrix;
use crate::{Error, Result};

/// Relative Frobenius tolerance for treating an input as Hermitian.
pub(crate) const HERMITIAN_TOL: f64 = 1e-12;

/// Spectral decomposition `H = V diag(λ) V†` of a Hermitian matrix.
///
/// Eigenvalues are ascending; eigenvectors are the columns of `V`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// `V diag(f(λ)) V†`.
    pub fn map(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.values.len();
        let fl: Vec<Complex64> = self.values.iter().map(|&l| f(l)).collect();
        let v = self.vectors.as_slice();
        let mut out = ComplexMatrix::zeros(n);
        let data = out.as_mut_slice();
        for r in 0..n {
            for c in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[r * n + k] * fl[k] * v[c * n + k].conj();
                }
                data[r * n + c] = acc;
            }
        }
        out
    }

    pub fn map_real(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        self.map(|l| Complex64::new(f(l), 0.0))
    }

    /// Propagator `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> ComplexMatrix {
        self.map(|l| {
            let phase = -l * t;
            Complex64::new(libm::cos(phase), libm::sin(phase))
        })
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

impl ComplexMatrix {
    /// Eigendecomposition of a Hermitian matrix (the lower triangle is used).
    pub fn hermitian_eigen(&self) -> Result<HermitianEigen> {
        let n = self.dim();
        let m = DMatrix::from_row_slice(n, n, self.as_slice());
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("eigendecomposition of {n}x{n} matrix did not converge")));
        }
        let mut vectors = ComplexMatrix::zeros(n);
        for (col, &k) in order.iter().enumerate() {
            for r in 0..n {
                vectors.set(r, col, eig.eigenvectors[(r, k)]);
            }
        }
        Ok(HermitianEigen { values, vectors })
    }
}

/// `U = exp(−iHt)` for Hermitian `H`.
pub fn matrix_exp(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::Contract(format!("matrix_exp needs a Hermitian generator (relative defect {defect:.3e})")));
    }
    Ok(h.hermitian_eigen()?.propagator(t))
}
