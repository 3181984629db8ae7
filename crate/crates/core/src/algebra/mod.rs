//! Dense complex linear algebra for spin-1/2 registers.

mod eigen;
mod matrix;
mod spin;

pub use eigen::{matrix_exp, HermitianEigen};
pub(crate) use matrix::matmul_into;
pub use matrix::ComplexMatrix;
pub use spin::{build_spin_operators, tilted_axis_operator, SpinOperatorSet, MAX_SPINS};

/// Uhlmann fidelity `(Tr √(√ρ σ √ρ))²` between two density matrices.
///
/// Slightly negative eigenvalues from round-off are clamped to zero.
pub fn fidelity(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> crate::Result<f64> {
    let sqrt_rho = rho.hermitian_eigen()?.map_real(|l| libm::sqrt(l.max(0.0)));
    let inner = sqrt_rho.matmul(sigma).matmul(&sqrt_rho);
    let inner = inner.hermitian_part();
    let eig = inner.hermitian_eigen()?;
    let root_sum: f64 = eig.values().iter().map(|&l| libm::sqrt(l.max(0.0))).sum();
    Ok(root_sum * root_sum)
}

/// Trace distance `½‖ρ − σ‖₁`.
pub fn trace_distance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> crate::Result<f64> {
    let diff = (rho - sigma).hermitian_part();
    let eig = diff.hermitian_eigen()?;
    Ok(0.5 * eig.values().iter().map(|l| l.abs()).sum::<f64>())
}
