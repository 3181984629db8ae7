use approx::assert_abs_diff_eq;
use lg4nmr_core::algebra::{build_spin_operators, fidelity, matrix_exp, trace_distance, ComplexMatrix};
use lg4nmr_core::sample::polarized_state;
use lg4nmr_core::vector::Vec3;
use lg4nmr_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn close(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).frobenius_norm()
}

fn random_hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = ComplexMatrix::zeros(dim);
    for r in 0..dim {
        for c in r..dim {
            let v = if r == c {
                Complex64::new(rng.random_range(-1.0..1.0), 0.0)
            } else {
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
            };
            m.set(r, c, v);
            m.set(c, r, v.conj());
        }
    }
    m
}

/// Taylor series with scaling and squaring; independent of the eigensolver.
fn taylor_exp(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let squarings = 10;
    let a = h.scaled(-I * (t / f64::from(1 << squarings)));
    let mut sum = ComplexMatrix::identity(h.dim());
    let mut term = ComplexMatrix::identity(h.dim());
    for k in 1..30 {
        term = term.matmul(&a).scaled(Complex64::new(1.0 / k as f64, 0.0));
        sum = &sum + &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

#[test]
fn su2_algebra_on_every_spin() {
    let ops = build_spin_operators(3).unwrap();
    for i in 0..3 {
        let xy = ops.x(i).commutator(ops.y(i));
        assert!(close(&xy, &ops.z(i).scaled(I)) < 1e-14);
        let yz = ops.y(i).commutator(ops.z(i));
        assert!(close(&yz, &ops.x(i).scaled(I)) < 1e-14);
        let zx = ops.z(i).commutator(ops.x(i));
        assert!(close(&zx, &ops.y(i).scaled(I)) < 1e-14);
        let casimir = &(&ops.x(i).matmul(ops.x(i)) + &ops.y(i).matmul(ops.y(i))) + &ops.z(i).matmul(ops.z(i));
        assert!(close(&casimir, &ComplexMatrix::identity(8).scaled(Complex64::new(0.75, 0.0))) < 1e-14);
    }
}

#[test]
fn operators_on_different_spins_commute() {
    let ops = build_spin_operators(3).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            if i == j {
                continue;
            }
            for a in [ops.x(i), ops.y(i), ops.z(i)] {
                for b in [ops.x(j), ops.y(j), ops.z(j)] {
                    assert!(a.commutator(b).frobenius_norm() < 1e-15);
                }
            }
        }
    }
}

#[test]
fn exp_of_zero_is_identity() {
    let u = matrix_exp(&ComplexMatrix::zeros(4), 1.0).unwrap();
    assert!(close(&u, &ComplexMatrix::identity(4)) < 1e-15);
}

#[test]
fn full_turn_of_spin_half_is_minus_identity() {
    let ops = build_spin_operators(1).unwrap();
    let u = matrix_exp(ops.x(0), std::f64::consts::TAU).unwrap();
    assert!(close(&u, &ComplexMatrix::identity(2).scaled(Complex64::new(-1.0, 0.0))) < 1e-13);
}

#[test]
fn exp_matches_taylor_oracle() {
    for seed in 0..5 {
        let h = random_hermitian(4, seed);
        let u = matrix_exp(&h, 0.7).unwrap();
        assert!(close(&u, &taylor_exp(&h, 0.7)) < 1e-12, "seed {seed}");
    }
}

#[test]
fn propagators_are_unitary() {
    for seed in 0..5 {
        let h = random_hermitian(16, 100 + seed);
        let u = matrix_exp(&h, 3.0).unwrap();
        assert!(close(&u.matmul(&u.adjoint()), &ComplexMatrix::identity(16)) < 1e-12);
    }
}

#[test]
fn non_hermitian_generator_is_rejected() {
    let mut h = ComplexMatrix::zeros(2);
    h.set(0, 1, Complex64::new(1.0, 0.0));
    assert!(matrix_exp(&h, 1.0).is_err());
}

#[test]
fn thermal_state_rotates_with_its_axis() {
    let ops = build_spin_operators(2).unwrap();
    let n = Vec3::new(0.0, -1.0, 1.0).normalized().unwrap();
    let along_z = polarized_state(&ops, 0.3, Vec3::Z).unwrap();
    let along_n = polarized_state(&ops, 0.3, n).unwrap();
    // a π/4 turn about x carries z onto n
    let angle = std::f64::consts::FRAC_PI_4;
    let u = matrix_exp(&ops.total_along([1.0, 0.0, 0.0]), angle).unwrap();
    let rotated = u.matmul(along_z.matrix()).matmul(&u.adjoint());
    assert!(close(&rotated, along_n.matrix()) < 1e-14);
}

#[test]
fn fidelity_and_trace_distance_basics() {
    let ops = build_spin_operators(1).unwrap();
    let up = polarized_state(&ops, 2.0, Vec3::Z).unwrap();
    let down = polarized_state(&ops, 2.0, -Vec3::Z).unwrap();
    let mixed = polarized_state(&ops, 0.0, Vec3::Z).unwrap();
    assert_abs_diff_eq!(fidelity(up.matrix(), up.matrix()).unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(fidelity(up.matrix(), down.matrix()).unwrap(), 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(fidelity(up.matrix(), mixed.matrix()).unwrap(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(trace_distance(up.matrix(), down.matrix()).unwrap(), 1.0, epsilon = 1e-12);
}

proptest! {
    #[test]
    fn exp_composes_in_time(seed in 0u64..1000, t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let h = random_hermitian(4, seed);
        let lhs = matrix_exp(&h, t1).unwrap().matmul(&matrix_exp(&h, t2).unwrap());
        let rhs = matrix_exp(&h, t1 + t2).unwrap();
        prop_assert!(close(&lhs, &rhs) < 1e-11);
    }

    #[test]
    fn polarized_states_are_valid(eps in 0.0f64..0.6, theta in 0.0..std::f64::consts::PI, phi in 0.0..std::f64::consts::TAU) {
        let ops = build_spin_operators(3).unwrap();
        let n = Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos());
        let rho = polarized_state(&ops, eps, n).unwrap();
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.matrix().is_hermitian(1e-12));
        prop_assert!(rho.matrix().hermitian_eigen().unwrap().min_value() > -1e-12);
    }
}
