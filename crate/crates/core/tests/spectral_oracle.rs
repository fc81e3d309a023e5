mod common;

use common::oracle::{hermitian_eigenvalues, random_hermitian, relative_spectral_gap, tridiagonal_eigenvalue};
use idslab_core::spectral::{self, norm_proxy};
use idslab_core::{build_hamiltonian, BoundaryCondition, BoxSpec, CMatrix, MagneticField};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn random_hermitian_matrices_match_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let n = rng.random_range(1..=48);
        let m = random_hermitian(n, &mut rng);
        let ours = spectral::eigenvalues_of(&m).unwrap();
        let reference = hermitian_eigenvalues(&m);
        let tol = 1e-8 * norm_proxy(&m);
        for (a, b) in ours.eigenvalues().iter().zip(&reference) {
            assert!((a - b).abs() <= tol, "n = {n}: {a} vs {b}");
        }
        let trace = m.trace().re;
        assert!((ours.sum() - trace).abs() <= 1e-10 * trace.abs().max(norm_proxy(&m)));
    }
}

#[test]
fn free_chain_matches_sturm_bisection() {
    let bx = BoxSpec::new(vec![30], 0.3, BoundaryCondition::Dirichlet).unwrap();
    let v: Vec<f64> = (0..30).map(|i| ((i * 37) % 11) as f64 / 5.0 - 1.0).collect();
    let op = build_hamiltonian(&bx, &MagneticField::zero(1), &v).unwrap();
    let m = op.matrix();
    let diag: Vec<f64> = (0..30).map(|i| m[(i, i)].re).collect();
    let off: Vec<f64> = (0..29).map(|i| m[(i, i + 1)].re).collect();
    let s = spectral::eigenvalues(&op).unwrap();
    for (k, &l) in s.eigenvalues().iter().enumerate() {
        assert!((l - tridiagonal_eigenvalue(&diag, &off, k)).abs() < 1e-10 * s.scale());
    }
}

#[test]
fn eigenvalues_move_at_most_by_perturbation_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let n = rng.random_range(2..=24);
        let h = random_hermitian(n, &mut rng);
        let p = random_hermitian(n, &mut rng).map(|z| z * 1e-2);
        let p_norm = hermitian_eigenvalues(&p).iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let a = spectral::eigenvalues_of(&h).unwrap();
        let b = spectral::eigenvalues_of(&h.add(&p)).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() <= p_norm * (1.0 + 1e-10) + 1e-12);
        }
    }
}

#[test]
fn eigenvectors_diagonalize() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random_hermitian(20, &mut rng);
    let dec = spectral::eigen_decomposition_of(&m).unwrap();
    let v = &dec.vectors;
    let lam =
        CMatrix::from_diagonal(&dec.spectrum.eigenvalues().iter().map(|&l| Complex64::new(l, 0.0)).collect::<Vec<_>>());
    let back = v.matmul(&lam).matmul(&v.adjoint());
    assert!(back.max_abs_diff(&m) < 1e-10 * norm_proxy(&m));
    assert!(v.adjoint().matmul(v).max_abs_diff(&CMatrix::identity(20)) < 1e-12);
}

#[test]
fn spectra_of_reference_and_library_agree_on_magnetic_boxes() {
    let bx = BoxSpec::cube(2, 5, 0.7, BoundaryCondition::Neumann).unwrap();
    let op = build_hamiltonian(&bx, &MagneticField::planar(2, 1.3).unwrap(), &[0.4; 25]).unwrap();
    let ours = spectral::eigenvalues(&op).unwrap();
    assert!(relative_spectral_gap(ours.eigenvalues(), &hermitian_eigenvalues(op.matrix())) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inertia_count_matches_spectrum(seed in any::<u64>(), n in 1usize..24, e in -4.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(n, &mut rng);
        let s = spectral::eigenvalues_of(&m).unwrap();
        let guard = 1e-9 * norm_proxy(&m);
        prop_assume!(s.eigenvalues().iter().all(|l| (l - e).abs() > guard));
        prop_assert_eq!(spectral::count_below_inertia_of(&m, e).unwrap(), s.count_below(e));
    }

    #[test]
    fn real_and_complex_paths_agree(seed in any::<u64>(), n in 1usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(n, &mut rng).map(|z| Complex64::new(z.re, 0.0));
        let s = spectral::eigenvalues_of(&m).unwrap();
        prop_assert!(relative_spectral_gap(s.eigenvalues(), &hermitian_eigenvalues(&m)) < 1e-12);
    }
}
