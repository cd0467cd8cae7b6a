mod common;

use common::*;
use proptest::prelude::*;

use poisson_qi::psd::{apply_spectral_function, frobenius, validate_psd, HermitianMatrix, PsdMatrix, Tolerances};
use poisson_qi::state::{intensity_from_density, single_mode_matrix, RareStateSpec};
use poisson_qi::Error;

fn rel_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    let scale = frobenius(b.as_matrix()).max(f64::MIN_POSITIVE);
    frobenius(&(a.as_matrix() - b.as_matrix())) / scale
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn identity_function_reconstructs(seed in any::<u64>(), dim in 1usize..=12) {
        let mut r = rng(seed);
        let g = random_intensity_any_rank(&mut r, dim);
        let back = apply_spectral_function(g.psd(), |x| x, false, 0.0).unwrap();
        prop_assert!(rel_diff(&back, g.matrix()) <= Tolerances::default().recon);
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), dim in 1usize..=16) {
        let mut r = rng(seed);
        let g = random_intensity(&mut r, dim);
        let s = g.psd().sqrt();
        let sq = HermitianMatrix::symmetrized(s.as_matrix() * s.as_matrix());
        prop_assert!(rel_diff(&sq, g.matrix()) <= Tolerances::default().recon);
    }

    #[test]
    fn spectral_functions_commute_with_unitaries(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let g = random_intensity(&mut r, dim);
        let u = random_unitary(&mut r, dim);
        let rotated = PsdMatrix::new(g.matrix().congruence(&u).unwrap()).unwrap();
        let f = |x: f64| x.powf(0.37) + (1.0 + x).ln();
        let lhs = apply_spectral_function(&rotated, f, false, 0.0).unwrap();
        let rhs = apply_spectral_function(g.psd(), f, false, 0.0).unwrap().congruence(&u).unwrap();
        prop_assert!(rel_diff(&lhs, &rhs) <= Tolerances::default().recon);
    }

    #[test]
    fn rare_state_has_unit_trace(seed in any::<u64>(), dim in 1usize..=6, eps in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let tau = random_density(&mut r, dim);
        let spec = RareStateSpec::new(eps, tau, 1000).unwrap();
        let rho = single_mode_matrix(&spec).unwrap();
        prop_assert!((rho.matrix().trace() - 1.0).abs() < 1e-12);
        prop_assert!((rho.matrix().as_matrix()[(0, 0)].re - (1.0 - eps)).abs() < 1e-15);
    }

    #[test]
    fn scaling_a_density_scales_its_spectrum(seed in any::<u64>(), dim in 1usize..=6, n in 0.01f64..50.0) {
        let mut r = rng(seed);
        let tau = random_density(&mut r, dim);
        let g = intensity_from_density(&tau, n).unwrap();
        let vecs = tau.psd().spectrum().eigenvectors.clone();
        let vals = &tau.psd().spectrum().eigenvalues;
        for k in 0..dim {
            let v = vecs.column(k);
            let gv = g.matrix().as_matrix() * v;
            let resid = (&gv - v * common::c(n * vals[k])).norm();
            prop_assert!(resid <= 1e-10 * n);
        }
    }
}

#[test]
fn negative_eigenvalues_clip_within_tolerance_only() {
    let slightly = HermitianMatrix::from_diagonal(&[1.0, -1e-12]);
    let p = validate_psd(&slightly, 1e-10).unwrap();
    assert_eq!(p.eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
    let clearly = HermitianMatrix::from_diagonal(&[1.0, -1e-6]);
    assert!(matches!(validate_psd(&clearly, 1e-10), Err(Error::NegativeEigenvalue { .. })));
}
