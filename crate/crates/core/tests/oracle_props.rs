mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;

use poisson_qi::estimation::{derivative, helstrom, ParamFamily, DEFAULT_FD_STEP};
use poisson_qi::imaging::HermiteGaussFamily;
use poisson_qi::oracle::*;
use poisson_qi::state::RareStateSpec;

const M_LIST: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];

proptest! {
    #![proptest_config(config(48))]

    #[test]
    fn finite_m_values_stay_in_range(
        seed in any::<u64>(), dim in 1usize..=4, m in 1u64..1_000_000, s in 0.0f64..=1.0,
        ea in 0.0f64..=1.0, eb in 0.0f64..=1.0,
    ) {
        let mut r = rng(seed);
        let a = RareStateSpec::new(ea, random_density(&mut r, dim), m).unwrap();
        let b = RareStateSpec::new(eb, random_density(&mut r, dim), m).unwrap();
        let q = finite_m_quantities(&a, &b, s).unwrap();
        prop_assert!(q.fidelity >= 0.0 && q.fidelity <= 1.0);
        prop_assert!(q.chernoff >= 0.0 && q.chernoff <= 1.0 + 1e-12);
        prop_assert!(q.relative_entropy.as_f64() >= 0.0);
    }

    #[test]
    fn random_pairs_converge_at_rate_one_over_m(seed in any::<u64>(), s in 0.1f64..0.9) {
        let mut r = rng(seed);
        let a = random_intensity(&mut r, 2);
        let b = random_intensity(&mut r, 2);
        for kind in [ConvergenceKind::Fidelity, ConvergenceKind::Chernoff, ConvergenceKind::Kl] {
            let rows = convergence_sweep(kind, &a, &b, &M_LIST, s).unwrap();
            prop_assert_eq!(rows.len(), M_LIST.len());
            let slope = loglog_slope(&rows).unwrap();
            prop_assert!((slope + 1.0).abs() <= 0.2, "{kind:?} slope {slope}");
            prop_assert!(rows.last().unwrap().abs_error <= 1e-4);
        }
    }

    #[test]
    fn finite_m_helstrom_adds_the_vacuum_term(seed in any::<u64>(), dim in 1usize..=4, q in 1usize..=2, m in 20u64..10_000) {
        let mut r = rng(seed);
        let fam = random_linear_family(&mut r, dim, q);
        let theta = vec![0.0; q];
        let g = fam.gamma(&theta).unwrap();
        prop_assume!(g.n() < m as f64);
        let k = helstrom(&fam, &theta, DEFAULT_FD_STEP).unwrap();
        let km = finite_m_helstrom(&fam, &theta, m, DEFAULT_FD_STEP).unwrap();
        let dn: Vec<f64> = (0..q).map(|mu| derivative(&fam, &theta, mu, DEFAULT_FD_STEP).unwrap().trace()).collect();
        let eps = g.n() / m as f64;
        for mu in 0..q {
            for nu in 0..q {
                let expected = k.entry(mu, nu) + dn[mu] * dn[nu] / (m as f64 * (1.0 - eps));
                prop_assert!((km[(mu, nu)] - expected).abs() <= 1e-8 * (1.0 + expected.abs()), "{} vs {expected}", km[(mu, nu)]);
            }
        }
    }
}

#[test]
fn helstrom_sweep_converges() {
    let mut r = rng(3);
    let a = random_intensity(&mut r, 2);
    let b = random_intensity(&mut r, 2);
    let rows = convergence_sweep(ConvergenceKind::Helstrom, &a, &b, &M_LIST, 0.5).unwrap();
    let slope = loglog_slope(&rows).unwrap();
    assert!((slope + 1.0).abs() <= 0.2, "slope {slope}");
}

#[test]
fn imaging_family_converges_to_poisson_helstrom() {
    let fam = HermiteGaussFamily::new(1.0, Complex64::new(0.0, 0.0), 2.5);
    let k = helstrom(&fam, &[2.0], DEFAULT_FD_STEP).unwrap().entry(0, 0);
    let km = finite_m_helstrom(&fam, &[2.0], 1_000_000, DEFAULT_FD_STEP).unwrap()[(0, 0)];
    assert!((km - k).abs() <= 1e-4 * k, "{km} vs {k}");
    assert!((k - 0.5).abs() < 1e-8);
}

#[test]
fn huge_mode_counts_do_not_cancel() {
    let mut r = rng(8);
    let a = random_intensity(&mut r, 3);
    let b = random_intensity(&mut r, 3);
    let rows = convergence_sweep(ConvergenceKind::Fidelity, &a, &b, &[10_000_000, 100_000_000], 0.5).unwrap();
    assert!(rows[1].abs_error < rows[0].abs_error);
    assert!(rows[1].abs_error < 1e-7);
}
