//! Random instances shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use poisson_qi::channels::{ChannelSpec, KrausBlock};
use poisson_qi::estimation::LinearFamily;
use poisson_qi::psd::{apply_spectral_function, frobenius, CMatrix, HermitianMatrix, PsdMatrix};
use poisson_qi::{DensityOperator, IntensityOperator};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> HermitianMatrix {
    HermitianMatrix::symmetrized(gaussian_matrix(rng, dim, dim))
}

/// `A A†` with `A` Gaussian `dim × rank`, scaled to trace `n`.
pub fn random_psd<R: Rng>(rng: &mut R, dim: usize, rank: usize, n: f64) -> IntensityOperator {
    let a = gaussian_matrix(rng, dim, rank);
    let h = HermitianMatrix::symmetrized(&a * a.adjoint());
    let t = h.trace();
    IntensityOperator::from_hermitian(h.scale(n / t)).unwrap()
}

/// Full-rank intensity with trace in `[0.5, 4]`.
pub fn random_intensity<R: Rng>(rng: &mut R, dim: usize) -> IntensityOperator {
    let n = rng.random_range(0.5..4.0);
    random_psd(rng, dim, dim, n)
}

/// Intensity of random rank `1..=dim`.
pub fn random_intensity_any_rank<R: Rng>(rng: &mut R, dim: usize) -> IntensityOperator {
    let rank = rng.random_range(1..=dim);
    let n = rng.random_range(0.5..4.0);
    random_psd(rng, dim, rank, n)
}

pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> DensityOperator {
    let g = random_psd(rng, dim, dim, 1.0);
    g.normalized().unwrap()
}

/// Haar-like unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, dim, dim).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = DVector::from_iterator(dim, (0..dim).map(|k| r[(k, k)] / r[(k, k)].norm()));
    q * CMatrix::from_diagonal(&phases)
}

fn inverse_sqrt(h: &HermitianMatrix) -> HermitianMatrix {
    let p = PsdMatrix::new(h.clone()).unwrap();
    apply_spectral_function(&p, |x| 1.0 / x.sqrt(), false, 0.0).unwrap()
}

/// POVM with `outcomes` elements `S^{-1/2} B_j S^{-1/2}`, `B_j` random PSD.
pub fn random_povm<R: Rng>(rng: &mut R, dim: usize, outcomes: usize) -> Vec<HermitianMatrix> {
    let bs: Vec<HermitianMatrix> = (0..outcomes)
        .map(|j| {
            // a full-rank last element keeps Σ B_j invertible
            let rank = if j + 1 == outcomes { dim } else { rng.random_range(1..=dim) };
            random_psd(rng, dim, rank, 1.0).matrix().clone()
        })
        .collect();
    let mut s = HermitianMatrix::zeros(dim);
    for b in &bs {
        s = s.add(b).unwrap();
    }
    let w = inverse_sqrt(&s);
    bs.iter()
        .map(|b| HermitianMatrix::symmetrized(w.as_matrix() * b.as_matrix() * w.as_matrix()))
        .collect()
}

/// Kraus operators (`out × input`) with `Σ A†A ≤ c I` for random `c < 1`.
pub fn random_contraction_kraus<R: Rng>(rng: &mut R, out: usize, input: usize, count: usize) -> Vec<CMatrix> {
    let ks: Vec<CMatrix> = (0..count).map(|_| gaussian_matrix(rng, out, input)).collect();
    let mut s = CMatrix::zeros(input, input);
    for k in &ks {
        s += k.adjoint() * k;
    }
    let top = PsdMatrix::new(HermitianMatrix::symmetrized(s)).unwrap().max_eigenvalue();
    let shrink = (rng.random_range(0.3..1.0f64) / top).sqrt();
    ks.iter().map(|k| k * c(shrink)).collect()
}

/// A random operator-valued channel on `dim`, cycling through every kind.
pub fn random_channel<R: Rng>(rng: &mut R, dim: usize, which: usize) -> ChannelSpec {
    match which % 7 {
        0 => ChannelSpec::unitary(random_unitary(rng, dim)).unwrap(),
        1 => ChannelSpec::loss((0..dim).map(|_| rng.random_range(0.0..=1.0)).collect()).unwrap(),
        2 => ChannelSpec::background(random_intensity_any_rank(rng, dim)),
        3 => {
            let d = rng.random_range(1..=3);
            ChannelSpec::compose(random_intensity_any_rank(rng, d))
        }
        4 => {
            let mut keep: Vec<usize> = (0..dim).filter(|_| rng.random_bool(0.6)).collect();
            if keep.is_empty() {
                keep.push(rng.random_range(0..dim));
            }
            ChannelSpec::marginalize(keep, dim).unwrap()
        }
        5 => {
            let out = rng.random_range(1..=dim + 1);
            let count = rng.random_range(1..=3);
            let kraus = random_contraction_kraus(rng, out, dim, count);
            ChannelSpec::affine(random_intensity_any_rank(rng, out).scaled(0.5), kraus).unwrap()
        }
        _ => {
            let m = 1e4;
            let eps = rng.random_range(0.0..2.0) / m;
            let tau = random_density(rng, dim);
            let spec = tau.psd().spectrum().clone();
            let mut blocks: Vec<KrausBlock> = (0..dim)
                .map(|k| {
                    let v = spec.eigenvectors.column(k).into_owned() * c((eps * spec.eigenvalues[k].max(0.0)).sqrt());
                    KrausBlock { a10: Some(v), a11: None }
                })
                .collect();
            for a in random_contraction_kraus(rng, dim, dim, 2) {
                blocks.push(KrausBlock { a10: None, a11: Some(a) });
            }
            poisson_qi::channels::affine_from_kraus(&blocks, m * (1.0 - eps), 1e-3).unwrap()
        }
    }
}

/// `Γ(θ) = base + Σ θ_μ D_μ` with a well-conditioned full-rank base.
pub fn random_linear_family<R: Rng>(rng: &mut R, dim: usize, q: usize) -> LinearFamily {
    let base = random_intensity(rng, dim).matrix().add(&HermitianMatrix::identity(dim).scale(0.2)).unwrap();
    let directions = (0..q)
        .map(|_| {
            let d = random_hermitian(rng, dim);
            let norm = frobenius(d.as_matrix());
            d.scale(0.5 / norm)
        })
        .collect();
    LinearFamily { base, directions }
}

pub trait Scaled {
    fn scaled(&self, c: f64) -> Self;
}

impl Scaled for IntensityOperator {
    fn scaled(&self, c: f64) -> Self {
        IntensityOperator::from_hermitian(self.matrix().scale(c)).unwrap()
    }
}

pub fn max_abs_diff(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    (a.as_matrix() - b.as_matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Property-test configuration with a fixed seed, so runs are reproducible.
pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed_cafe),
        failure_persistence: None,
        ..proptest::test_runner::Config::default()
    }
}
