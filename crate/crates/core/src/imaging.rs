//! Two partially coherent point sources under a Gaussian point-spread
//! function: Helstrom information for the separation `θ`.
//!
//! The one-photon intensity operator is
//! `Γ = N0 (|ψ1⟩⟨ψ1| + |ψ2⟩⟨ψ2| + γ|ψ1⟩⟨ψ2| + γ*|ψ2⟩⟨ψ1|)` with
//! `ψ1(x) = ψ(x + θ/2)`, `ψ2(x) = ψ(x - θ/2)` and
//! `ψ(x) = (2π)^{-1/4} exp(-x²/4)`.
//!
//! The sweep expands `Γ` and `∂Γ/∂θ` in the nonorthogonal basis
//! `{ψ1, ψ2, ∂ψ1, ∂ψ2}` and uses the Gram-matrix SLD solver. A second,
//! orthonormal route expands the shifted Gaussians in Hermite-Gaussian
//! modes (they are coherent states with amplitude `∓θ/4`).

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::divergences::IntensityVector;
use crate::error::{Error, Result};
use crate::estimation::{sld_gram, GramBasisProblem, ParamFamily, DEFAULT_DELTA_REG};
use crate::psd::{CMatrix, HermitianMatrix};
use crate::state::IntensityOperator;

const THETA_STEP: f64 = 0.05;
const THETA_POINTS: usize = 160;
const GAMMA_POINTS: usize = 11;

/// Bin width and half-range of the discretized direct-imaging measurement.
pub const DIRECT_BIN_WIDTH: f64 = 0.1;
pub const DIRECT_HALF_RANGE: f64 = 12.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingConfig {
    pub n0: f64,
    pub theta_grid: Vec<f64>,
    pub gamma_grid: Vec<Complex64>,
    pub delta_reg: f64,
}

impl Default for ImagingConfig {
    /// `θ = 0.05, 0.10, ..., 8`, `γ = -1, -0.8, ..., 1`, `δ = 1e-13`, `N0 = 1`.
    fn default() -> Self {
        ImagingConfig {
            n0: 1.0,
            theta_grid: (1..=THETA_POINTS).map(|k| THETA_STEP * k as f64).collect(),
            gamma_grid: (0..GAMMA_POINTS)
                .map(|m| Complex64::new((m as f64 - 5.0) / 5.0, 0.0))
                .collect(),
            delta_reg: DEFAULT_DELTA_REG,
        }
    }
}

impl ImagingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n0 > 0.0) || !self.n0.is_finite() {
            return Err(Error::InvalidConfig(format!("N0 must be positive, got {}", self.n0)));
        }
        if let Some(g) = self.gamma_grid.iter().find(|g| g.norm() > 1.0 + 1e-12) {
            return Err(Error::InvalidConfig(format!("|gamma| must not exceed 1, got {g}")));
        }
        if self.theta_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidConfig("theta grid must be strictly positive".into()));
        }
        if self.theta_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("theta grid must be strictly ascending".into()));
        }
        if !(self.delta_reg > 0.0) {
            return Err(Error::InvalidRegularization(self.delta_reg));
        }
        Ok(())
    }
}

/// `ψ(x) = (2π)^{-1/4} exp(-x²/4)`.
pub fn gaussian_psf(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-0.25) * (-0.25 * x * x).exp()
}

/// Analytic Gram matrix of `{ψ1, ψ2, ∂θψ1, ∂θψ2}`.
pub fn gram_matrix(theta: f64) -> HermitianMatrix {
    let e = (-theta * theta / 8.0).exp();
    let g14 = -theta / 8.0 * e;
    let g34 = (theta * theta - 4.0) / 64.0 * e;
    #[rustfmt::skip]
    let rows = [
        1.0, e,   0.0,  g14,
        e,   1.0, g14,  0.0,
        0.0, g14, 1.0 / 16.0, g34,
        g14, 0.0, g34,  1.0 / 16.0,
    ];
    HermitianMatrix::from_real(4, &rows).expect("symmetric by construction")
}

/// Coefficient matrices `(Γ̃, Δ̃)` of `Γ` and `∂Γ/∂θ` in the Gram basis.
pub fn gamma_and_derivative(n0: f64, gamma: Complex64) -> Result<(HermitianMatrix, HermitianMatrix)> {
    if gamma.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidConfig(format!("|gamma| must not exceed 1, got {gamma}")));
    }
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let gc = gamma.conj();
    let gt = CMatrix::from_row_slice(4, 4, &[o, gamma, z, z, gc, o, z, z, z, z, z, z, z, z, z, z]);
    let dt = CMatrix::from_row_slice(4, 4, &[z, z, o, gamma, z, z, gc, o, o, gamma, z, z, gc, o, z, z]);
    let s = Complex64::new(n0, 0.0);
    Ok((HermitianMatrix::symmetrized(gt * s), HermitianMatrix::symmetrized(dt * s)))
}

/// `N = 2N0 (1 + Re(γ) exp(-θ²/8))`.
pub fn expected_photon_number(n0: f64, gamma: Complex64, theta: f64) -> f64 {
    2.0 * n0 * (1.0 + gamma.re * (-theta * theta / 8.0).exp())
}

/// `K(Γ)/(N0/2)` at one `(γ, θ)` via the Gram-matrix solver.
///
/// The regularization is applied as `δ·N0`, so the normalized value does
/// not depend on `N0`.
pub fn normalized_helstrom(n0: f64, gamma: Complex64, theta: f64, delta_reg: f64) -> Result<f64> {
    let (gt, dt) = gamma_and_derivative(n0, gamma)?;
    let p = GramBasisProblem::new(gram_matrix(theta), gt, dt, delta_reg * n0)?;
    let (_, k) = sld_gram(&p)?;
    Ok(k / (n0 / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: Complex64,
    pub theta: f64,
    pub k_normalized: f64,
}

/// All `(γ, θ)` grid points, `γ`-major and `θ`-minor.
pub fn helstrom_sweep(cfg: &ImagingConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let points: Vec<(Complex64, f64)> = cfg
        .gamma_grid
        .iter()
        .flat_map(|&g| cfg.theta_grid.iter().map(move |&t| (g, t)))
        .collect();
    points
        .par_iter()
        .map(|&(gamma, theta)| {
            normalized_helstrom(cfg.n0, gamma, theta, cfg.delta_reg).map(|k| SweepRow {
                gamma,
                theta,
                k_normalized: k,
            })
        })
        .collect()
}

/// Hermite-Gaussian mode count that captures coherent amplitudes up to `|α|`.
pub fn hermite_gauss_dim(alpha_max: f64) -> usize {
    let q = alpha_max * alpha_max;
    (q + 10.0 * q.sqrt() + 30.0).ceil() as usize
}

/// Coherent-state coefficients `exp(-α²/2) α^q / sqrt(q!)` and their `α`-derivatives.
fn coherent(alpha: f64, dim: usize) -> (DVector<f64>, DVector<f64>) {
    let mut c = DVector::zeros(dim);
    let mut dc = DVector::zeros(dim);
    let pref = (-0.5 * alpha * alpha).exp();
    // a_q = α^q / sqrt(q!) by recurrence
    let mut a_prev = 0.0;
    let mut a = 1.0;
    for q in 0..dim {
        c[q] = pref * a;
        // d/dα [α^q/sqrt(q!)] = sqrt(q) α^{q-1}/sqrt((q-1)!)
        dc[q] = pref * ((q as f64).sqrt() * a_prev - alpha * a);
        a_prev = a;
        a *= alpha / ((q + 1) as f64).sqrt();
    }
    (c, dc)
}

/// The imaging family `Γ(θ)` in a truncated Hermite-Gaussian basis, with
/// analytic derivative.
pub struct HermiteGaussFamily {
    pub n0: f64,
    pub gamma: Complex64,
    pub dim: usize,
}

impl HermiteGaussFamily {
    pub fn new(n0: f64, gamma: Complex64, theta_max: f64) -> Self {
        HermiteGaussFamily {
            n0,
            gamma,
            dim: hermite_gauss_dim(theta_max / 4.0),
        }
    }

    fn vectors(&self, theta: f64) -> [DVector<Complex64>; 4] {
        let (c1, d1) = coherent(-theta / 4.0, self.dim);
        let (c2, d2) = coherent(theta / 4.0, self.dim);
        let cx = |v: DVector<f64>, s: f64| v.map(|x| Complex64::new(s * x, 0.0));
        [cx(c1, 1.0), cx(c2, 1.0), cx(d1, -0.25), cx(d2, 0.25)]
    }

    /// `Γ` from the vectors `(ψ1, ψ2)` or its derivative from mixed terms.
    fn assemble(&self, a: &DVector<Complex64>, b: &DVector<Complex64>, da: &DVector<Complex64>, db: &DVector<Complex64>) -> CMatrix {
        let g = self.gamma;
        let outer = |x: &DVector<Complex64>, y: &DVector<Complex64>| x * y.adjoint();
        let m = outer(a, da) + outer(b, db) + outer(a, db) * g + outer(b, da) * g.conj();
        (&m + m.adjoint()) * Complex64::new(self.n0, 0.0)
    }
}

impl ParamFamily for HermiteGaussFamily {
    fn q(&self) -> usize {
        1
    }

    fn gamma(&self, theta: &[f64]) -> Result<IntensityOperator> {
        let [a, b, _, _] = self.vectors(theta[0]);
        // symmetrized product gives twice the operator
        let m = self.assemble(&a, &b, &a, &b) * Complex64::new(0.5, 0.0);
        IntensityOperator::from_hermitian(HermitianMatrix::symmetrized(m))
    }

    fn dgamma(&self, theta: &[f64], mu: usize) -> Option<Result<HermitianMatrix>> {
        if mu != 0 {
            return Some(Err(Error::ParameterIndex { index: mu, q: 1 }));
        }
        let [a, b, da, db] = self.vectors(theta[0]);
        Some(Ok(HermitianMatrix::symmetrized(self.assemble(&da, &db, &a, &b))))
    }
}

/// Binned direct-imaging intensities and their `θ`-derivatives:
/// `Λ_j ≈ w ⟨x_j|Γ|x_j⟩` at bin midpoints `x_j`.
pub fn direct_imaging(n0: f64, gamma: Complex64, theta: f64) -> Result<(IntensityVector, Vec<f64>)> {
    let bins = (2.0 * DIRECT_HALF_RANGE / DIRECT_BIN_WIDTH).round() as usize;
    let mut lam = Vec::with_capacity(bins);
    let mut dlam = Vec::with_capacity(bins);
    let g = gamma.re;
    for j in 0..bins {
        let x = -DIRECT_HALF_RANGE + (j as f64 + 0.5) * DIRECT_BIN_WIDTH;
        let (x1, x2) = (x + theta / 2.0, x - theta / 2.0);
        let (p1, p2) = (gaussian_psf(x1), gaussian_psf(x2));
        // ∂θ ψ(x ± θ/2) = ±ψ'(x ± θ/2)/2 with ψ'(u) = -(u/2)ψ(u)
        let dp1 = -0.25 * x1 * p1;
        let dp2 = 0.25 * x2 * p2;
        lam.push(DIRECT_BIN_WIDTH * n0 * (p1 * p1 + p2 * p2 + 2.0 * g * p1 * p2));
        dlam.push(DIRECT_BIN_WIDTH * n0 * 2.0 * (p1 * dp1 + p2 * dp2 + g * (dp1 * p2 + p1 * dp2)));
    }
    Ok((IntensityVector::new(lam.iter().map(|&l| l.max(0.0)).collect())?, dlam))
}

/// Poisson Fisher information of binned direct imaging, `Σ (∂Λ_j)²/Λ_j`.
pub fn direct_imaging_fisher(n0: f64, gamma: Complex64, theta: f64) -> Result<f64> {
    let (lam, dlam) = direct_imaging(n0, gamma, theta)?;
    Ok(lam
        .values()
        .iter()
        .zip(&dlam)
        .filter(|(l, _)| **l > 0.0)
        .map(|(l, d)| d * d / l)
        .sum())
}
