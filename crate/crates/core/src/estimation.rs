//! Symmetric logarithmic derivatives, Helstrom information and Poisson
//! Fisher information.
//!
//! For a family `Γ(θ)` the SLD `S_μ` solves `∂_μ Γ = (S_μ Γ + Γ S_μ)/2` and
//! the Helstrom information is `K_μν = Re tr[(S_μ S_ν + S_ν S_μ)/2 Γ]`.
//! Two solvers are provided: a spectral one in the eigenbasis of `Γ`, and
//! a Gram-matrix one for operators expanded in a nonorthogonal basis.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::divergences::IntensityVector;
use crate::error::{Error, Result};
use crate::lyapunov::solve_lyapunov;
use crate::psd::{check_dims, validate_psd, CMatrix, HermitianMatrix, Tolerances};
use crate::state::IntensityOperator;

/// Default relative central-difference step, scaled by `|θ_μ| + 1`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Default Gram-path regularization.
pub const DEFAULT_DELTA_REG: f64 = 1e-13;
/// Derivative weight tolerated on the kernel of `Γ`, relative to `max |∂Γ|`.
const KERNEL_WEIGHT_TOL: f64 = 1e-8;
/// Negative eigenvalues of `K` above `-CLIP·λ_max` are set to zero.
const PSD_CLIP: f64 = 1e-8;

/// A smooth family `θ ↦ Γ(θ)` with `q` real parameters.
pub trait ParamFamily: Sync {
    fn q(&self) -> usize;

    fn gamma(&self, theta: &[f64]) -> Result<IntensityOperator>;

    /// Analytic `∂Γ/∂θ_μ`, if the family has one.
    fn dgamma(&self, _theta: &[f64], _mu: usize) -> Option<Result<HermitianMatrix>> {
        None
    }
}

type GammaFn = dyn Fn(&[f64]) -> Result<IntensityOperator> + Send + Sync;
type DGammaFn = dyn Fn(&[f64], usize) -> Result<HermitianMatrix> + Send + Sync;

/// Family built from closures.
pub struct FnFamily {
    q: usize,
    gamma_of: Box<GammaFn>,
    dgamma_of: Option<Box<DGammaFn>>,
}

impl FnFamily {
    pub fn new<F>(q: usize, gamma_of: F) -> Self
    where
        F: Fn(&[f64]) -> Result<IntensityOperator> + Send + Sync + 'static,
    {
        FnFamily {
            q,
            gamma_of: Box::new(gamma_of),
            dgamma_of: None,
        }
    }

    pub fn with_derivative<D>(mut self, dgamma_of: D) -> Self
    where
        D: Fn(&[f64], usize) -> Result<HermitianMatrix> + Send + Sync + 'static,
    {
        self.dgamma_of = Some(Box::new(dgamma_of));
        self
    }

    /// The same family with its analytic derivative dropped.
    pub fn without_derivative(mut self) -> Self {
        self.dgamma_of = None;
        self
    }
}

impl ParamFamily for FnFamily {
    fn q(&self) -> usize {
        self.q
    }

    fn gamma(&self, theta: &[f64]) -> Result<IntensityOperator> {
        (self.gamma_of)(theta)
    }

    fn dgamma(&self, theta: &[f64], mu: usize) -> Option<Result<HermitianMatrix>> {
        self.dgamma_of.as_ref().map(|d| d(theta, mu))
    }
}

/// `Γ(θ) = Γ_0 + Σ_μ θ_μ A_μ`; valid wherever the result is PSD.
pub struct LinearFamily {
    pub base: HermitianMatrix,
    pub directions: Vec<HermitianMatrix>,
}

impl ParamFamily for LinearFamily {
    fn q(&self) -> usize {
        self.directions.len()
    }

    fn gamma(&self, theta: &[f64]) -> Result<IntensityOperator> {
        check_theta(theta, self.q())?;
        let mut m = self.base.as_matrix().clone();
        for (t, a) in theta.iter().zip(&self.directions) {
            check_dims(self.base.dim(), a.dim())?;
            m += a.as_matrix() * Complex64::new(*t, 0.0);
        }
        IntensityOperator::from_hermitian(HermitianMatrix::symmetrized(m))
    }

    fn dgamma(&self, _theta: &[f64], mu: usize) -> Option<Result<HermitianMatrix>> {
        Some(
            self.directions
                .get(mu)
                .cloned()
                .ok_or(Error::ParameterIndex { index: mu, q: self.q() }),
        )
    }
}

fn check_theta(theta: &[f64], q: usize) -> Result<()> {
    if theta.len() != q {
        return Err(Error::LengthMismatch(theta.len(), q));
    }
    Ok(())
}

/// `∂Γ/∂θ_μ`: analytic when available, otherwise a central difference with
/// step `fd_step·(|θ_μ| + 1)`.
pub fn derivative<F: ParamFamily + ?Sized>(fam: &F, theta: &[f64], mu: usize, fd_step: f64) -> Result<HermitianMatrix> {
    check_theta(theta, fam.q())?;
    if mu >= fam.q() {
        return Err(Error::ParameterIndex { index: mu, q: fam.q() });
    }
    if let Some(d) = fam.dgamma(theta, mu) {
        return d;
    }
    finite_difference(fam, theta, mu, fd_step)
}

/// Central-difference `∂Γ/∂θ_μ`, ignoring any analytic derivative.
pub fn finite_difference<F: ParamFamily + ?Sized>(
    fam: &F,
    theta: &[f64],
    mu: usize,
    fd_step: f64,
) -> Result<HermitianMatrix> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidConfig(format!("fd_step must be positive, got {fd_step}")));
    }
    let h = fd_step * (theta[mu].abs() + 1.0);
    let mut plus = theta.to_vec();
    let mut minus = theta.to_vec();
    plus[mu] += h;
    minus[mu] -= h;
    let gp = fam.gamma(&plus)?;
    let gm = fam.gamma(&minus)?;
    check_dims(gp.dim(), gm.dim())?;
    let diff = (gp.matrix().as_matrix() - gm.matrix().as_matrix()) / Complex64::new(2.0 * h, 0.0);
    Ok(HermitianMatrix::symmetrized(diff))
}

/// Real symmetric PSD information matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HelstromMatrix {
    k: DMatrix<f64>,
}

impl HelstromMatrix {
    /// Symmetrizes `raw` and clips eigenvalues in `[-1e-8·λ_max, 0)` to zero.
    pub fn from_raw(raw: DMatrix<f64>) -> Self {
        let sym = (&raw + raw.transpose()) * 0.5;
        if sym.nrows() == 0 {
            return HelstromMatrix { k: sym };
        }
        let eig = SymmetricEigen::new(sym.clone());
        let top = eig.eigenvalues.iter().fold(0.0f64, |m, &x| m.max(x));
        let floor = -PSD_CLIP * top;
        if eig.eigenvalues.iter().all(|&x| x >= 0.0 || x < floor) {
            return HelstromMatrix { k: sym };
        }
        let mut vals = eig.eigenvalues.clone();
        for v in vals.iter_mut() {
            if *v < 0.0 && *v >= floor {
                *v = 0.0;
            }
        }
        let k = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
        HelstromMatrix { k: (&k + k.transpose()) * 0.5 }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.k
    }

    pub fn q(&self) -> usize {
        self.k.nrows()
    }

    pub fn entry(&self, mu: usize, nu: usize) -> f64 {
        self.k[(mu, nu)]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.q() == 0 {
            return 0.0;
        }
        self.k.clone().symmetric_eigenvalues().iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }
}

/// SLD components in the eigenbasis of `Γ`.
struct EigenSld {
    lambda: Vec<f64>,
    s: CMatrix,
}

fn sld_eigenbasis(gamma: &IntensityOperator, dgamma: &HermitianMatrix, tol: &Tolerances) -> Result<EigenSld> {
    check_dims(gamma.dim(), dgamma.dim())?;
    let n = gamma.dim();
    let spec = gamma.psd().spectrum();
    let lambda: Vec<f64> = spec.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let lmax = lambda.iter().copied().fold(0.0, f64::max);
    let d = spec.eigenvectors.adjoint() * dgamma.as_matrix() * &spec.eigenvectors;
    let dmax = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let cut = tol.supp * lmax;
    let mut s = CMatrix::zeros(n, n);
    let mut outside = 0.0f64;
    for j in 0..n {
        for k in 0..n {
            let den = lambda[j] + lambda[k];
            if den > cut && den > 0.0 {
                s[(j, k)] = d[(j, k)] * (2.0 / den);
            } else {
                outside = outside.max(d[(j, k)].norm());
            }
        }
    }
    if outside > KERNEL_WEIGHT_TOL * dmax && outside > 0.0 {
        return Err(Error::DerivativeOutsideSupport { weight: outside });
    }
    Ok(EigenSld { lambda, s })
}

/// Hermitian `S` with `(SΓ + ΓS)/2 = ∂Γ` on the support of `Γ`.
pub fn sld(gamma: &IntensityOperator, dgamma: &HermitianMatrix) -> Result<HermitianMatrix> {
    sld_with(gamma, dgamma, &Tolerances::default())
}

pub fn sld_with(gamma: &IntensityOperator, dgamma: &HermitianMatrix, tol: &Tolerances) -> Result<HermitianMatrix> {
    let e = sld_eigenbasis(gamma, dgamma, tol)?;
    let v = &gamma.psd().spectrum().eigenvectors;
    Ok(HermitianMatrix::symmetrized(v * e.s * v.adjoint()))
}

/// Helstrom information from `Γ` and its partial derivatives.
pub fn helstrom_from_derivatives(
    gamma: &IntensityOperator,
    dgammas: &[HermitianMatrix],
    tol: &Tolerances,
) -> Result<HelstromMatrix> {
    let slds = dgammas
        .iter()
        .map(|d| sld_eigenbasis(gamma, d, tol))
        .collect::<Result<Vec<_>>>()?;
    let q = slds.len();
    let n = gamma.dim();
    let mut k = DMatrix::zeros(q, q);
    for mu in 0..q {
        for nu in mu..q {
            let (a, b) = (&slds[mu], &slds[nu]);
            let mut acc = 0.0;
            for j in 0..n {
                for l in 0..n {
                    acc += (a.s[(j, l)] * b.s[(l, j)]).re * 0.5 * (a.lambda[j] + a.lambda[l]);
                }
            }
            k[(mu, nu)] = acc;
            k[(nu, mu)] = acc;
        }
    }
    Ok(HelstromMatrix::from_raw(k))
}

/// Helstrom information matrix of a family at `θ`.
pub fn helstrom<F: ParamFamily + ?Sized>(fam: &F, theta: &[f64], fd_step: f64) -> Result<HelstromMatrix> {
    helstrom_with(fam, theta, fd_step, &Tolerances::default())
}

pub fn helstrom_with<F: ParamFamily + ?Sized>(
    fam: &F,
    theta: &[f64],
    fd_step: f64,
    tol: &Tolerances,
) -> Result<HelstromMatrix> {
    check_theta(theta, fam.q())?;
    let gamma = fam.gamma(theta)?;
    let ds = (0..fam.q())
        .map(|mu| derivative(fam, theta, mu, fd_step))
        .collect::<Result<Vec<_>>>()?;
    helstrom_from_derivatives(&gamma, &ds, tol)
}

/// Coefficient form of the SLD problem in a nonorthogonal basis `{ψ_j}`:
/// operators are `A = Σ Ã_jk |ψ_j⟩⟨ψ_k|` and `G_jk = ⟨ψ_j|ψ_k⟩`.
#[derive(Debug, Clone)]
pub struct GramBasisProblem {
    pub g: HermitianMatrix,
    pub gamma_t: HermitianMatrix,
    pub delta_t: HermitianMatrix,
    pub delta_reg: f64,
}

impl GramBasisProblem {
    pub fn new(g: HermitianMatrix, gamma_t: HermitianMatrix, delta_t: HermitianMatrix, delta_reg: f64) -> Result<Self> {
        check_dims(g.dim(), gamma_t.dim())?;
        check_dims(g.dim(), delta_t.dim())?;
        if !(delta_reg > 0.0) || !delta_reg.is_finite() {
            return Err(Error::InvalidRegularization(delta_reg));
        }
        validate_psd(&g, Tolerances::default().psd)?;
        Ok(GramBasisProblem {
            g,
            gamma_t,
            delta_t,
            delta_reg,
        })
    }

    /// `Γ̃` with `δ` added on the diagonal of every identically-zero row.
    pub fn regularized_gamma(&self) -> CMatrix {
        let mut m = self.gamma_t.as_matrix().clone();
        for j in 0..m.nrows() {
            if m.row(j).iter().all(|z| z.norm() == 0.0) {
                m[(j, j)] += Complex64::new(self.delta_reg, 0.0);
            }
        }
        m
    }
}

/// Solves `2Δ̃ = S̃GΓ̃ + Γ̃GS̃` and returns `(S̃, K = tr G S̃ G Δ̃)`.
///
/// With `A = Γ̃G` the equation reads `A S̃ + S̃ A† = 2Δ̃`. It is solved in
/// the congruent form `A' X + X A' = 2 R Δ̃ R` with `R = G^{1/2}`,
/// `A' = R Γ̃ R` Hermitian and `S̃ = R⁺ X R⁺`, which keeps the Schur step
/// well conditioned when the basis is nearly dependent. Then
/// `K = tr X R Δ̃ R`.
pub fn sld_gram(p: &GramBasisProblem) -> Result<(HermitianMatrix, f64)> {
    let tol = Tolerances::default();
    let gpsd = validate_psd(&p.g, tol.psd)?;
    let spec = gpsd.spectrum();
    let mask = gpsd.support_mask(tol.supp);
    let root: Vec<f64> = spec.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let r = spec.map_values(&root);
    let r_pinv = spec.map_values(
        &root
            .iter()
            .zip(&mask)
            .map(|(&x, &m)| if m && x > 0.0 { 1.0 / x } else { 0.0 })
            .collect::<Vec<_>>(),
    );
    let a = HermitianMatrix::symmetrized(&r * p.regularized_gamma() * &r);
    let d = HermitianMatrix::symmetrized(&r * p.delta_t.as_matrix() * &r);
    let rhs = d.as_matrix() * Complex64::new(2.0, 0.0);
    let x = solve_lyapunov(a.as_matrix(), &rhs)?;
    let k = (&x * d.as_matrix()).trace().re;
    let s = HermitianMatrix::symmetrized(&r_pinv * x * &r_pinv);
    Ok((s, k))
}

/// Bartels-Stewart applied directly to `A = Γ̃G`, `C = 2Δ̃`.
///
/// Agrees with [`sld_gram`] for well-conditioned bases; loses accuracy when
/// `G` is nearly singular because `Γ̃G` is then far from normal.
pub fn sld_gram_direct(p: &GramBasisProblem) -> Result<(HermitianMatrix, f64)> {
    let g = p.g.as_matrix();
    let a = p.regularized_gamma() * g;
    let rhs = p.delta_t.as_matrix() * Complex64::new(2.0, 0.0);
    let s = HermitianMatrix::symmetrized(solve_lyapunov(&a, &rhs)?);
    let k = (g * s.as_matrix() * g * p.delta_t.as_matrix()).trace().re;
    Ok((s, k))
}

/// Poisson Fisher information `J_μν = Σ_j ∂_μΛ_j ∂_νΛ_j / Λ_j` for a
/// `J × q` derivative matrix.
pub fn fisher_poisson(lambda: &IntensityVector, dlambda: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if dlambda.nrows() != lambda.len() {
        return Err(Error::LengthMismatch(lambda.len(), dlambda.nrows()));
    }
    let q = dlambda.ncols();
    let mut j_mat = DMatrix::zeros(q, q);
    for (j, &l) in lambda.values().iter().enumerate() {
        let row = dlambda.row(j);
        if l == 0.0 {
            if row.iter().any(|&x| x != 0.0) {
                return Err(Error::ZeroIntensityWithDerivative { index: j });
            }
            continue;
        }
        for mu in 0..q {
            for nu in 0..q {
                j_mat[(mu, nu)] += row[mu] * row[nu] / l;
            }
        }
    }
    Ok(j_mat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psd::frobenius;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn diag_family() -> FnFamily {
        FnFamily::new(1, |t: &[f64]| IntensityOperator::from_diagonal(&[t[0], t[0]]))
    }

    #[test]
    fn sld_examples() {
        let g = IntensityOperator::from_diagonal(&[2.0, 2.0]).unwrap();
        let s = sld(&g, &HermitianMatrix::identity(2)).unwrap();
        assert!(frobenius(&(s.as_matrix() - HermitianMatrix::from_diagonal(&[0.5, 0.5]).as_matrix())) < 1e-15);

        let g = IntensityOperator::from_diagonal(&[1.0, 2.0]).unwrap();
        let s = sld(&g, &HermitianMatrix::zeros(2)).unwrap();
        assert_eq!(frobenius(s.as_matrix()), 0.0);

        let g = IntensityOperator::from_diagonal(&[1.0, 1.0]).unwrap();
        let x = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = sld(&g, &x).unwrap();
        assert!(frobenius(&(s.as_matrix() - x.as_matrix())) < 1e-14);
    }

    #[test]
    fn sld_rejects_derivative_on_kernel() {
        let g = IntensityOperator::from_diagonal(&[1.0, 0.0]).unwrap();
        let d = HermitianMatrix::from_diagonal(&[0.0, 1.0]);
        assert!(matches!(sld(&g, &d), Err(Error::DerivativeOutsideSupport { .. })));
        // off-diagonal coupling into the kernel is allowed
        let d = HermitianMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = sld(&g, &d).unwrap();
        let jordan = (s.as_matrix() * g.matrix().as_matrix() + g.matrix().as_matrix() * s.as_matrix()) * Complex64::new(0.5, 0.0);
        assert!(frobenius(&(jordan - d.as_matrix())) < 1e-14);
    }

    #[test]
    fn helstrom_examples() {
        let k = helstrom(&diag_family(), &[2.0], DEFAULT_FD_STEP).unwrap();
        assert_abs_diff_eq!(k.entry(0, 0), 1.0, epsilon = 1e-9);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![Complex64::new(r, 0.0), Complex64::new(0.0, r)]);
        let p = HermitianMatrix::outer(&v);
        let pd = p.clone();
        let fam = FnFamily::new(1, move |t: &[f64]| IntensityOperator::from_hermitian(p.scale(t[0])))
            .with_derivative(move |_, _| Ok(pd.clone()));
        let k = helstrom(&fam, &[4.0], DEFAULT_FD_STEP).unwrap();
        assert_abs_diff_eq!(k.entry(0, 0), 0.25, epsilon = 1e-12);

        let fixed = FnFamily::new(1, |_: &[f64]| IntensityOperator::from_diagonal(&[1.0, 3.0]));
        let k = helstrom(&fixed, &[0.3], DEFAULT_FD_STEP).unwrap();
        assert_abs_diff_eq!(k.entry(0, 0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn linear_family_two_parameters() {
        // Γ = diag(θ1, θ2): K = diag(1/θ1, 1/θ2)
        let fam = LinearFamily {
            base: HermitianMatrix::zeros(2),
            directions: vec![HermitianMatrix::from_diagonal(&[1.0, 0.0]), HermitianMatrix::from_diagonal(&[0.0, 1.0])],
        };
        let k = helstrom(&fam, &[2.0, 5.0], DEFAULT_FD_STEP).unwrap();
        assert_abs_diff_eq!(k.entry(0, 0), 0.5, epsilon = 1e-13);
        assert_abs_diff_eq!(k.entry(1, 1), 0.2, epsilon = 1e-13);
        assert_abs_diff_eq!(k.entry(0, 1), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn gram_examples() {
        let g = IntensityOperator::from_diagonal(&[1.0, 3.0]).unwrap();
        let d = HermitianMatrix::from_real(2, &[0.5, 0.2, 0.2, -1.0]).unwrap();
        let p = GramBasisProblem::new(HermitianMatrix::identity(2), g.matrix().clone(), d.clone(), DEFAULT_DELTA_REG).unwrap();
        let (s, k) = sld_gram(&p).unwrap();
        let s_ref = sld(&g, &d).unwrap();
        let k_ref = helstrom_from_derivatives(&g, &[d], &Tolerances::default()).unwrap();
        assert!(frobenius(&(s.as_matrix() - s_ref.as_matrix())) < 1e-12);
        assert_abs_diff_eq!(k, k_ref.entry(0, 0), epsilon = 1e-12);

        let p = GramBasisProblem::new(HermitianMatrix::identity(2), g.matrix().clone(), HermitianMatrix::zeros(2), 1e-13).unwrap();
        let (s, k) = sld_gram(&p).unwrap();
        assert_eq!(frobenius(s.as_matrix()), 0.0);
        assert_eq!(k, 0.0);

        assert!(matches!(
            GramBasisProblem::new(HermitianMatrix::identity(2), g.matrix().clone(), HermitianMatrix::zeros(2), 0.0),
            Err(Error::InvalidRegularization(_))
        ));
    }

    #[test]
    fn fisher_examples() {
        let l = IntensityVector::new(vec![2.0, 2.0]).unwrap();
        let j = fisher_poisson(&l, &DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], 1.0, epsilon = 1e-15);
        let j = fisher_poisson(&l, &DMatrix::zeros(2, 1)).unwrap();
        assert_eq!(j[(0, 0)], 0.0);
        let l = IntensityVector::new(vec![1.0, 4.0]).unwrap();
        let j = fisher_poisson(&l, &DMatrix::from_column_slice(2, 1, &[1.0, -1.0])).unwrap();
        assert_abs_diff_eq!(j[(0, 0)], 1.25, epsilon = 1e-15);

        let l = IntensityVector::new(vec![0.0, 4.0]).unwrap();
        assert!(matches!(
            fisher_poisson(&l, &DMatrix::from_column_slice(2, 1, &[1.0, 0.0])),
            Err(Error::ZeroIntensityWithDerivative { index: 0 })
        ));
        assert!(fisher_poisson(&l, &DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).is_ok());
    }

    #[test]
    fn clipping_only_touches_tiny_negatives() {
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        assert_eq!(HelstromMatrix::from_raw(raw).entry(1, 1), 0.0);
        let raw = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-3]);
        assert_eq!(HelstromMatrix::from_raw(raw).entry(1, 1), -1e-3);
    }
}
