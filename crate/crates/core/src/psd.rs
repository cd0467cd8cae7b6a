//! Hermitian and positive-semidefinite matrices and their spectral calculus.
//!
//! Every operator in the crate (density operators, intensity operators,
//! POVM elements, symmetric logarithmic derivatives) lives in one of the
//! two containers defined here. [`PsdMatrix`] caches its eigendecomposition
//! so that square roots, powers and logarithms cost no further
//! factorization.
//!
//! Support is defined spectrally: an eigenvalue belongs to the support
//! when it exceeds `tol_supp * lambda_max`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Relative numerical tolerances shared by the spectral routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed Hermitian asymmetry, relative to the largest entry.
    pub herm: f64,
    /// Allowed negative eigenvalue, relative to the spectral radius.
    pub psd: f64,
    /// Support threshold, relative to the largest eigenvalue.
    pub supp: f64,
    /// Reconstruction accuracy expected from a decomposition.
    pub recon: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            herm: 1e-10,
            psd: 1e-10,
            supp: 1e-12,
            recon: 1e-10,
        }
    }
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Checks Hermiticity with the default tolerance.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, Tolerances::default().herm)
    }

    /// Checks `|m_jk - conj(m_kj)| <= tol * max|m|` and stores the exactly
    /// symmetrized matrix.
    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let n = m.nrows();
        let mut deviation = 0.0_f64;
        for j in 0..n {
            for k in j..n {
                let d = (m[(j, k)] - m[(k, j)].conj()).norm();
                if !d.is_finite() {
                    return Err(Error::NotHermitian { deviation: d });
                }
                deviation = deviation.max(d);
            }
        }
        if deviation > tol * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self::symmetrized(m))
    }

    /// Returns `(m + m^dagger) / 2` without checking.
    pub fn symmetrized(m: CMatrix) -> Self {
        let adj = m.adjoint();
        HermitianMatrix((m + adj) * Complex64::new(0.5, 0.0))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMatrix::identity(dim, dim))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let d = DVector::from_iterator(diag.len(), diag.iter().map(|&x| Complex64::new(x, 0.0)));
        HermitianMatrix(CMatrix::from_diagonal(&d))
    }

    /// Builds a real symmetric matrix from row-major entries.
    pub fn from_real(dim: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::LengthMismatch(rows.len(), dim * dim));
        }
        let m = CMatrix::from_fn(dim, dim, |j, k| Complex64::new(rows[j * dim + k], 0.0));
        Self::new(m)
    }

    /// The projector `|v><v|` (not normalized).
    pub fn outer(v: &DVector<Complex64>) -> Self {
        Self::symmetrized(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        HermitianMatrix(&self.0 * Complex64::new(c, 0.0))
    }

    pub fn add(&self, other: &HermitianMatrix) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(HermitianMatrix(&self.0 + &other.0))
    }

    /// Congruence `A H A^dagger`; `a` may be rectangular.
    pub fn congruence(&self, a: &CMatrix) -> Result<Self> {
        if a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(a.ncols(), self.dim()));
        }
        Ok(Self::symmetrized(a * &self.0 * a.adjoint()))
    }

    /// `Re tr(self * other)`.
    pub fn trace_product(&self, other: &HermitianMatrix) -> Result<f64> {
        check_dims(self.dim(), other.dim())?;
        Ok(trace_product(&self.0, &other.0).re)
    }

    /// Block-diagonal direct sum `self ⊕ other`.
    pub fn direct_sum(&self, other: &HermitianMatrix) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut out = CMatrix::zeros(n + m, n + m);
        out.view_mut((0, 0), (n, n)).copy_from(&self.0);
        out.view_mut((n, n), (m, m)).copy_from(&other.0);
        HermitianMatrix(out)
    }

    /// Principal submatrix on the given indices, in the given order.
    pub fn principal_submatrix(&self, keep: &[usize]) -> Result<Self> {
        let n = self.dim();
        if let Some(&bad) = keep.iter().find(|&&i| i >= n) {
            return Err(Error::DimensionMismatch(bad, n));
        }
        Ok(HermitianMatrix(CMatrix::from_fn(keep.len(), keep.len(), |j, k| {
            self.0[(keep[j], keep[k])]
        })))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub(crate) fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(a, b))
    }
}

/// `tr(a b)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        for k in 0..a.ncols() {
            acc += a[(j, k)] * b[(k, j)];
        }
    }
    acc
}

/// Eigenvalues in ascending order with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(lambda)) V^dagger`.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        let values: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.map_values(&values)
    }

    /// `V diag(values) V^dagger`.
    pub fn map_values(&self, values: &[f64]) -> CMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &v) in values.iter().enumerate() {
            let mut col = scaled.column_mut(k);
            col *= Complex64::new(v, 0.0);
        }
        &scaled * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Spectral radius.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

const FLUSH_RELATIVE: f64 = 1e-100;
/// Multiple of `dim·eps·‖h‖` treated as eigensolver rounding.
const ROUNDING_FACTOR: f64 = 4.0;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn spectral_decompose(h: &HermitianMatrix) -> SpectralDecomposition {
    let n = h.dim();
    if n == 0 {
        return SpectralDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: CMatrix::zeros(0, 0),
        };
    }
    // Entries far below rounding level can underflow inside the QR sweeps
    // and poison the result with NaN; they are flushed first.
    let scale = h.max_abs_entry();
    let flush = scale * FLUSH_RELATIVE;
    let m = h.as_matrix().map(|z| if z.norm() < flush { Complex64::new(0.0, 0.0) } else { z });
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    }
}

/// A validated positive-semidefinite matrix with its cached spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdMatrix {
    matrix: HermitianMatrix,
    spectrum: SpectralDecomposition,
}

/// Validates positivity; eigenvalues in `[-tol_psd * r, 0)` (with `r` the
/// spectral radius) are clipped to zero and the matrix rebuilt from the
/// clipped spectrum.
pub fn validate_psd(h: &HermitianMatrix, tol_psd: f64) -> Result<PsdMatrix> {
    let mut spectrum = spectral_decompose(h);
    let radius = spectrum.spectral_norm();
    let bound = -tol_psd * radius;
    // negative eigenvalues at rounding level are zeroed in the spectrum
    // only; the matrix is rebuilt when a larger clip changes it
    let noise = ROUNDING_FACTOR * h.dim() as f64 * f64::EPSILON * radius;
    let mut clipped = false;
    for lam in spectrum.eigenvalues.iter_mut() {
        if *lam < bound {
            return Err(Error::NegativeEigenvalue { value: *lam, bound });
        }
        if *lam < 0.0 {
            clipped |= *lam < -noise;
            *lam = 0.0;
        }
    }
    let matrix = if clipped {
        HermitianMatrix::symmetrized(spectrum.reconstruct())
    } else {
        h.clone()
    };
    Ok(PsdMatrix { matrix, spectrum })
}

impl PsdMatrix {
    pub fn new(h: HermitianMatrix) -> Result<Self> {
        validate_psd(&h, Tolerances::default().psd)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(HermitianMatrix::from_diagonal(diag))
    }

    pub fn zeros(dim: usize) -> Self {
        PsdMatrix {
            matrix: HermitianMatrix::zeros(dim),
            spectrum: SpectralDecomposition {
                eigenvalues: DVector::zeros(dim),
                eigenvectors: CMatrix::identity(dim, dim),
            },
        }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.spectrum.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.spectrum.max_eigenvalue().max(0.0)
    }

    /// Eigenvalues are in the support iff they exceed `tol_supp * lambda_max`.
    pub fn support_mask(&self, tol_supp: f64) -> Vec<bool> {
        let cut = tol_supp * self.max_eigenvalue();
        self.spectrum
            .eigenvalues
            .iter()
            .map(|&l| l > cut && l > 0.0)
            .collect()
    }

    pub fn rank(&self, tol_supp: f64) -> usize {
        self.support_mask(tol_supp).into_iter().filter(|&b| b).count()
    }

    pub fn support_projector(&self, tol_supp: f64) -> HermitianMatrix {
        let values: Vec<f64> = self
            .support_mask(tol_supp)
            .into_iter()
            .map(|b| if b { 1.0 } else { 0.0 })
            .collect();
        HermitianMatrix::symmetrized(self.spectrum.map_values(&values))
    }

    pub fn sqrt(&self) -> HermitianMatrix {
        HermitianMatrix::symmetrized(self.spectrum.map(f64::sqrt))
    }

    pub fn scale(&self, c: f64) -> Result<PsdMatrix> {
        if c < 0.0 || !c.is_finite() {
            return Err(Error::NegativeN(c));
        }
        let mut spectrum = self.spectrum.clone();
        spectrum.eigenvalues *= c;
        Ok(PsdMatrix {
            matrix: self.matrix.scale(c),
            spectrum,
        })
    }
}

/// Applies `f` through the spectrum: `V diag(f(lambda)) V^dagger`.
///
/// With `on_support_only`, `f` is evaluated only on support eigenvalues and
/// off-support eigenvalues map to zero. Without it, every eigenvalue is
/// passed to `f` and a non-finite result is an error.
pub fn apply_spectral_function<F: Fn(f64) -> f64>(
    p: &PsdMatrix,
    f: F,
    on_support_only: bool,
    tol_supp: f64,
) -> Result<HermitianMatrix> {
    let spectrum = p.spectrum();
    let mask = p.support_mask(tol_supp);
    let mut values = Vec::with_capacity(spectrum.dim());
    for (k, &lam) in spectrum.eigenvalues.iter().enumerate() {
        let v = if on_support_only && !mask[k] { 0.0 } else { f(lam) };
        if !v.is_finite() {
            return Err(Error::FunctionUndefined { eigenvalue: lam });
        }
        values.push(v);
    }
    Ok(HermitianMatrix::symmetrized(spectrum.map_values(&values)))
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
