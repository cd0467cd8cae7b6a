//! Divergences between intensity operators and between intensity vectors.
//!
//! For Poisson states every quantity of interest is a closed form in the
//! intensity operators:
//!
//! * fidelity `F(Γ,Γ') = tr sqrt(sqrt(Γ) Γ' sqrt(Γ))` and the squared
//!   Bures-Wasserstein distance `N + N' - 2F(Γ,Γ')`;
//! * Chernoff quantity `C_s(Γ,Γ') = tr Γ^s Γ'^{1-s}`, the Chernoff distance
//!   `sup_s [sN + (1-s)N' - C_s]` and the alpha-divergence
//!   `[sN + (1-s)N' - C_s] / (s(1-s))`;
//! * relative entropy `N' - N + tr Γ(ln Γ - ln Γ')`, infinite when the
//!   support of `Γ` is not contained in that of `Γ'`.
//!
//! The classical counterparts act on nonnegative intensity vectors.
//! Powers with exponent zero use the support-projector convention
//! `Γ^0 = P_Γ`, so the endpoints `s = 0, 1` are well defined for singular
//! operators.

use std::cmp::Ordering;

use nalgebra::DVector;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::psd::{apply_spectral_function, check_dims, CMatrix, spectral_decompose, HermitianMatrix, Tolerances};
use crate::state::IntensityOperator;

/// Default tolerance in `s` for the Chernoff-distance maximizer.
pub const DEFAULT_TOL_S: f64 = 1e-9;
const PRESCAN_POINTS: usize = 101;

/// A divergence value; `Infinite` is a distinguished outcome, not a large float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Divergence {
    Finite(f64),
    Infinite,
}

impl Divergence {
    pub fn finite(self) -> Option<f64> {
        match self {
            Divergence::Finite(v) => Some(v),
            Divergence::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Divergence::Infinite)
    }

    /// `f64::INFINITY` for the infinite case.
    pub fn as_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl PartialOrd for Divergence {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.as_f64().partial_cmp(&other.as_f64())
    }
}

impl Serialize for Divergence {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Divergence::Finite(v) => s.serialize_f64(*v),
            Divergence::Infinite => s.serialize_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceKind {
    Fidelity,
    BuresSq,
    ChernoffS,
    ChernoffDistance,
    AlphaDiv,
    RelEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub kind: DivergenceKind,
    pub value: Divergence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_star: Option<f64>,
}

impl DivergenceReport {
    fn plain(kind: DivergenceKind, value: f64) -> Self {
        DivergenceReport {
            kind,
            value: Divergence::Finite(value),
            s_star: None,
        }
    }
}

/// Classical Poisson intensities `Λ_j = tr E_j Γ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct IntensityVector(Vec<f64>);

impl IntensityVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeIntensity(bad));
        }
        Ok(IntensityVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Expected total count `Σ Λ_j`.
    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

// ---------------------------------------------------------------------------
// quantum

/// Eigen-data of a pair `(Γ, Γ')` with squared overlaps `|<a_i|b_j>|²`.
struct SpectralPair {
    la: Vec<f64>,
    lb: Vec<f64>,
    in_a: Vec<bool>,
    in_b: Vec<bool>,
    overlap: Vec<f64>,
}

impl SpectralPair {
    fn new(a: &IntensityOperator, b: &IntensityOperator, tol: &Tolerances) -> Result<Self> {
        check_dims(a.dim(), b.dim())?;
        let (sa, sb) = (a.psd().spectrum(), b.psd().spectrum());
        let o = sa.eigenvectors.adjoint() * &sb.eigenvectors;
        let n = a.dim();
        let mut overlap = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                overlap[i * n + j] = o[(i, j)].norm_sqr();
            }
        }
        Ok(SpectralPair {
            la: sa.eigenvalues.iter().map(|&x| x.max(0.0)).collect(),
            lb: sb.eigenvalues.iter().map(|&x| x.max(0.0)).collect(),
            in_a: a.psd().support_mask(tol.supp),
            in_b: b.psd().support_mask(tol.supp),
            overlap,
        })
    }

    fn dim(&self) -> usize {
        self.la.len()
    }

    /// `tr Γ^s Γ'^{1-s}` with support-restricted powers.
    fn chernoff(&self, s: f64) -> f64 {
        let n = self.dim();
        let wa: Vec<f64> = (0..n).map(|i| support_pow(self.la[i], self.in_a[i], s)).collect();
        let wb: Vec<f64> = (0..n).map(|j| support_pow(self.lb[j], self.in_b[j], 1.0 - s)).collect();
        let mut acc = 0.0;
        for i in 0..n {
            if wa[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                acc += wa[i] * wb[j] * self.overlap[i * n + j];
            }
        }
        acc
    }
}

fn support_pow(lambda: f64, in_support: bool, p: f64) -> f64 {
    if !in_support {
        0.0
    } else if p == 0.0 {
        1.0
    } else {
        lambda.powf(p)
    }
}

/// `F(Γ,Γ') = Σ sqrt(μ_k)` over the spectrum `μ` of `ΓΓ'`.
///
/// The `sqrt(μ_k)` are the singular values of `√Γ √Γ'`, computed from the
/// cached eigendecompositions of both operators. Summing singular values
/// avoids square roots of rounding-level eigenvalues, which would otherwise
/// cost half the working precision on rank-deficient pairs.
pub fn fidelity(a: &IntensityOperator, b: &IntensityOperator) -> Result<f64> {
    fidelity_with(a, b, &Tolerances::default())
}

pub fn fidelity_with(a: &IntensityOperator, b: &IntensityOperator, tol: &Tolerances) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    if a.dim() == 0 {
        return Ok(0.0);
    }
    let (fa, fb) = (support_root_factor(a, tol), support_root_factor(b, tol));
    let m = fa.adjoint() * fb;
    Ok(m.svd(false, false).singular_values.iter().sum())
}

/// `V diag(sqrt λ)` restricted to the support, so that `√Γ = F F†`.
fn support_root_factor(g: &IntensityOperator, tol: &Tolerances) -> CMatrix {
    let spec = g.psd().spectrum();
    let mask = g.psd().support_mask(tol.supp);
    let mut f = spec.eigenvectors.clone();
    for (k, (&l, &m)) in spec.eigenvalues.iter().zip(&mask).enumerate() {
        let r = if m { l.sqrt() } else { 0.0 };
        f.column_mut(k).scale_mut(r);
    }
    f
}

/// `Σ sqrt(max(μ, 0))` with eigenvalues at rounding level treated as zero.
fn sqrt_spectrum_sum(h: &HermitianMatrix) -> f64 {
    let eig = spectral_decompose(h).eigenvalues;
    let top = eig.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let floor = h.dim() as f64 * f64::EPSILON * top;
    eig.iter().map(|&m| if m > floor { m.sqrt() } else { 0.0 }).sum()
}

/// Fidelity from the eigenvalues of the non-Hermitian product `ΓΓ'`
/// obtained by a complex Schur factorization.
///
/// This is a second, independent evaluation used for cross-checks; it is
/// less robust when both operators are rank deficient.
pub fn fidelity_product_spectrum(a: &IntensityOperator, b: &IntensityOperator) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    if a.dim() == 0 {
        return Ok(0.0);
    }
    let prod = a.matrix().as_matrix() * b.matrix().as_matrix();
    let schur = prod.schur();
    let (_, t) = schur.unpack();
    let top = t.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = a.dim() as f64 * 8.0 * f64::EPSILON * top;
    Ok(t.diagonal()
        .iter()
        .map(|z| if z.re > floor { z.re.sqrt() } else { 0.0 })
        .sum())
}

/// `tr sqrt(sqrt(Γ) Γ' sqrt(Γ))` evaluated literally with two matrix square roots.
pub fn fidelity_nested(a: &IntensityOperator, b: &IntensityOperator) -> Result<f64> {
    check_dims(a.dim(), b.dim())?;
    let r = apply_spectral_function(a.psd(), f64::sqrt, true, Tolerances::default().supp)?;
    let inner = HermitianMatrix::symmetrized(r.as_matrix() * b.matrix().as_matrix() * r.as_matrix());
    Ok(sqrt_spectrum_sum(&inner))
}

/// Squared Bures-Wasserstein distance `N + N' - 2F(Γ,Γ')`, clamped at zero.
pub fn bures_sq(a: &IntensityOperator, b: &IntensityOperator) -> Result<f64> {
    bures_sq_with(a, b, &Tolerances::default())
}

pub fn bures_sq_with(a: &IntensityOperator, b: &IntensityOperator, tol: &Tolerances) -> Result<f64> {
    let f = fidelity_with(a, b, tol)?;
    Ok((a.n() + b.n() - 2.0 * f).max(0.0))
}

/// Uhlmann fidelity between the Poisson states, `exp(-d_B²/2)`.
pub fn poisson_state_fidelity(a: &IntensityOperator, b: &IntensityOperator) -> Result<f64> {
    Ok((-0.5 * bures_sq(a, b)?).exp())
}

pub fn chernoff_quantity(a: &IntensityOperator, b: &IntensityOperator, s: f64) -> Result<f64> {
    chernoff_quantity_with(a, b, s, &Tolerances::default())
}

pub fn chernoff_quantity_with(
    a: &IntensityOperator,
    b: &IntensityOperator,
    s: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    Ok(SpectralPair::new(a, b, tol)?.chernoff(s))
}

/// Chernoff quantity between the Poisson states, `exp(-sN - (1-s)N' + C_s(Γ,Γ'))`.
pub fn poisson_state_chernoff(a: &IntensityOperator, b: &IntensityOperator, s: f64) -> Result<f64> {
    let c = chernoff_quantity(a, b, s)?;
    Ok((-s * a.n() - (1.0 - s) * b.n() + c).exp())
}

/// `sup_{0<=s<=1} [sN + (1-s)N' - C_s(Γ,Γ')]`, with the maximizer reported.
pub fn chernoff_distance(a: &IntensityOperator, b: &IntensityOperator, tol_s: f64) -> Result<DivergenceReport> {
    chernoff_distance_with(a, b, tol_s, &Tolerances::default())
}

pub fn chernoff_distance_with(
    a: &IntensityOperator,
    b: &IntensityOperator,
    tol_s: f64,
    tol: &Tolerances,
) -> Result<DivergenceReport> {
    let pair = SpectralPair::new(a, b, tol)?;
    let (na, nb) = (a.n(), b.n());
    let (s_star, value) = maximize_unit_interval(|s| s * na + (1.0 - s) * nb - pair.chernoff(s), tol_s);
    Ok(DivergenceReport {
        kind: DivergenceKind::ChernoffDistance,
        value: Divergence::Finite(value.max(0.0)),
        s_star: Some(s_star),
    })
}

/// Maximizes `g` on `[0, 1]`: a uniform prescan (endpoints included) picks
/// the bracket, golden-section search refines it. Ties keep the earlier
/// (smaller) `s`.
pub fn maximize_unit_interval<G: Fn(f64) -> f64>(g: G, tol_s: f64) -> (f64, f64) {
    let grid: Vec<(f64, f64)> = (0..PRESCAN_POINTS)
        .map(|k| {
            let s = k as f64 / (PRESCAN_POINTS - 1) as f64;
            (s, g(s))
        })
        .collect();
    let (k_best, &(mut s_best, mut v_best)) = grid
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &(f64, f64))>, (k, p)| match acc {
            Some((_, q)) if q.1 >= p.1 => acc,
            _ => Some((k, p)),
        })
        .expect("non-empty grid");
    let lo = grid[k_best.saturating_sub(1)].0;
    let hi = grid[(k_best + 1).min(PRESCAN_POINTS - 1)].0;
    let (s_gold, v_gold) = golden_section_max(&g, lo, hi, tol_s.max(f64::EPSILON));
    let tie = 1e-15 * v_best.abs().max(1.0);
    if v_gold > v_best + tie {
        s_best = s_gold;
        v_best = v_gold;
    }
    (s_best, v_best)
}

fn golden_section_max<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = g(x1);
    let mut f2 = g(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = g(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = g(x2);
        }
    }
    let s = 0.5 * (lo + hi);
    (s, g(s))
}

/// `D_s(Γ,Γ') = [sN + (1-s)N' - C_s(Γ,Γ')] / (s(1-s))` for `0 < s < 1`.
pub fn alpha_divergence(a: &IntensityOperator, b: &IntensityOperator, s: f64) -> Result<f64> {
    alpha_divergence_with(a, b, s, &Tolerances::default())
}

pub fn alpha_divergence_with(
    a: &IntensityOperator,
    b: &IntensityOperator,
    s: f64,
    tol: &Tolerances,
) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::SOutOfRange(s));
    }
    let c = chernoff_quantity_with(a, b, s, tol)?;
    Ok(((s * a.n() + (1.0 - s) * b.n() - c) / (s * (1.0 - s))).max(0.0))
}

/// `D(Γ‖Γ') = N' - N + tr Γ(ln Γ - ln Γ')`; infinite when `supp Γ ⊄ supp Γ'`.
pub fn relative_entropy(a: &IntensityOperator, b: &IntensityOperator) -> Result<Divergence> {
    relative_entropy_with(a, b, &Tolerances::default())
}

pub fn relative_entropy_with(
    a: &IntensityOperator,
    b: &IntensityOperator,
    tol: &Tolerances,
) -> Result<Divergence> {
    let pair = SpectralPair::new(a, b, tol)?;
    let n = pair.dim();
    // weight of Γ outside supp Γ': tr Γ P_ker(Γ')
    let mut leak = 0.0;
    let mut cross = 0.0;
    let mut self_term = 0.0;
    for i in 0..n {
        if !pair.in_a[i] {
            continue;
        }
        let li = pair.la[i];
        self_term += li * li.ln();
        for j in 0..n {
            let w = li * pair.overlap[i * n + j];
            if pair.in_b[j] {
                cross += w * pair.lb[j].ln();
            } else {
                leak += w;
            }
        }
    }
    if leak > tol.psd * a.n().max(f64::MIN_POSITIVE) {
        return Ok(Divergence::Infinite);
    }
    Ok(Divergence::Finite((b.n() - a.n() + self_term - cross).max(0.0)))
}

/// Evaluates one quantum divergence kind; `s` is required for the Chernoff
/// quantity and the alpha-divergence.
pub fn divergence(
    a: &IntensityOperator,
    b: &IntensityOperator,
    kind: DivergenceKind,
    s: Option<f64>,
    tol: &Tolerances,
    tol_s: f64,
) -> Result<DivergenceReport> {
    let need_s = || s.ok_or(Error::SOutOfRange(f64::NAN));
    Ok(match kind {
        DivergenceKind::Fidelity => DivergenceReport::plain(kind, fidelity_with(a, b, tol)?),
        DivergenceKind::BuresSq => DivergenceReport::plain(kind, bures_sq_with(a, b, tol)?),
        DivergenceKind::ChernoffS => DivergenceReport::plain(kind, chernoff_quantity_with(a, b, need_s()?, tol)?),
        DivergenceKind::ChernoffDistance => chernoff_distance_with(a, b, tol_s, tol)?,
        DivergenceKind::AlphaDiv => DivergenceReport::plain(kind, alpha_divergence_with(a, b, need_s()?, tol)?),
        DivergenceKind::RelEntropy => DivergenceReport {
            kind,
            value: relative_entropy_with(a, b, tol)?,
            s_star: None,
        },
    })
}

// ---------------------------------------------------------------------------
// classical

fn check_len(a: &IntensityVector, b: &IntensityVector) -> Result<()> {
    if a.len() == b.len() {
        Ok(())
    } else {
        Err(Error::LengthMismatch(a.len(), b.len()))
    }
}

/// `C_s(Λ,Λ') = Σ Λ_j^s Λ'_j^{1-s}` with `0^0 = 0`.
pub fn classical_chernoff(a: &IntensityVector, b: &IntensityVector, s: f64) -> Result<f64> {
    check_len(a, b)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    Ok(classical_chernoff_unchecked(a, b, s))
}

fn classical_chernoff_unchecked(a: &IntensityVector, b: &IntensityVector, s: f64) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| support_pow(x, x > 0.0, s) * support_pow(y, y > 0.0, 1.0 - s))
        .sum()
}

pub fn classical_chernoff_distance(a: &IntensityVector, b: &IntensityVector, tol_s: f64) -> Result<DivergenceReport> {
    check_len(a, b)?;
    let (na, nb) = (a.total(), b.total());
    let (s_star, value) =
        maximize_unit_interval(|s| s * na + (1.0 - s) * nb - classical_chernoff_unchecked(a, b, s), tol_s);
    Ok(DivergenceReport {
        kind: DivergenceKind::ChernoffDistance,
        value: Divergence::Finite(value.max(0.0)),
        s_star: Some(s_star),
    })
}

pub fn classical_alpha(a: &IntensityVector, b: &IntensityVector, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::SOutOfRange(s));
    }
    let c = classical_chernoff(a, b, s)?;
    Ok(((s * a.total() + (1.0 - s) * b.total() - c) / (s * (1.0 - s))).max(0.0))
}

/// `D(Λ‖Λ') = N' - N + Σ Λ_j ln(Λ_j/Λ'_j)` with `0 ln 0 = 0`.
pub fn classical_relative_entropy(a: &IntensityVector, b: &IntensityVector) -> Result<Divergence> {
    check_len(a, b)?;
    let mut acc = b.total() - a.total();
    for (&x, &y) in a.values().iter().zip(b.values()) {
        if x == 0.0 {
            continue;
        }
        if y == 0.0 {
            return Ok(Divergence::Infinite);
        }
        acc += x * (x / y).ln();
    }
    Ok(Divergence::Finite(acc.max(0.0)))
}

pub fn classical_divergences(
    a: &IntensityVector,
    b: &IntensityVector,
    kind: DivergenceKind,
    s: Option<f64>,
    tol_s: f64,
) -> Result<DivergenceReport> {
    let need_s = || s.ok_or(Error::SOutOfRange(f64::NAN));
    Ok(match kind {
        DivergenceKind::Fidelity => DivergenceReport::plain(kind, classical_chernoff(a, b, 0.5)?),
        DivergenceKind::BuresSq => {
            let c = classical_chernoff(a, b, 0.5)?;
            DivergenceReport::plain(kind, (a.total() + b.total() - 2.0 * c).max(0.0))
        }
        DivergenceKind::ChernoffS => DivergenceReport::plain(kind, classical_chernoff(a, b, need_s()?)?),
        DivergenceKind::ChernoffDistance => classical_chernoff_distance(a, b, tol_s)?,
        DivergenceKind::AlphaDiv => DivergenceReport::plain(kind, classical_alpha(a, b, need_s()?)?),
        DivergenceKind::RelEntropy => DivergenceReport {
            kind,
            value: classical_relative_entropy(a, b)?,
            s_star: None,
        },
    })
}

/// Joint eigenvalue vectors of two commuting operators, in the eigenbasis of `a`.
pub fn joint_eigenvalues(a: &IntensityOperator, b: &IntensityOperator) -> Result<(IntensityVector, IntensityVector)> {
    check_dims(a.dim(), b.dim())?;
    let v = &a.psd().spectrum().eigenvectors;
    let bd = v.adjoint() * b.matrix().as_matrix() * v;
    let la: Vec<f64> = a.psd().eigenvalues().iter().map(|&x| x.max(0.0)).collect();
    let lb: Vec<f64> = DVector::from_iterator(bd.nrows(), bd.diagonal().iter().map(|z| z.re.max(0.0)))
        .iter()
        .copied()
        .collect();
    Ok((IntensityVector::new(la)?, IntensityVector::new(lb)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn diag(d: &[f64]) -> IntensityOperator {
        IntensityOperator::from_diagonal(d).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        assert_abs_diff_eq!(fidelity(&diag(&[1.0]), &diag(&[4.0])).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fidelity(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0])).unwrap(), 3.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v = DVector::from_vec(vec![Complex64::new(r, 0.0), Complex64::new(r, 0.0)]);
        let pv = IntensityOperator::from_hermitian(HermitianMatrix::outer(&v)).unwrap();
        // rank one: sqrt(tr ΓΓ') = |<e1|v>|
        assert_abs_diff_eq!(fidelity(&diag(&[1.0, 0.0]), &pv).unwrap(), r, epsilon = 1e-12);
        assert_abs_diff_eq!(fidelity_product_spectrum(&diag(&[1.0, 0.0]), &pv).unwrap(), r, epsilon = 1e-12);
        assert!(matches!(fidelity(&diag(&[1.0]), &diag(&[1.0, 1.0])), Err(Error::DimensionMismatch(1, 2))));
    }

    #[test]
    fn bures_examples() {
        assert_abs_diff_eq!(bures_sq(&diag(&[1.0]), &diag(&[4.0])).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bures_sq(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0])).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(bures_sq(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn poisson_state_fidelity_examples() {
        assert_abs_diff_eq!(
            poisson_state_fidelity(&diag(&[1.0]), &diag(&[4.0])).unwrap(),
            (-0.5f64).exp(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(poisson_state_fidelity(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0])).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            poisson_state_fidelity(&diag(&[0.0, 0.0]), &diag(&[1.0, 1.0])).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn chernoff_examples() {
        assert_abs_diff_eq!(chernoff_quantity(&diag(&[1.0]), &diag(&[4.0]), 0.5).unwrap(), 2.0, epsilon = 1e-14);
        for s in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(chernoff_quantity(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0]), s).unwrap(), 3.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(
            chernoff_quantity(&diag(&[1.0, 2.0]), &diag(&[2.0, 1.0]), 0.5).unwrap(),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-13
        );
        assert!(matches!(chernoff_quantity(&diag(&[1.0]), &diag(&[1.0]), 1.5), Err(Error::SOutOfRange(_))));
    }

    #[test]
    fn chernoff_endpoints_use_support_projector() {
        // s = 0: tr P_Γ Γ'
        let a = diag(&[1.0, 0.0]);
        let b = diag(&[2.0, 3.0]);
        assert_abs_diff_eq!(chernoff_quantity(&a, &b, 0.0).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(chernoff_quantity(&b, &a, 1.0).unwrap(), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn chernoff_distance_examples() {
        let r = chernoff_distance(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0]), DEFAULT_TOL_S).unwrap();
        assert_abs_diff_eq!(r.value.as_f64(), 0.0, epsilon = 1e-13);

        // oracle: dense scan of f(s) = 4 - 3s - 4^{1-s}, then analytic stationary point
        let f = |s: f64| 4.0 - 3.0 * s - 4f64.powf(1.0 - s);
        let scan = (0..=100_000).map(|k| k as f64 / 1e5).fold((0.0, f64::MIN), |b, s| {
            if f(s) > b.1 { (s, f(s)) } else { b }
        });
        let s_exact = 1.0 - (3.0 / 4f64.ln()).ln() / 4f64.ln();
        assert!((scan.0 - s_exact).abs() < 2e-5);
        let r = chernoff_distance(&diag(&[1.0]), &diag(&[4.0]), DEFAULT_TOL_S).unwrap();
        assert_abs_diff_eq!(r.value.as_f64(), f(s_exact), epsilon = 1e-12);
        assert_abs_diff_eq!(r.s_star.unwrap(), s_exact, epsilon = 1e-6);
        assert_abs_diff_eq!(r.value.as_f64(), 0.506551, epsilon = 1e-6);
        assert_abs_diff_eq!(r.s_star.unwrap(), 0.4431, epsilon = 1e-4);

        // orthogonal supports: objective is identically 1
        let r = chernoff_distance(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0]), DEFAULT_TOL_S).unwrap();
        assert_abs_diff_eq!(r.value.as_f64(), 1.0, epsilon = 1e-14);
        assert_eq!(r.s_star, Some(0.0));
    }

    #[test]
    fn alpha_examples() {
        assert_abs_diff_eq!(alpha_divergence(&diag(&[1.0]), &diag(&[4.0]), 0.5).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(alpha_divergence(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0]), 0.5).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            alpha_divergence(&diag(&[1.0, 2.0]), &diag(&[2.0, 1.0]), 0.5).unwrap(),
            4.0 * (3.0 - 2.0 * 2f64.sqrt()),
            epsilon = 1e-12
        );
        assert!(alpha_divergence(&diag(&[1.0]), &diag(&[1.0]), 0.0).is_err());
        assert!(alpha_divergence(&diag(&[1.0]), &diag(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let d = relative_entropy(&diag(&[1.0]), &diag(&[4.0])).unwrap();
        assert_abs_diff_eq!(d.as_f64(), 3.0 - 4f64.ln(), epsilon = 1e-14);
        let d = relative_entropy(&diag(&[1.0, 2.0]), &diag(&[1.0, 2.0])).unwrap();
        assert_abs_diff_eq!(d.as_f64(), 0.0, epsilon = 1e-14);
        assert_eq!(relative_entropy(&diag(&[1.0, 1.0]), &diag(&[1.0, 0.0])).unwrap(), Divergence::Infinite);
        // reverse orientation is finite
        assert!(relative_entropy(&diag(&[1.0, 0.0]), &diag(&[1.0, 1.0])).unwrap().finite().is_some());
    }

    #[test]
    fn classical_examples() {
        let one = IntensityVector::new(vec![1.0, 1.0]).unwrap();
        assert_abs_diff_eq!(classical_chernoff(&one, &one, 0.3).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(classical_relative_entropy(&one, &one).unwrap().as_f64(), 0.0);
        assert_abs_diff_eq!(classical_chernoff_distance(&one, &one, DEFAULT_TOL_S).unwrap().value.as_f64(), 0.0, epsilon = 1e-14);

        let a = IntensityVector::new(vec![1.0]).unwrap();
        let b = IntensityVector::new(vec![4.0]).unwrap();
        assert_abs_diff_eq!(classical_relative_entropy(&a, &b).unwrap().as_f64(), 3.0 - 4f64.ln(), epsilon = 1e-14);

        let x = IntensityVector::new(vec![2.0, 0.0]).unwrap();
        assert!(classical_relative_entropy(&x, &one).unwrap().finite().is_some());
        assert_eq!(classical_relative_entropy(&one, &x).unwrap(), Divergence::Infinite);

        assert!(matches!(classical_chernoff(&a, &one, 0.5), Err(Error::LengthMismatch(1, 2))));
        assert!(IntensityVector::new(vec![-1.0]).is_err());
    }

    #[test]
    fn divergence_ordering_places_infinity_last() {
        assert!(Divergence::Infinite > Divergence::Finite(1e300));
        assert!(Divergence::Finite(1.0) < Divergence::Finite(2.0));
    }

    #[test]
    fn report_serializes_infinity_as_string() {
        let r = DivergenceReport {
            kind: DivergenceKind::RelEntropy,
            value: Divergence::Infinite,
            s_star: None,
        };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"kind":"rel_entropy","value":"inf"}"#);
    }
}
