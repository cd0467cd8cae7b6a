//! Poisson channels acting on intensity operators.
//!
//! A local channel on the rare state induces a map `Γ ↦ Φ̃(Γ)` that is
//! affine: `Φ̃(Γ) = Γ' + Σ_α A_α Γ A_α†`. The built-in kinds are the
//! closed-form special cases; `Affine` covers the general form built from
//! Kraus blocks.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::divergences::IntensityVector;
use crate::error::{Error, Result};
use crate::psd::{check_dims, validate_psd, CMatrix, HermitianMatrix, Tolerances};
use crate::state::IntensityOperator;

/// Tolerance for unitarity and POVM completeness.
pub const CHANNEL_TOL: f64 = 1e-10;
/// Default bound on the per-mode emission probability `tr Σ A10 A10†`.
pub const DEFAULT_RARITY_BOUND: f64 = 1e-3;

#[derive(Debug, Clone)]
pub enum ChannelKind {
    Unitary(CMatrix),
    Povm(Vec<HermitianMatrix>),
    Loss(Vec<f64>),
    Background(IntensityOperator),
    Compose(IntensityOperator),
    Marginalize(Vec<usize>),
    Affine {
        offset: IntensityOperator,
        kraus: Vec<CMatrix>,
    },
}

/// A validated channel description.
#[derive(Debug, Clone)]
pub struct ChannelSpec {
    kind: ChannelKind,
    input_dim: Option<usize>,
}

/// Operator-valued output, or classical intensities for a measurement.
#[derive(Debug, Clone)]
pub enum ChannelOutput {
    Operator(IntensityOperator),
    Intensities(IntensityVector),
}

impl ChannelOutput {
    pub fn operator(self) -> Result<IntensityOperator> {
        match self {
            ChannelOutput::Operator(g) => Ok(g),
            ChannelOutput::Intensities(_) => Err(Error::InvalidChannel("measurement output is classical".into())),
        }
    }

    pub fn intensities(self) -> Result<IntensityVector> {
        match self {
            ChannelOutput::Intensities(l) => Ok(l),
            ChannelOutput::Operator(_) => Err(Error::InvalidChannel("channel output is an operator".into())),
        }
    }
}

/// One Kraus operator split into its vacuum-to-object column `A10` and its
/// object-to-object block `A11`.
#[derive(Debug, Clone, Default)]
pub struct KrausBlock {
    pub a10: Option<DVector<Complex64>>,
    pub a11: Option<CMatrix>,
}

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl ChannelSpec {
    pub fn unitary(u: CMatrix) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n {
            return Err(Error::NotSquare { rows: n, cols: u.ncols() });
        }
        let dev = max_entry(&(u.adjoint() * &u - CMatrix::identity(n, n)));
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("U is not unitary (deviation {dev:e})")));
        }
        Ok(ChannelSpec {
            kind: ChannelKind::Unitary(u),
            input_dim: Some(n),
        })
    }

    pub fn povm(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let n = elements
            .first()
            .map(|e| e.dim())
            .ok_or_else(|| Error::InvalidChannel("POVM has no elements".into()))?;
        let mut sum = CMatrix::zeros(n, n);
        for (j, e) in elements.iter().enumerate() {
            check_dims(n, e.dim())?;
            validate_psd(e, Tolerances::default().psd)
                .map_err(|err| Error::InvalidChannel(format!("POVM element {j} is not PSD: {err}")))?;
            sum += e.as_matrix();
        }
        let dev = max_entry(&(sum - CMatrix::identity(n, n)));
        if dev > CHANNEL_TOL {
            return Err(Error::InvalidChannel(format!("POVM elements do not sum to I (deviation {dev:e})")));
        }
        Ok(ChannelSpec {
            kind: ChannelKind::Povm(elements),
            input_dim: Some(n),
        })
    }

    pub fn loss(eta: Vec<f64>) -> Result<Self> {
        if let Some(e) = eta.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::InvalidChannel(format!("transmissivity {e} outside [0, 1]")));
        }
        let n = eta.len();
        Ok(ChannelSpec {
            kind: ChannelKind::Loss(eta),
            input_dim: Some(n),
        })
    }

    pub fn background(extra: IntensityOperator) -> Self {
        let n = extra.dim();
        ChannelSpec {
            kind: ChannelKind::Background(extra),
            input_dim: Some(n),
        }
    }

    /// `Γ ↦ Γ ⊕ Γ'` for inputs of any dimension.
    pub fn compose(other: IntensityOperator) -> Self {
        ChannelSpec {
            kind: ChannelKind::Compose(other),
            input_dim: None,
        }
    }

    pub fn marginalize(keep: Vec<usize>, input_dim: usize) -> Result<Self> {
        let mut seen = vec![false; input_dim];
        for &k in &keep {
            if k >= input_dim {
                return Err(Error::InvalidChannel(format!("index {k} out of range for dimension {input_dim}")));
            }
            if std::mem::replace(&mut seen[k], true) {
                return Err(Error::InvalidChannel(format!("index {k} repeated")));
            }
        }
        Ok(ChannelSpec {
            kind: ChannelKind::Marginalize(keep),
            input_dim: Some(input_dim),
        })
    }

    /// `Γ ↦ Γ' + Σ A Γ A†`; the Kraus operators may be rectangular
    /// (output × input) and must satisfy `Σ A†A ≤ I`.
    pub fn affine(offset: IntensityOperator, kraus: Vec<CMatrix>) -> Result<Self> {
        let out = offset.dim();
        let input = kraus.first().map(|a| a.ncols());
        let mut sum: Option<CMatrix> = None;
        for a in &kraus {
            check_dims(out, a.nrows())?;
            if Some(a.ncols()) != input {
                return Err(Error::InvalidChannel("Kraus blocks have different input dimensions".into()));
            }
            let ata = a.adjoint() * a;
            sum = Some(match sum {
                Some(s) => s + ata,
                None => ata,
            });
        }
        if let (Some(sum), Some(n)) = (sum, input) {
            let slack = HermitianMatrix::symmetrized(CMatrix::identity(n, n) - sum);
            validate_psd(&slack, CHANNEL_TOL)
                .map_err(|_| Error::InvalidChannel("Kraus blocks increase the object number (Σ A†A > I)".into()))?;
        }
        Ok(ChannelSpec {
            kind: ChannelKind::Affine { offset, kraus },
            input_dim: input,
        })
    }

    pub fn kind(&self) -> &ChannelKind {
        &self.kind
    }

    /// Input dimension, or `None` when any dimension is accepted.
    pub fn input_dim(&self) -> Option<usize> {
        self.input_dim
    }

    /// Output dimension for an input of dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        match &self.kind {
            ChannelKind::Unitary(_) | ChannelKind::Loss(_) | ChannelKind::Background(_) => d,
            ChannelKind::Povm(e) => e.len(),
            ChannelKind::Compose(o) => d + o.dim(),
            ChannelKind::Marginalize(k) => k.len(),
            ChannelKind::Affine { offset, .. } => offset.dim(),
        }
    }
}

/// Builds the affine channel of a local single-mode map from its Kraus
/// blocks: `Γ' = w Σ_α A10_α A10_α†` with `w = tau0_weight` (the vacuum
/// weight `M(1-ε)` that survives the limit) and linear part
/// `Σ_α A11_α Γ A11_α†`.
///
/// The per-mode emission probability `tr Σ A10 A10†` must not exceed
/// `rarity_bound`.
pub fn affine_from_kraus(blocks: &[KrausBlock], tau0_weight: f64, rarity_bound: f64) -> Result<ChannelSpec> {
    if !(tau0_weight >= 0.0) || !tau0_weight.is_finite() {
        return Err(Error::InvalidChannel(format!("vacuum weight must be finite and non-negative, got {tau0_weight}")));
    }
    let out = blocks
        .iter()
        .find_map(|b| b.a10.as_ref().map(|v| v.len()).or(b.a11.as_ref().map(|m| m.nrows())))
        .ok_or_else(|| Error::InvalidChannel("no Kraus blocks".into()))?;
    let mut emission = CMatrix::zeros(out, out);
    let mut kraus = Vec::new();
    for b in blocks {
        if let Some(v) = &b.a10 {
            check_dims(out, v.len())?;
            emission += v * v.adjoint();
        }
        if let Some(a) = &b.a11 {
            kraus.push(a.clone());
        }
    }
    let probability = emission.trace().re;
    if probability > rarity_bound {
        return Err(Error::RarityViolated {
            probability,
            bound: rarity_bound,
        });
    }
    let offset = IntensityOperator::from_hermitian(HermitianMatrix::symmetrized(emission * Complex64::new(tau0_weight, 0.0)))?;
    ChannelSpec::affine(offset, kraus)
}

fn check_input(ch: &ChannelSpec, g: &IntensityOperator) -> Result<()> {
    match ch.input_dim {
        Some(n) => check_dims(n, g.dim()),
        None => Ok(()),
    }
}

/// Applies a channel to an intensity operator.
pub fn apply(ch: &ChannelSpec, g: &IntensityOperator) -> Result<ChannelOutput> {
    check_input(ch, g)?;
    let h = g.matrix();
    let op = |m: HermitianMatrix| IntensityOperator::from_hermitian(m).map(ChannelOutput::Operator);
    match &ch.kind {
        ChannelKind::Unitary(u) => op(h.congruence(u)?),
        ChannelKind::Povm(elements) => {
            let floor = 1e-12 * g.n().max(f64::MIN_POSITIVE);
            let lam = elements
                .iter()
                .map(|e| {
                    let v = e.trace_product(h)?;
                    if v < -floor {
                        Err(Error::NegativeIntensity(v))
                    } else {
                        Ok(v.max(0.0))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ChannelOutput::Intensities(IntensityVector::new(lam)?))
        }
        ChannelKind::Loss(_) => {
            // diagonal scaled by η_j directly so that it is exact
            op(differential(ch, h)?)
        }
        ChannelKind::Background(extra) => op(h.add(extra.matrix())?),
        ChannelKind::Compose(other) => op(h.direct_sum(other.matrix())),
        ChannelKind::Marginalize(keep) => op(h.principal_submatrix(keep)?),
        ChannelKind::Affine { offset, kraus } => {
            let mut acc = offset.matrix().clone();
            for a in kraus {
                acc = acc.add(&h.congruence(a)?)?;
            }
            op(acc)
        }
    }
}

/// Applies an operator-valued channel; measurement channels are rejected.
pub fn apply_operator(ch: &ChannelSpec, g: &IntensityOperator) -> Result<IntensityOperator> {
    apply(ch, g)?.operator()
}

/// Linear part of an operator-valued channel applied to a Hermitian
/// direction, i.e. the derivative `∂Φ̃(Γ(θ))/∂θ` given `∂Γ/∂θ` for a
/// `θ`-independent channel.
pub fn differential(ch: &ChannelSpec, dh: &HermitianMatrix) -> Result<HermitianMatrix> {
    if let Some(n) = ch.input_dim {
        check_dims(n, dh.dim())?;
    }
    match &ch.kind {
        ChannelKind::Unitary(u) => dh.congruence(u),
        ChannelKind::Povm(_) => Err(Error::InvalidChannel("measurement output is classical".into())),
        ChannelKind::Loss(eta) => {
            let m = dh.as_matrix();
            Ok(HermitianMatrix::symmetrized(CMatrix::from_fn(eta.len(), eta.len(), |j, k| {
                let w = if j == k { eta[j] } else { (eta[j] * eta[k]).sqrt() };
                m[(j, k)] * w
            })))
        }
        ChannelKind::Background(_) => Ok(dh.clone()),
        ChannelKind::Compose(other) => Ok(dh.direct_sum(&HermitianMatrix::zeros(other.dim()))),
        ChannelKind::Marginalize(keep) => dh.principal_submatrix(keep),
        ChannelKind::Affine { offset, kraus } => {
            let mut acc = HermitianMatrix::zeros(offset.dim());
            for a in kraus {
                acc = acc.add(&dh.congruence(a)?)?;
            }
            Ok(acc)
        }
    }
}

/// Coordinate projectors `|e_j⟩⟨e_j|`.
pub fn computational_povm(dim: usize) -> Vec<HermitianMatrix> {
    (0..dim)
        .map(|j| {
            let mut d = vec![0.0; dim];
            d[j] = 1.0;
            HermitianMatrix::from_diagonal(&d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psd::frobenius;

    fn diag(d: &[f64]) -> IntensityOperator {
        IntensityOperator::from_diagonal(d).unwrap()
    }

    fn close(a: &IntensityOperator, b: &IntensityOperator, tol: f64) -> bool {
        a.dim() == b.dim() && frobenius(&(a.matrix().as_matrix() - b.matrix().as_matrix())) <= tol
    }

    #[test]
    fn loss_example() {
        let ch = ChannelSpec::loss(vec![0.5, 1.0]).unwrap();
        let out = apply_operator(&ch, &diag(&[2.0, 2.0])).unwrap();
        assert!(close(&out, &diag(&[1.0, 2.0]), 0.0));
        assert!(ChannelSpec::loss(vec![1.5]).is_err());
    }

    #[test]
    fn background_on_zero_returns_offset() {
        let extra = diag(&[0.3, 0.7]);
        let ch = ChannelSpec::background(extra.clone());
        let out = apply_operator(&ch, &IntensityOperator::zeros(2)).unwrap();
        assert!(close(&out, &extra, 0.0));
    }

    #[test]
    fn compose_and_marginalize() {
        let ch = ChannelSpec::compose(diag(&[2.0]));
        let out = apply_operator(&ch, &diag(&[1.0])).unwrap();
        assert!(close(&out, &diag(&[1.0, 2.0]), 0.0));
        assert_eq!(out.n(), 3.0);

        let m = ChannelSpec::marginalize(vec![0], 2).unwrap();
        let back = apply_operator(&m, &out).unwrap();
        assert!(close(&back, &diag(&[1.0]), 0.0));
        assert!(ChannelSpec::marginalize(vec![0, 0], 2).is_err());
        assert!(ChannelSpec::marginalize(vec![2], 2).is_err());
    }

    #[test]
    fn povm_example() {
        let ch = ChannelSpec::povm(computational_povm(2)).unwrap();
        let lam = apply(&ch, &diag(&[1.0, 3.0])).unwrap().intensities().unwrap();
        assert_eq!(lam.values(), &[1.0, 3.0]);
        let bad = vec![HermitianMatrix::from_diagonal(&[1.0, 0.0])];
        assert!(matches!(ChannelSpec::povm(bad), Err(Error::InvalidChannel(_))));
    }

    #[test]
    fn unitary_validation() {
        let x = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| Complex64::new(v, 0.0)));
        let ch = ChannelSpec::unitary(x).unwrap();
        let out = apply_operator(&ch, &diag(&[1.0, 3.0])).unwrap();
        assert!(close(&out, &diag(&[3.0, 1.0]), 1e-15));
        let not_u = CMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0].map(|v| Complex64::new(v, 0.0)));
        assert!(ChannelSpec::unitary(not_u).is_err());
        assert!(matches!(apply(&ch, &diag(&[1.0])), Err(Error::DimensionMismatch(2, 1))));
    }

    #[test]
    fn kraus_constructions() {
        let eta = [0.25f64, 0.81];
        let a11 = CMatrix::from_diagonal(&DVector::from_iterator(2, eta.iter().map(|e| Complex64::new(e.sqrt(), 0.0))));
        let ch = affine_from_kraus(&[KrausBlock { a10: None, a11: Some(a11) }], 1e4, DEFAULT_RARITY_BOUND).unwrap();
        let loss = ChannelSpec::loss(eta.to_vec()).unwrap();
        let g = IntensityOperator::from_hermitian(HermitianMatrix::from_real(2, &[2.0, 0.5, 0.5, 1.0]).unwrap()).unwrap();
        assert!(close(&apply_operator(&ch, &g).unwrap(), &apply_operator(&loss, &g).unwrap(), 0.0));

        // spontaneous emission: A_j = sqrt(ε' τ'_jj) |1_j⟩⟨0|, Γ' = M ε' τ'
        let m: f64 = 1e4;
        let n_extra = 2.0;
        let eps = n_extra / m;
        let tau = [0.25f64, 0.75];
        let blocks: Vec<KrausBlock> = (0..2)
            .map(|j| {
                let mut v = DVector::zeros(2);
                v[j] = Complex64::new((eps * tau[j]).sqrt(), 0.0);
                KrausBlock { a10: Some(v), a11: None }
            })
            .chain(std::iter::once(KrausBlock {
                a10: None,
                a11: Some(CMatrix::identity(2, 2)),
            }))
            .collect();
        let ch = affine_from_kraus(&blocks, m, DEFAULT_RARITY_BOUND).unwrap();
        let out = apply_operator(&ch, &IntensityOperator::zeros(2)).unwrap();
        assert!(close(&out, &diag(&[0.5, 1.5]), 1e-12));
        let out = apply_operator(&ch, &g).unwrap();
        let bg = apply_operator(&ChannelSpec::background(diag(&[0.5, 1.5])), &g).unwrap();
        assert!(close(&out, &bg, 1e-12));

        assert!(matches!(
            affine_from_kraus(&blocks, m, 1e-5),
            Err(Error::RarityViolated { .. })
        ));
        let amplify = KrausBlock {
            a10: None,
            a11: Some(CMatrix::identity(2, 2) * Complex64::new(1.1, 0.0)),
        };
        assert!(affine_from_kraus(&[amplify], 1.0, DEFAULT_RARITY_BOUND).is_err());
    }
}
