//! Poisson-state building blocks.
//!
//! A Poisson state is described entirely by its intensity operator `Γ = N τ₁`.
//! The finite-M rare state `(1-ε)τ₀ ⊕ ετ₁` and the truncated Fock
//! representation are kept here as well; both serve as independent routes
//! to the closed forms in [`crate::divergences`].

use nalgebra::DVector;
use num_complex::Complex64;

use crate::divergences::{self, Divergence};
use crate::error::{Error, Result};
use crate::psd::{HermitianMatrix, PsdMatrix};

const TRACE_TOL: f64 = 1e-10;

/// Unit-trace positive-semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: PsdMatrix,
}

impl DensityOperator {
    pub fn new(matrix: PsdMatrix) -> Result<Self> {
        let tr = matrix.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::NotUnitTrace(tr));
        }
        Ok(DensityOperator { matrix })
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        Self::new(PsdMatrix::new(h)?)
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(PsdMatrix::from_diagonal(diag)?)
    }

    /// The pure state `|v><v| / <v|v>`.
    pub fn pure(v: &DVector<Complex64>) -> Result<Self> {
        let norm = v.norm_squared();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::NotUnitTrace(norm));
        }
        Self::from_hermitian(HermitianMatrix::outer(v).scale(1.0 / norm))
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.matrix
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        self.matrix.matrix()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// Unnormalized positive-semidefinite operator whose trace is the expected
/// object number `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityOperator {
    matrix: PsdMatrix,
    n: f64,
}

impl IntensityOperator {
    pub fn new(matrix: PsdMatrix) -> Self {
        let n = matrix.trace().max(0.0);
        IntensityOperator { matrix, n }
    }

    pub fn from_hermitian(h: HermitianMatrix) -> Result<Self> {
        Ok(Self::new(PsdMatrix::new(h)?))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Ok(Self::new(PsdMatrix::from_diagonal(diag)?))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(PsdMatrix::zeros(dim))
    }

    pub fn psd(&self) -> &PsdMatrix {
        &self.matrix
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        self.matrix.matrix()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Expected object number `tr Γ`.
    pub fn n(&self) -> f64 {
        self.n
    }

    /// `Γ / N`, or `None` for the zero operator.
    pub fn normalized(&self) -> Option<DensityOperator> {
        if self.n <= 0.0 {
            return None;
        }
        DensityOperator::new(self.matrix.scale(1.0 / self.n).ok()?).ok()
    }
}

/// `Γ = N τ₁`.
pub fn intensity_from_density(tau1: &DensityOperator, n: f64) -> Result<IntensityOperator> {
    if !(n >= 0.0) || !n.is_finite() {
        return Err(Error::NegativeN(n));
    }
    Ok(IntensityOperator::new(tau1.psd().scale(n)?))
}

/// Single temporal mode of the rare-object sequence: one object with
/// probability `epsilon`, vacuum otherwise, over `modes` modes.
#[derive(Debug, Clone, PartialEq)]
pub struct RareStateSpec {
    pub epsilon: f64,
    pub tau1: DensityOperator,
    pub modes: u64,
}

impl RareStateSpec {
    pub fn new(epsilon: f64, tau1: DensityOperator, modes: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidRareState(format!("epsilon {epsilon} outside [0, 1]")));
        }
        if modes == 0 {
            return Err(Error::InvalidRareState("mode count must be positive".into()));
        }
        Ok(RareStateSpec { epsilon, tau1, modes })
    }

    /// The rare state with `epsilon = N / modes`.
    pub fn from_intensity(n: f64, tau1: DensityOperator, modes: u64) -> Result<Self> {
        if !(n >= 0.0) {
            return Err(Error::NegativeN(n));
        }
        Self::new(n / modes as f64, tau1, modes)
    }

    /// Expected total object number `M ε`.
    pub fn n(&self) -> f64 {
        self.epsilon * self.modes as f64
    }

    pub fn object_dim(&self) -> usize {
        self.tau1.dim()
    }
}

/// `(1-ε) ⊕ ε τ₁`, vacuum at index 0.
pub fn single_mode_matrix(spec: &RareStateSpec) -> Result<DensityOperator> {
    let vacuum = HermitianMatrix::from_diagonal(&[1.0 - spec.epsilon]);
    let object = spec.tau1.matrix().scale(spec.epsilon);
    DensityOperator::from_hermitian(vacuum.direct_sum(&object))
}

/// Truncated Fock representation `exp(-N) ⊕_l Γ^{⊗l} / l!`.
///
/// Only the Poisson weights and `Γ` are stored; tensor powers never
/// materialize. Quantities of the full state follow from the single-object
/// ones through multiplicativity (fidelity, Chernoff) or additivity
/// (relative entropy).
#[derive(Debug, Clone, PartialEq)]
pub struct FockRepresentation {
    pub n: f64,
    pub gamma: IntensityOperator,
    pub l_max: usize,
    pub weights: Vec<f64>,
}

pub const DEFAULT_TAIL_BOUND: f64 = 1e-12;

/// Poisson probability `exp(-n) n^l / l!`, evaluated in log space.
pub fn poisson_pmf(n: f64, l: usize) -> f64 {
    if n == 0.0 {
        return if l == 0 { 1.0 } else { 0.0 };
    }
    let lf = l as f64;
    (-n + lf * n.ln() - ln_factorial(l)).exp()
}

fn ln_factorial(l: usize) -> f64 {
    (1..=l).map(|k| (k as f64).ln()).sum()
}

pub fn fock_truncate(gamma: &IntensityOperator, tail_bound: f64) -> Result<FockRepresentation> {
    if !(tail_bound > 0.0 && tail_bound < 1.0) {
        return Err(Error::InvalidTailBound(tail_bound));
    }
    let n = gamma.n();
    let mut weights = vec![poisson_pmf(n, 0)];
    // Tail mass is 1 - cumulative; sum the tail directly once the head is
    // large to avoid cancellation.
    loop {
        let l = weights.len() - 1;
        let tail = poisson_tail(n, l);
        if tail <= tail_bound {
            break;
        }
        weights.push(poisson_pmf(n, l + 1));
    }
    Ok(FockRepresentation {
        n,
        gamma: gamma.clone(),
        l_max: weights.len() - 1,
        weights,
    })
}

/// `P(L > l)` for `L ~ Poisson(n)`, summed term by term.
fn poisson_tail(n: f64, l: usize) -> f64 {
    let mut k = l + 1;
    let mut term = poisson_pmf(n, k);
    let mut acc = 0.0;
    while term > 0.0 {
        acc += term;
        k += 1;
        term *= n / k as f64;
        if term < acc * 1e-18 {
            break;
        }
    }
    acc
}

impl FockRepresentation {
    /// Weight of the `l`-object sector; beyond `l_max` the Poisson law is
    /// evaluated directly.
    pub fn weight(&self, l: usize) -> f64 {
        self.weights.get(l).copied().unwrap_or_else(|| poisson_pmf(self.n, l))
    }

    pub fn truncation_mass(&self) -> f64 {
        1.0 - self.weights.iter().sum::<f64>()
    }

    fn tau1(&self) -> Option<DensityOperator> {
        self.gamma.normalized()
    }
}

/// `Σ_l sqrt(w_l w'_l) F(τ₁, τ₁')^l` over the union of both truncations.
pub fn fock_fidelity(a: &FockRepresentation, b: &FockRepresentation) -> Result<f64> {
    let single = single_object(a, b, |x, y| divergences::fidelity(x, y))?;
    let l_max = a.l_max.max(b.l_max);
    Ok((0..=l_max)
        .map(|l| (a.weight(l) * b.weight(l)).sqrt() * single.powi(l as i32))
        .sum())
}

/// `Σ_l w_l^s w'_l^{1-s} C_s(τ₁, τ₁')^l`.
pub fn fock_chernoff(a: &FockRepresentation, b: &FockRepresentation, s: f64) -> Result<f64> {
    let single = single_object(a, b, |x, y| divergences::chernoff_quantity(x, y, s))?;
    let l_max = a.l_max.max(b.l_max);
    Ok((0..=l_max)
        .map(|l| {
            let (wa, wb) = (a.weight(l), b.weight(l));
            let mix = if wa == 0.0 || wb == 0.0 {
                0.0
            } else {
                wa.powf(s) * wb.powf(1.0 - s)
            };
            mix * single.powi(l as i32)
        })
        .sum())
}

/// `Σ_l w_l [ln(w_l / w'_l) + l D(τ₁‖τ₁')]`.
pub fn fock_relative_entropy(a: &FockRepresentation, b: &FockRepresentation) -> Result<Divergence> {
    let single = match (a.tau1(), b.tau1()) {
        (Some(ta), Some(tb)) => {
            divergences::relative_entropy(&unit(&ta), &unit(&tb))?
        }
        (None, _) => Divergence::Finite(0.0),
        (Some(_), None) => return Ok(Divergence::Infinite),
    };
    let Divergence::Finite(single) = single else {
        return Ok(Divergence::Infinite);
    };
    let l_max = a.l_max.max(b.l_max);
    let mut acc = 0.0;
    for l in 0..=l_max {
        let (wa, wb) = (a.weight(l), b.weight(l));
        if wa == 0.0 {
            continue;
        }
        if wb == 0.0 {
            return Ok(Divergence::Infinite);
        }
        acc += wa * ((wa / wb).ln() + l as f64 * single);
    }
    Ok(Divergence::Finite(acc))
}

fn unit(tau: &DensityOperator) -> IntensityOperator {
    IntensityOperator::new(tau.psd().clone())
}

fn single_object<F>(a: &FockRepresentation, b: &FockRepresentation, f: F) -> Result<f64>
where
    F: Fn(&IntensityOperator, &IntensityOperator) -> Result<f64>,
{
    crate::psd::check_dims(a.gamma.dim(), b.gamma.dim())?;
    match (a.tau1(), b.tau1()) {
        (Some(ta), Some(tb)) => f(&unit(&ta), &unit(&tb)),
        // one vacuum-only state: only the l = 0 sector overlaps
        _ => Ok(0.0),
    }
}
