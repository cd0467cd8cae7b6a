//! Finite-`M` rare-state calculations.
//!
//! The pre-limit state is `ρ_M = τ^{⊗M}` with `τ = (1-ε)τ₀ ⊕ ετ₁`. Its
//! fidelity and Chernoff quantity are `M`-th powers of single-mode values
//! and its relative entropy and Helstrom information are `M` times the
//! single-mode values. Sweeping `M` with `ε = N/M` checks every
//! Poisson-limit closed form by convergence.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::divergences::{
    chernoff_quantity, fidelity, poisson_state_chernoff, poisson_state_fidelity, relative_entropy, Divergence,
};
use crate::error::{Error, Result};
use crate::estimation::{derivative, helstrom, helstrom_from_derivatives, FnFamily, ParamFamily, DEFAULT_FD_STEP};
use crate::psd::{check_dims, HermitianMatrix, Tolerances};
use crate::state::{intensity_from_density, DensityOperator, IntensityOperator, RareStateSpec};

/// Exact quantities of `ρ_M` and `ρ'_M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMQuantities {
    pub fidelity: f64,
    pub chernoff: f64,
    pub relative_entropy: Divergence,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// `x^M` for `x = 1 + dx`, evaluated as `exp(M ln1p(dx))`.
fn power_near_one(dx: f64, m: f64) -> f64 {
    (m * dx.ln_1p()).exp()
}

fn object_block(spec: &RareStateSpec) -> Result<IntensityOperator> {
    intensity_from_density(&spec.tau1, spec.epsilon)
}

fn check_pair(a: &RareStateSpec, b: &RareStateSpec) -> Result<()> {
    if a.modes != b.modes {
        return Err(Error::ModeCountMismatch(a.modes, b.modes));
    }
    check_dims(a.object_dim(), b.object_dim())
}

/// Single-mode fidelity minus one, `F(τ,τ') - 1`.
fn single_mode_fidelity_m1(a: &RareStateSpec, b: &RareStateSpec) -> Result<f64> {
    let vac_m1 = (0.5 * ((-a.epsilon).ln_1p() + (-b.epsilon).ln_1p())).exp_m1();
    Ok(vac_m1 + fidelity(&object_block(a)?, &object_block(b)?)?)
}

/// Single-mode Chernoff quantity minus one, `C_s(τ,τ') - 1`.
fn single_mode_chernoff_m1(a: &RareStateSpec, b: &RareStateSpec, s: f64) -> Result<f64> {
    let vac_m1 = (s * (-a.epsilon).ln_1p() + (1.0 - s) * (-b.epsilon).ln_1p()).exp_m1();
    let vac_m1 = if (s == 0.0 && b.epsilon == 1.0) || (s == 1.0 && a.epsilon == 1.0) {
        -1.0
    } else {
        vac_m1
    };
    Ok(vac_m1 + chernoff_quantity(&object_block(a)?, &object_block(b)?, s)?)
}

/// Single-mode relative entropy `D(τ‖τ')` as a sum of block divergences.
fn single_mode_relative_entropy(a: &RareStateSpec, b: &RareStateSpec) -> Result<Divergence> {
    let vacuum = if a.epsilon == 1.0 {
        Divergence::Finite(1.0 - b.epsilon)
    } else if b.epsilon == 1.0 {
        Divergence::Infinite
    } else {
        let (la, lb) = ((-a.epsilon).ln_1p(), (-b.epsilon).ln_1p());
        Divergence::Finite(((1.0 - a.epsilon) * (la - lb) + a.epsilon - b.epsilon).max(0.0))
    };
    let object = relative_entropy(&object_block(a)?, &object_block(b)?)?;
    Ok(match (vacuum, object) {
        (Divergence::Finite(x), Divergence::Finite(y)) => Divergence::Finite(x + y),
        _ => Divergence::Infinite,
    })
}

/// `F(ρ_M,ρ'_M) = F(τ,τ')^M`, `C_s(ρ_M,ρ'_M) = C_s(τ,τ')^M` and
/// `D(ρ_M‖ρ'_M) = M D(τ‖τ')`.
pub fn finite_m_quantities(a: &RareStateSpec, b: &RareStateSpec, s: f64) -> Result<FiniteMQuantities> {
    check_pair(a, b)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::SOutOfRange(s));
    }
    let m = a.modes as f64;
    let f = power_near_one(single_mode_fidelity_m1(a, b)?, m);
    let c = power_near_one(single_mode_chernoff_m1(a, b, s)?, m);
    let d = match single_mode_relative_entropy(a, b)? {
        Divergence::Finite(x) => Divergence::Finite(m * x),
        Divergence::Infinite => Divergence::Infinite,
    };
    let note = d
        .is_infinite()
        .then(|| "support of the first state is not contained in the second".to_string());
    Ok(FiniteMQuantities {
        fidelity: f.clamp(0.0, 1.0),
        chernoff: c,
        relative_entropy: d,
        note,
    })
}

/// Rare state with `ε = N/M` carrying the normalized `Γ`.
pub fn rare_state_of(gamma: &IntensityOperator, modes: u64) -> Result<RareStateSpec> {
    let tau1 = match gamma.normalized() {
        Some(t) => t,
        None => {
            let d = gamma.dim().max(1);
            DensityOperator::from_diagonal(&vec![1.0 / d as f64; d])?
        }
    };
    let n = gamma.n();
    if n > modes as f64 {
        return Err(Error::InvalidRareState(format!("N = {n} exceeds the mode count {modes}")));
    }
    RareStateSpec::from_intensity(n, tau1, modes)
}

/// `τ(θ) = (1 - N/M) ⊕ Γ/M` and its derivatives.
fn single_mode_family_point(gamma: &IntensityOperator, dgammas: &[HermitianMatrix], m: f64) -> Result<(IntensityOperator, Vec<HermitianMatrix>)> {
    let n = gamma.n();
    if n > m {
        return Err(Error::InvalidRareState(format!("N = {n} exceeds the mode count {m}")));
    }
    let tau = HermitianMatrix::from_diagonal(&[1.0 - n / m]).direct_sum(&gamma.matrix().scale(1.0 / m));
    let tau = IntensityOperator::from_hermitian(tau)?;
    let dtau = dgammas
        .iter()
        .map(|d| HermitianMatrix::from_diagonal(&[-d.trace() / m]).direct_sum(&d.scale(1.0 / m)))
        .collect();
    Ok((tau, dtau))
}

/// `K(ρ_M) = M K(τ)` for the family `Γ(θ)` realized with `ε(θ) = N(θ)/M`.
///
/// Exceeds the Poisson-limit value `K(Γ)` by the vacuum-block term
/// `(∂_μN)(∂_νN) / (M(1-ε))`.
pub fn finite_m_helstrom<F: ParamFamily + ?Sized>(fam: &F, theta: &[f64], modes: u64, fd_step: f64) -> Result<DMatrix<f64>> {
    let m = modes as f64;
    let gamma = fam.gamma(theta)?;
    let ds = (0..fam.q())
        .map(|mu| derivative(fam, theta, mu, fd_step))
        .collect::<Result<Vec<_>>>()?;
    let (tau, dtau) = single_mode_family_point(&gamma, &ds, m)?;
    let k = helstrom_from_derivatives(&tau, &dtau, &Tolerances::default())?;
    Ok(k.into_inner() * m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    Fidelity,
    Chernoff,
    Kl,
    Helstrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub m: u64,
    pub finite: f64,
    pub limit: f64,
    pub abs_error: f64,
}

/// Finite-`M` value against its Poisson limit for each `M` in `m_list`.
///
/// `Fidelity`, `Chernoff` (at `s`) and `Kl` compare the state-level
/// quantities of `ρ(Γ)` and `ρ(Γ')`. `Helstrom` uses the mixture family
/// `Γ(θ) = (1-θ)Γ + θΓ'` at `θ = 1/2`. Rows whose finite or limit value is
/// infinite are omitted.
pub fn convergence_sweep(
    kind: ConvergenceKind,
    a: &IntensityOperator,
    b: &IntensityOperator,
    m_list: &[u64],
    s: f64,
) -> Result<Vec<ConvergenceRow>> {
    check_dims(a.dim(), b.dim())?;
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig("M list must be strictly ascending".into()));
    }
    let mixture = mixture_family(a, b);
    let limit = match kind {
        ConvergenceKind::Fidelity => Divergence::Finite(poisson_state_fidelity(a, b)?),
        ConvergenceKind::Chernoff => Divergence::Finite(poisson_state_chernoff(a, b, s)?),
        ConvergenceKind::Kl => relative_entropy(a, b)?,
        ConvergenceKind::Helstrom => Divergence::Finite(helstrom(&mixture, &[0.5], DEFAULT_FD_STEP)?.entry(0, 0)),
    };
    let rows = m_list
        .par_iter()
        .map(|&m| -> Result<Option<ConvergenceRow>> {
            let finite = match kind {
                ConvergenceKind::Helstrom => Divergence::Finite(finite_m_helstrom(&mixture, &[0.5], m, DEFAULT_FD_STEP)?[(0, 0)]),
                _ => {
                    let q = finite_m_quantities(&rare_state_of(a, m)?, &rare_state_of(b, m)?, s)?;
                    match kind {
                        ConvergenceKind::Fidelity => Divergence::Finite(q.fidelity),
                        ConvergenceKind::Chernoff => Divergence::Finite(q.chernoff),
                        _ => q.relative_entropy,
                    }
                }
            };
            Ok(match (finite, limit) {
                (Divergence::Finite(f), Divergence::Finite(l)) => Some(ConvergenceRow {
                    m,
                    finite: f,
                    limit: l,
                    abs_error: (f - l).abs(),
                }),
                _ => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn mixture_family(a: &IntensityOperator, b: &IntensityOperator) -> FnFamily {
    let (ga, gb) = (a.matrix().clone(), b.matrix().clone());
    let diff = HermitianMatrix::symmetrized(gb.as_matrix() - ga.as_matrix());
    FnFamily::new(1, move |t: &[f64]| {
        IntensityOperator::from_hermitian(HermitianMatrix::symmetrized(
            ga.scale(1.0 - t[0]).as_matrix() + gb.scale(t[0]).as_matrix(),
        ))
    })
    .with_derivative(move |_, _| Ok(diff.clone()))
}

/// Least-squares slope of `ln(error)` against `ln(M)` over rows with a
/// positive error; `None` with fewer than two such rows.
pub fn loglog_slope(rows: &[ConvergenceRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > 0.0 && r.abs_error.is_finite())
        .map(|r| ((r.m as f64).ln(), r.abs_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Some(sxy / sxx)
}
