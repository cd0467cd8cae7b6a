//! Kac empirical point process over a finite set of outcome bins.
//!
//! Each trial draws a total count `L ~ Poisson(N)` and places `L`
//! independent objects into bins with probabilities `Λ_j / N`. The
//! resulting bin counts are independent `Poisson(Λ_j)` variables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{apply, ChannelSpec};
use crate::divergences::IntensityVector;
use crate::error::{Error, Result};
use crate::psd::HermitianMatrix;
use crate::state::IntensityOperator;

/// Below this mean the Poisson total is drawn by sequential inversion.
const INVERSION_LIMIT: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBatch {
    /// Row `t` holds the bin counts of trial `t`.
    pub counts: Vec<Vec<u64>>,
    pub seed: u64,
    pub lambda_used: IntensityVector,
}

impl SampleBatch {
    pub fn trials(&self) -> usize {
        self.counts.len()
    }

    pub fn bins(&self) -> usize {
        self.lambda_used.len()
    }

    /// Per-bin sample mean.
    pub fn means(&self) -> Vec<f64> {
        let t = self.trials() as f64;
        (0..self.bins())
            .map(|j| self.counts.iter().map(|r| r[j] as f64).sum::<f64>() / t)
            .collect()
    }

    /// Per-bin unbiased sample variance.
    pub fn variances(&self) -> Vec<f64> {
        let t = self.trials() as f64;
        self.means()
            .iter()
            .enumerate()
            .map(|(j, m)| self.counts.iter().map(|r| (r[j] as f64 - m).powi(2)).sum::<f64>() / (t - 1.0))
            .collect()
    }

    /// Sample correlation between bins `i` and `j`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let m = self.means();
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for r in &self.counts {
            let (x, y) = (r[i] as f64 - m[i], r[j] as f64 - m[j]);
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        if sxx == 0.0 || syy == 0.0 {
            return 0.0;
        }
        sxy / (sxx * syy).sqrt()
    }

    /// Counts with bins summed according to `groups`.
    pub fn merged(&self, groups: &[Vec<usize>]) -> Vec<Vec<u64>> {
        self.counts
            .iter()
            .map(|r| groups.iter().map(|g| g.iter().map(|&j| r[j]).sum()).collect())
            .collect()
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Poisson draw: inversion for small means, the PTRS transformed-rejection
/// sampler of `rand_distr` otherwise.
fn poisson_draw<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < INVERSION_LIMIT {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
            if p < f64::EPSILON * cdf && k as f64 > mean {
                break;
            }
        }
        k
    } else {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    }
}

fn categorical<R: Rng>(rng: &mut R, cdf: &[f64]) -> usize {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Samples `trials` independent records of the point process with bin
/// intensities `lambda`. Trial `t` uses its own ChaCha8 stream `t` under
/// `seed`, so the batch does not depend on how trials are split across
/// threads.
pub fn sample(lambda: &IntensityVector, trials: usize, seed: u64) -> Result<SampleBatch> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let n = lambda.total();
    if !n.is_finite() {
        return Err(Error::InvalidConfig("total intensity must be finite".into()));
    }
    let bins = lambda.len();
    let cdf: Vec<f64> = lambda
        .values()
        .iter()
        .scan(0.0, |acc, &l| {
            *acc += l;
            Some(*acc)
        })
        .collect();
    let counts = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut row = vec![0u64; bins];
            if n > 0.0 {
                let mut rng = trial_rng(seed, t);
                let total = poisson_draw(&mut rng, n);
                for _ in 0..total {
                    row[categorical(&mut rng, &cdf)] += 1;
                }
            }
            row
        })
        .collect();
    Ok(SampleBatch {
        counts,
        seed,
        lambda_used: lambda.clone(),
    })
}

/// Measures `Γ` with the POVM `elements` and samples the resulting
/// intensities.
pub fn measure_and_sample(g: &IntensityOperator, elements: Vec<HermitianMatrix>, trials: usize, seed: u64) -> Result<SampleBatch> {
    let povm = ChannelSpec::povm(elements)?;
    let lambda = apply(&povm, g)?.intensities()?;
    sample(&lambda, trials, seed)
}

/// Mean and standard error of a per-trial statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Log-likelihood-ratio estimate of `D(Λ‖Λ')` from a batch drawn under `Λ`.
///
/// The per-trial statistic is `Σ_j [Λ'_j - Λ_j + m_j ln(Λ_j/Λ'_j)]`. For a
/// batch drawn under `Λ'` instead, its expectation is `-D(Λ'‖Λ)`.
pub fn empirical_relative_entropy(batch: &SampleBatch, lambda: &IntensityVector, lambda_p: &IntensityVector) -> Result<Estimate> {
    if lambda.len() != lambda_p.len() {
        return Err(Error::LengthMismatch(lambda.len(), lambda_p.len()));
    }
    if batch.bins() != lambda.len() {
        return Err(Error::LengthMismatch(batch.bins(), lambda.len()));
    }
    let mut offset = 0.0;
    let mut log_ratio = Vec::with_capacity(lambda.len());
    for (&l, &lp) in lambda.values().iter().zip(lambda_p.values()) {
        if l > 0.0 && lp == 0.0 {
            return Err(Error::SupportViolation);
        }
        offset += lp - l;
        log_ratio.push(match (l > 0.0, lp > 0.0) {
            (true, _) => (l / lp).ln(),
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        });
    }
    let stats: Vec<f64> = batch
        .counts
        .iter()
        .map(|r| {
            offset
                + r.iter()
                    .zip(&log_ratio)
                    .map(|(&m, lr)| if m == 0 { 0.0 } else { m as f64 * lr })
                    .sum::<f64>()
        })
        .collect();
    let t = stats.len() as f64;
    let mean = stats.iter().sum::<f64>() / t;
    let var = if t > 1.0 {
        stats.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        std_error: (var / t).sqrt(),
    })
}
