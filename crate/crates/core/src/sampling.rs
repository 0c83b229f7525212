//! Finite-sample Monte Carlo of two-point-measurement runs and the Jarzynski
//! free-energy estimator.
//!
//! # Random streams
//!
//! Every random draw comes from a ChaCha8 stream. The 256-bit key is expanded
//! from a 64-bit seed by `ChaCha8Rng::seed_from_u64`; the 64-bit stream id is
//! `(grid_index << 32) | replica`. Streams are counter-based, so replica `r`
//! at grid point `i` sees the same numbers regardless of how the work is
//! scheduled across threads. Independent scenarios get independent keys via
//! [`derive_seed`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tpm::{free_energy_difference, JointProbabilityTable};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub m: usize,
    pub n: usize,
    /// `spectrum_tau[n] − spectrum0[m]`, kHz
    pub w: f64,
}

/// SplitMix64 finalizer applied to `seed + (index + 1)·φ`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `(grid_index, replica)` under `seed`.
pub fn substream(seed: u64, grid_index: u32, replica: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(grid_index) << 32) | u64::from(replica));
    rng
}

struct Atom {
    m: usize,
    n: usize,
    w: f64,
    prob: f64,
}

fn flatten(table: &JointProbabilityTable, spectrum0: &[f64], spectrum_tau: &[f64]) -> Result<Vec<Atom>> {
    let dim = table.dim();
    for found in [spectrum0.len(), spectrum_tau.len()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    Ok(table
        .cells()
        .map(|(m, n, prob)| Atom {
            m,
            n,
            w: spectrum_tau[n] - spectrum0[m],
            prob,
        })
        .collect())
}

/// `count` independent trajectories drawn by inverse CDF over the flattened
/// (row-major) table.
pub fn sample_trajectories(
    table: &JointProbabilityTable,
    spectrum0: &[f64],
    spectrum_tau: &[f64],
    count: usize,
    seed: u64,
) -> Result<Vec<TrajectorySample>> {
    sample_trajectories_with(table, spectrum0, spectrum_tau, count, &mut substream(seed, 0, 0))
}

pub fn sample_trajectories_with<R: Rng + ?Sized>(
    table: &JointProbabilityTable,
    spectrum0: &[f64],
    spectrum_tau: &[f64],
    count: usize,
    rng: &mut R,
) -> Result<Vec<TrajectorySample>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    let atoms = flatten(table, spectrum0, spectrum_tau)?;
    let mut cdf = Vec::with_capacity(atoms.len());
    let mut acc = 0.0;
    for a in &atoms {
        acc += a.prob;
        cdf.push(acc);
    }
    // Rounding can leave the last cumulative value just below 1; fall back to
    // the last atom that carries mass.
    let last = atoms
        .iter()
        .rposition(|a| a.prob > 0.0)
        .ok_or(Error::Empty("joint probability table"))?;
    Ok((0..count)
        .map(|_| {
            let u = rng.random::<f64>() * acc;
            let k = cdf.partition_point(|&c| c <= u).min(last);
            let a = &atoms[k];
            TrajectorySample { m: a.m, n: a.n, w: a.w }
        })
        .collect())
}

/// `−β⁻¹ ln(N⁻¹ Σ_k e^{−βW_k})`, evaluated with log-sum-exp.
pub fn jarzynski_estimator(samples: &[TrajectorySample], beta: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("trajectory samples"));
    }
    check_beta(beta)?;
    let shift = samples.iter().map(|s| -beta * s.w).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = samples.iter().map(|s| (-beta * s.w - shift).exp()).sum();
    Ok(-(shift + sum.ln() - (samples.len() as f64).ln()) / beta)
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::invalid(
            "beta",
            format!("must be positive and finite, got {beta}"),
        ));
    }
    Ok(())
}

/// Estimator quality versus sample count, against the exact `ΔF`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorSeries {
    pub n_grid: Vec<usize>,
    /// Replica mean of the estimate, kHz.
    pub mean_estimate: Vec<f64>,
    /// `mean_estimate − ΔF`, kHz.
    pub bias: Vec<f64>,
    /// Root-mean-square error against `ΔF`, kHz.
    pub rmse: Vec<f64>,
    /// Standard error of `mean_estimate`, kHz.
    pub std_error: Vec<f64>,
    pub delta_f: f64,
    pub replicas: usize,
    pub seed: u64,
}

/// Runs `replicas` independent estimations at every sample count in `n_grid`.
///
/// A replica only needs the number of runs that landed on each table cell, so
/// each one draws a multinomial count vector (sequential conditional
/// binomials) instead of materialising `N` trajectories. The estimator's
/// distribution is identical.
pub fn convergence_study(
    table: &JointProbabilityTable,
    spectrum0: &[f64],
    spectrum_tau: &[f64],
    beta: f64,
    n_grid: &[usize],
    replicas: usize,
    seed: u64,
) -> Result<EstimatorSeries> {
    if n_grid.is_empty() {
        return Err(Error::Empty("n_grid"));
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] == 0 {
        return Err(Error::invalid(
            "n_grid",
            "sample counts must be positive and strictly increasing",
        ));
    }
    if replicas < 2 {
        return Err(Error::invalid("replicas", "need at least two replicas"));
    }
    if replicas > u32::MAX as usize || n_grid.len() > u32::MAX as usize {
        return Err(Error::invalid("replicas", "stream index space exhausted"));
    }
    check_beta(beta)?;
    let atoms = flatten(table, spectrum0, spectrum_tau)?;
    let delta_f = free_energy_difference(spectrum0, spectrum_tau, beta)?;

    let mut series = EstimatorSeries {
        n_grid: n_grid.to_vec(),
        mean_estimate: Vec::with_capacity(n_grid.len()),
        bias: Vec::with_capacity(n_grid.len()),
        rmse: Vec::with_capacity(n_grid.len()),
        std_error: Vec::with_capacity(n_grid.len()),
        delta_f,
        replicas,
        seed,
    };
    for (gi, &n) in n_grid.iter().enumerate() {
        let estimates: Vec<f64> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = substream(seed, gi as u32, r as u32);
                estimate_from_counts(&atoms, n as u64, beta, &mut rng)
            })
            .collect();
        let r = replicas as f64;
        let mean = estimates.iter().sum::<f64>() / r;
        let mse = estimates.iter().map(|e| (e - delta_f).powi(2)).sum::<f64>() / r;
        let spread = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (r - 1.0);
        series.mean_estimate.push(mean);
        series.bias.push(mean - delta_f);
        series.rmse.push(mse.sqrt());
        series.std_error.push((spread / r).sqrt());
    }
    Ok(series)
}

fn estimate_from_counts<R: Rng + ?Sized>(atoms: &[Atom], n: u64, beta: f64, rng: &mut R) -> f64 {
    let mut remaining_n = n;
    let mut remaining_p = 1.0f64;
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    for (k, a) in atoms.iter().enumerate() {
        if remaining_n == 0 {
            break;
        }
        let count = if k + 1 == atoms.len() || a.prob >= remaining_p {
            remaining_n
        } else if a.prob <= 0.0 {
            0
        } else {
            let p = (a.prob / remaining_p).clamp(0.0, 1.0);
            Binomial::new(remaining_n, p).expect("p in [0, 1]").sample(rng)
        };
        remaining_n -= count;
        remaining_p -= a.prob;
        if count > 0 {
            terms.push(((count as f64).ln(), -beta * a.w));
        }
    }
    let shift = terms.iter().map(|(lc, x)| lc + x).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|(lc, x)| (lc + x - shift).exp()).sum();
    -(shift + sum.ln() - (n as f64).ln()) / beta
}
