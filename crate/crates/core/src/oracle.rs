//! Monte-Carlo reference estimators for the closed-form metrics.
//!
//! These simulate the link symbol by symbol and share no code with the
//! quadrature or closed-form paths they are used to check. Each call owns a
//! generator seeded from its `seed` argument.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};

pub const MIN_BER_SYMBOLS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

impl McEstimate {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn agrees(&self, value: f64, k: f64) -> bool {
        (value - self.estimate).abs() <= k * self.std_error
    }
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Bit-error rate of Gray-mapped M-PAM over `y = g·d + n` with ML
/// (nearest-level) detection, measured on `n_symbols` random symbols.
///
/// Levels are `A(2i − M + 1)/(M − 1)` with `A` recovered from `avg_symbol_energy`.
/// The standard error is the binomial one over all transmitted bits.
pub fn mc_ber_oracle(
    order: u32,
    g: f64,
    sigma: f64,
    avg_symbol_energy: f64,
    n_symbols: usize,
    seed: u64,
) -> Result<McEstimate> {
    crate::signal::check_order(order)?;
    if n_symbols < MIN_BER_SYMBOLS {
        return Err(Error::Domain { what: "Monte-Carlo symbol count", value: n_symbols as f64 });
    }
    if !(sigma > 0.0) {
        return Err(Error::Domain { what: "noise standard deviation", value: sigma });
    }
    let m = order as usize;
    let mf = m as f64;
    let amplitude = (avg_symbol_energy * 3.0 * (mf - 1.0) / (mf + 1.0)).sqrt();
    let spacing = 2.0 * amplitude / (mf - 1.0);
    let level = |i: usize| amplitude * (2.0 * i as f64 - mf + 1.0) / (mf - 1.0);
    // A coherent receiver undoes the gain; with no gain there is nothing to
    // undo and any fixed rule is ML.
    let scale = if g == 0.0 { 1.0 } else { g };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bit_errors: u64 = 0;
    for _ in 0..n_symbols {
        let sent = rng.random_range(0..m);
        let noise: f64 = rng.sample(StandardNormal);
        let received = g * level(sent) + sigma * noise;
        let z = received / scale;
        let decided = ((z + amplitude) / spacing).round().clamp(0.0, mf - 1.0) as usize;
        bit_errors += (gray(sent) ^ gray(decided)).count_ones() as u64;
    }
    let n_bits = (n_symbols * order.trailing_zeros() as usize) as f64;
    let p = bit_errors as f64 / n_bits;
    Ok(McEstimate { estimate: p, std_error: (p * (1.0 - p) / n_bits).sqrt() })
}

fn log_mixture_density(y: f64, means: &[f64], sigma: f64) -> f64 {
    let terms: Vec<f64> = means.iter().map(|m| -0.5 * ((y - m) / sigma).powi(2)).collect();
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - peak).exp()).sum();
    peak + sum.ln() - (means.len() as f64).ln() - (sigma * (2.0 * PI).sqrt()).ln()
}

fn mean_and_error(samples: impl Iterator<Item = f64>) -> McEstimate {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for x in samples {
        n += 1.0;
        let delta = x - mean;
        mean += delta / n;
        m2 += delta * (x - mean);
    }
    McEstimate { estimate: mean, std_error: (m2 / (n - 1.0) / n).sqrt() }
}

/// `−E[log₂ p(Y)]` for an equiprobable Gaussian mixture.
pub fn mc_entropy_oracle(means: &[f64], sigma: f64, n_samples: usize, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mean_and_error((0..n_samples).map(|_| {
        let i = rng.random_range(0..means.len());
        let noise: f64 = rng.sample(StandardNormal);
        let y = means[i] + sigma * noise;
        -log_mixture_density(y, means, sigma) / std::f64::consts::LN_2
    }))
}

/// `E[log₂ p(y|d)/p(y)]` with `d` uniform over `means` (already scaled by
/// the channel gain).
pub fn mc_mutual_information_oracle(means: &[f64], sigma: f64, n_samples: usize, seed: u64) -> McEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mean_and_error((0..n_samples).map(|_| {
        let i = rng.random_range(0..means.len());
        let noise: f64 = rng.sample(StandardNormal);
        let y = means[i] + sigma * noise;
        let conditional = -0.5 * noise * noise - (sigma * (2.0 * PI).sqrt()).ln();
        (conditional - log_mixture_density(y, means, sigma)) / std::f64::consts::LN_2
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gain_is_a_coin_flip() {
        let r = mc_ber_oracle(2, 0.0, 1.0, 1.0, 1_000_000, 3).unwrap();
        assert!((r.estimate - 0.5).abs() <= 3.0 * 5e-4, "{r:?}");
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let a = mc_ber_oracle(8, 0.9, 0.3, 1.0, 200_000, 11).unwrap();
        let b = mc_ber_oracle(8, 0.9, 0.3, 1.0, 200_000, 11).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        let c = mc_ber_oracle(8, 0.9, 0.3, 1.0, 200_000, 12).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn rejects_short_runs() {
        assert!(mc_ber_oracle(2, 1.0, 1.0, 1.0, 10, 0).is_err());
        assert!(mc_ber_oracle(3, 1.0, 1.0, 1.0, 200_000, 0).is_err());
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for i in 0..63 {
            assert_eq!((gray(i) ^ gray(i + 1)).count_ones(), 1);
        }
    }

    #[test]
    fn noiseless_limit() {
        let r = mc_ber_oracle(16, 1.0, 1e-9, 1.0, 100_000, 5).unwrap();
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn single_gaussian_entropy() {
        let r = mc_entropy_oracle(&[0.0], 1.0, 200_000, 1);
        let exact = 0.5 * (2.0 * PI * std::f64::consts::E).log2();
        assert!(r.agrees(exact, 4.0), "{r:?}");
    }
}
