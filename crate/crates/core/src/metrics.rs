//! Secrecy capacity, bit-error rate and utility of precoded M-PAM on the
//! Bob/Eve wiretap channel.
//!
//! All entropies are in bits. The channel is real-valued, so the noise
//! entropy is the real-Gaussian `½ log₂(2πeσ²)`.

use std::f64::consts::{E, LN_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::signal::{check_order, EffectiveGain, PamConstellation};

/// Slack allowed on mutual information before clamping to `[0, log₂M]`.
pub const INFORMATION_SLACK: f64 = 1e-6;

/// Equiprobable Gaussian mixture with a common standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    means: Vec<f64>,
    sigma: f64,
}

impl GaussianMixture {
    pub fn new(means: Vec<f64>, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain { what: "noise standard deviation", value: sigma });
        }
        if means.is_empty() {
            return Err(Error::Domain { what: "mixture component count", value: 0.0 });
        }
        if let Some(m) = means.iter().find(|m| !m.is_finite()) {
            return Err(Error::Domain { what: "mixture mean", value: *m });
        }
        Ok(Self { means, sigma })
    }

    /// Received-signal mixture for constellation `c` scaled by gain `g`.
    pub fn received(c: &PamConstellation, g: EffectiveGain, sigma: f64) -> Result<Self> {
        Self::new(c.points().iter().map(|d| g.value() * d).collect(), sigma)
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Support beyond the extreme means, in units of σ.
    pub half_width_sigmas: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { half_width_sigmas: 10.0, rel_tol: 1e-7, max_subdivisions: 20_000 }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width_sigmas >= 6.0) {
            return Err(Error::Domain { what: "quadrature half width (sigmas)", value: self.half_width_sigmas });
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain { what: "quadrature relative tolerance", value: self.rel_tol });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityWeights {
    /// Penalty on Bob's BER.
    pub delta: f64,
    /// Reward on Eve's BER.
    pub zeta: f64,
}

impl UtilityWeights {
    pub fn new(delta: f64, zeta: f64) -> Result<Self> {
        for (what, v) in [("Bob BER coefficient", delta), ("Eve BER coefficient", zeta)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain { what, value: v });
            }
        }
        Ok(Self { delta, zeta })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub secrecy_capacity: f64,
    pub ber_bob: f64,
    pub ber_eve: f64,
    pub utility: f64,
}

impl MetricRecord {
    pub fn new(secrecy_capacity: f64, ber_bob: f64, ber_eve: f64, weights: &UtilityWeights) -> Self {
        Self { secrecy_capacity, ber_bob, ber_eve, utility: utility(secrecy_capacity, ber_bob, ber_eve, weights) }
    }
}

pub fn noise_entropy(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain { what: "noise standard deviation", value: sigma });
    }
    Ok(0.5 * (2.0 * PI * E * sigma * sigma).log2())
}

/// Entropy of the standardized mixture (unit variance components centred at
/// `means`), in nats.
///
/// The integrand is negligible (below `φ(k)`) outside the union of windows
/// `[μᵢ − k, μᵢ + k]`, so only that union is integrated. Widely separated
/// components therefore cost no more than overlapping ones.
fn standardized_entropy_nats(means: &[f64], q: &QuadratureConfig) -> Result<f64> {
    let k = q.half_width_sigmas;
    let mut sorted = means.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut windows: Vec<(f64, f64)> = Vec::new();
    for m in sorted {
        match windows.last_mut() {
            Some(last) if m - k <= last.1 => last.1 = m + k,
            _ => windows.push((m - k, m + k)),
        }
    }
    // Initial pieces of at most 2σ so that every component is resolved.
    let pieces: Vec<(f64, f64)> = windows
        .iter()
        .flat_map(|&(a, b)| {
            let n = ((b - a) / 2.0).ceil().max(1.0) as usize;
            let step = (b - a) / n as f64;
            (0..n).map(move |i| {
                let lo = a + step * i as f64;
                let hi = if i + 1 == n { b } else { a + step * (i + 1) as f64 };
                (lo, hi)
            })
        })
        .collect();

    let log_norm = -0.5 * (2.0 * PI).ln() - (means.len() as f64).ln();
    let integrand = |z: f64| {
        let peak = means.iter().map(|m| -0.5 * (z - m) * (z - m)).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = means.iter().map(|m| (-0.5 * (z - m) * (z - m) - peak).exp()).sum();
        let ln_p = log_norm + peak + sum.ln();
        let p = ln_p.exp();
        if p == 0.0 {
            0.0
        } else {
            -p * ln_p
        }
    };
    Ok(quadrature::integrate(integrand, &pieces, q.rel_tol, q.max_subdivisions)?.value)
}

/// Differential entropy `−∫ p log₂ p` of an equiprobable Gaussian mixture.
pub fn mixture_entropy(mix: &GaussianMixture, q: &QuadratureConfig) -> Result<f64> {
    q.validate()?;
    let sigma = mix.sigma;
    let means: Vec<f64> = mix.means.iter().map(|m| m / sigma).collect();
    Ok(standardized_entropy_nats(&means, q)? / LN_2 + sigma.log2())
}

/// `I(d; ȳ)` for equiprobable PAM through gain `g` and AWGN of std `sigma`.
pub fn mutual_information(c: &PamConstellation, g: EffectiveGain, sigma: f64, q: &QuadratureConfig) -> Result<f64> {
    let mix = GaussianMixture::received(c, g, sigma)?;
    q.validate()?;
    if g.value() == 0.0 {
        return Ok(0.0);
    }
    // h(ȳ) − h(n) with σ factored out of both terms.
    let means: Vec<f64> = mix.means.iter().map(|m| m / sigma).collect();
    let raw = standardized_entropy_nats(&means, q)? / LN_2 - 0.5 * (2.0 * PI * E).log2();
    let max = (c.order() as f64).log2();
    if raw < -INFORMATION_SLACK || raw > max + INFORMATION_SLACK {
        return Err(Error::InformationBounds { value: raw, max });
    }
    Ok(raw.clamp(0.0, max))
}

/// `C_s = I(d; ȳ_B) − I(d; ȳ_E)`. Negative when Eve's link is the stronger.
pub fn secrecy_capacity(
    c: &PamConstellation,
    g_bob: EffectiveGain,
    sigma_bob: f64,
    g_eve: EffectiveGain,
    sigma_eve: f64,
    q: &QuadratureConfig,
) -> Result<f64> {
    Ok(mutual_information(c, g_bob, sigma_bob, q)? - mutual_information(c, g_eve, sigma_eve, q)?)
}

/// Exact bit-error rate of Gray-coded M-PAM with ML detection.
///
/// Double sum over bit positions `k` and distance index `i` of
/// `(−1)^⌊i2^{k−1}/M⌋ (2^{k−1} − ⌊i2^{k−1}/M + ½⌋) erfc((2i+1)x) / (M log₂M)`
/// with `x = |g|/σ · √(3E_s / (2(M² − 1)))`.
///
/// The `1/2` under the root makes `erfc((2i+1)x) / 2` the probability that real
/// noise of variance `σ²` crosses `2i+1` half-spacings, i.e. `Q((2i+1)Δ/σ)`.
/// Without it the rate is that of noise with variance `σ²/2`, which disagrees
/// with a simulated Gray-coded link (see the Monte-Carlo oracle).
pub fn pam_ber(order: u32, g: EffectiveGain, sigma: f64, avg_symbol_energy: f64) -> f64 {
    debug_assert!(check_order(order).is_ok(), "unsupported order {order}");
    debug_assert!(sigma > 0.0);
    let m = order as u64;
    let bits = order.trailing_zeros() as u64;
    let mf = m as f64;
    let x = (g.value().abs() / sigma) * (3.0 * avg_symbol_energy / (2.0 * (mf * mf - 1.0))).sqrt();
    let mut total = 0.0;
    for k in 1..=bits {
        let half_weight = 1u64 << (k - 1);
        let upper = m - (m >> k);
        for i in 0..upper {
            let sign = if (i * half_weight / m).is_multiple_of(2) { 1.0 } else { -1.0 };
            // ⌊i2^{k−1}/M + ½⌋ in integer arithmetic
            let rounded = (2 * i * half_weight + m) / (2 * m);
            let coeff = (half_weight - rounded) as f64;
            if coeff != 0.0 {
                total += sign * coeff * erfc((2 * i + 1) as f64 * x);
            }
        }
    }
    (total / (mf * bits as f64)).clamp(0.0, 1.0)
}

pub fn utility(secrecy_capacity: f64, ber_bob: f64, ber_eve: f64, weights: &UtilityWeights) -> f64 {
    secrecy_capacity - weights.delta * ber_bob + weights.zeta * ber_eve
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ALLOWED_ORDERS;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn noise_entropy_values() {
        assert!(noise_entropy(1.0 / (2.0 * PI * E).sqrt()).unwrap().abs() < 1e-15);
        let h = noise_entropy(0.37).unwrap();
        assert_relative_eq!(noise_entropy(0.74).unwrap() - h, 1.0, max_relative = 1e-14);
        // ½log₂(2πe), 30-digit arithmetic
        assert_relative_eq!(noise_entropy(1.0).unwrap(), 2.047_095_585_180_641, max_relative = 1e-15);
        assert!(noise_entropy(0.0).is_err());
        assert!(noise_entropy(-1.0).is_err());
    }

    #[test]
    fn single_gaussian_entropy_matches_closed_form() {
        for sigma in [1e-6, 1.0, 1e3] {
            let mix = GaussianMixture::new(vec![0.3 * sigma], sigma).unwrap();
            let h = mixture_entropy(&mix, &q()).unwrap();
            assert!((h - noise_entropy(sigma).unwrap()).abs() < 1e-6, "sigma={sigma}: {h}");
        }
    }

    #[test]
    fn separated_components_add_log_m() {
        let mix = GaussianMixture::new(vec![-1000.0, 1000.0], 1.0).unwrap();
        let h = mixture_entropy(&mix, &q()).unwrap();
        assert!((h - (noise_entropy(1.0).unwrap() + 1.0)).abs() < 1e-4, "{h}");
    }

    #[test]
    fn four_level_mixture_entropy() {
        // numpy Monte-Carlo of −E[log₂ p(Y)], 10⁷ samples: 3.266743 ± 0.000213 bits
        let mix = GaussianMixture::new(vec![-3.0, -1.0, 1.0, 3.0], 1.0).unwrap();
        let h = mixture_entropy(&mix, &q()).unwrap();
        assert!((h - 3.266_743).abs() < 3.0 * 0.000_213, "{h}");
    }

    #[test]
    fn binary_mi_at_unit_snr() {
        // numpy Monte-Carlo of E[log₂ p(y|d)/p(y)], 10⁷ samples: 0.486239 ± 0.000257 bits
        let c = PamConstellation::with_amplitude(2, 1.0).unwrap();
        let mi = mutual_information(&c, EffectiveGain(1.0), 1.0, &q()).unwrap();
        assert!((mi - 0.486_239).abs() < 3.0 * 0.000_257, "{mi}");
    }

    #[test]
    fn mi_limits() {
        let c = PamConstellation::with_amplitude(8, 1.0).unwrap();
        assert_eq!(mutual_information(&c, EffectiveGain(0.0), 1.0, &q()).unwrap(), 0.0);
        let low = mutual_information(&c, EffectiveGain(1e-3), 1.0, &q()).unwrap();
        assert!(low < 0.01, "{low}");
        let high = mutual_information(&c, EffectiveGain(1e6), 1.0, &q()).unwrap();
        assert!((high - 3.0).abs() < 0.01, "{high}");
    }

    #[test]
    fn sixty_four_pam_noiseless() {
        let c = PamConstellation::with_amplitude(64, 1.0).unwrap();
        let mi = mutual_information(&c, EffectiveGain(-1e6), 1.0, &q()).unwrap();
        assert!((mi - 6.0).abs() < 0.01, "{mi}");
    }

    #[test]
    fn secrecy_symmetry() {
        let c = PamConstellation::with_amplitude(4, 1.0).unwrap();
        let (gb, ge) = (EffectiveGain(2.5), EffectiveGain(1.1));
        assert_eq!(secrecy_capacity(&c, gb, 1.0, gb, 1.0, &q()).unwrap(), 0.0);
        let fwd = secrecy_capacity(&c, gb, 1.0, ge, 0.8, &q()).unwrap();
        let rev = secrecy_capacity(&c, ge, 0.8, gb, 1.0, &q()).unwrap();
        assert_eq!(fwd, -rev);
        assert!(secrecy_capacity(&c, gb, 1.0, ge, 1.0, &q()).unwrap() >= 0.0);
    }

    #[test]
    fn ber_limits() {
        assert_eq!(pam_ber(2, EffectiveGain(0.0), 1.0, 1.0), 0.5);
        for m in ALLOWED_ORDERS {
            let zero = pam_ber(m, EffectiveGain(0.0), 1.0, 1.0);
            assert!((zero - 0.5).abs() < 1e-12, "M={m}: {zero}");
            assert_eq!(pam_ber(m, EffectiveGain(1e6), 1.0, 1.0), 0.0);
        }
    }

    #[test]
    fn binary_ber_is_gaussian_tail() {
        // BPSK-like: Q(gA/σ) with A = √E_s
        let g = 1.7;
        let expected = 0.5 * erfc(g / 2f64.sqrt());
        assert_relative_eq!(pam_ber(2, EffectiveGain(g), 1.0, 1.0), expected, max_relative = 1e-14);
    }

    #[test]
    fn ber_grows_with_order_at_fixed_amplitude() {
        for snr in [2.0, 8.0, 40.0] {
            let bers: Vec<f64> = ALLOWED_ORDERS
                .iter()
                .map(|&m| {
                    let c = PamConstellation::with_amplitude(m, 1.0).unwrap();
                    pam_ber(m, EffectiveGain(snr), 1.0, c.avg_symbol_energy())
                })
                .collect();
            assert!(bers.windows(2).all(|w| w[0] <= w[1]), "{bers:?}");
        }
    }

    #[test]
    fn utility_arithmetic() {
        let w = UtilityWeights::new(10.0, 5.0).unwrap();
        assert_relative_eq!(utility(1.0, 0.1, 0.3, &w), 1.5, max_relative = 1e-15);
        assert_eq!(utility(0.0, 0.0, 0.0, &w), 0.0);
        assert_relative_eq!(utility(0.5, 0.0, 0.5, &w), 3.0, max_relative = 1e-15);
        assert!(UtilityWeights::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn mixture_validation() {
        assert!(GaussianMixture::new(vec![0.0], 0.0).is_err());
        assert!(GaussianMixture::new(vec![], 1.0).is_err());
        let bad = QuadratureConfig { half_width_sigmas: 3.0, ..q() };
        let mix = GaussianMixture::new(vec![0.0], 1.0).unwrap();
        assert!(mixture_entropy(&mix, &bad).is_err());
    }

    #[test]
    fn quadrature_budget_is_enforced() {
        let tight = QuadratureConfig { rel_tol: 1e-15, max_subdivisions: 0, ..q() };
        let mix = GaussianMixture::new(vec![-3.0, -1.0, 1.0, 3.0], 1.0).unwrap();
        assert!(matches!(mixture_entropy(&mix, &tight), Err(Error::Quadrature { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn mi_bounded_even_and_monotone(idx in 0usize..6, g in 0.01f64..30.0) {
            let m = ALLOWED_ORDERS[idx];
            let c = PamConstellation::with_amplitude(m, 1.0).unwrap();
            let pos = mutual_information(&c, EffectiveGain(g), 1.0, &q()).unwrap();
            let neg = mutual_information(&c, EffectiveGain(-g), 1.0, &q()).unwrap();
            let more = mutual_information(&c, EffectiveGain(1.25 * g), 1.0, &q()).unwrap();
            prop_assert!((0.0..=(m as f64).log2()).contains(&pos));
            prop_assert!((pos - neg).abs() < 1e-6);
            prop_assert!(more >= pos - 1e-6);
        }

        #[test]
        fn mixture_entropy_dominates_noise(
            means in proptest::collection::vec(-20.0f64..20.0, 1..10),
            sigma in 0.05f64..5.0,
        ) {
            let mix = GaussianMixture::new(means, sigma).unwrap();
            let h = mixture_entropy(&mix, &q()).unwrap();
            prop_assert!(h >= noise_entropy(sigma).unwrap() - 1e-6);
        }

        #[test]
        fn ber_even_and_nonincreasing(idx in 0usize..6, g in 0.0f64..20.0) {
            let m = ALLOWED_ORDERS[idx];
            let es = PamConstellation::with_amplitude(m, 1.0).unwrap().avg_symbol_energy();
            let b = pam_ber(m, EffectiveGain(g), 1.0, es);
            prop_assert_eq!(b, pam_ber(m, EffectiveGain(-g), 1.0, es));
            prop_assert!(pam_ber(m, EffectiveGain(g * 1.1 + 1e-3), 1.0, es) <= b + 1e-15);
            prop_assert!((0.0..=1.0).contains(&b));
        }

        #[test]
        fn secrecy_is_antisymmetric(gb in -10.0f64..10.0, ge in -10.0f64..10.0, sb in 0.2f64..3.0, se in 0.2f64..3.0) {
            let c = PamConstellation::with_amplitude(4, 1.0).unwrap();
            let fwd = secrecy_capacity(&c, EffectiveGain(gb), sb, EffectiveGain(ge), se, &q()).unwrap();
            let rev = secrecy_capacity(&c, EffectiveGain(ge), se, EffectiveGain(gb), sb, &q()).unwrap();
            prop_assert_eq!(fwd, -rev);
        }
    }
}
