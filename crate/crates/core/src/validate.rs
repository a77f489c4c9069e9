//! Self-check suite: closed-form and quadrature metrics against Monte-Carlo
//! oracles, plus the learner on a bandit with a known answer.

use std::fmt;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::experiment::Scenario;
use crate::metrics::{
    mixture_entropy, mutual_information, noise_entropy, pam_ber, secrecy_capacity, GaussianMixture, QuadratureConfig,
};
use crate::oracle::{mc_ber_oracle, mc_entropy_oracle, mc_mutual_information_oracle};
use crate::qlearn::{bandit_trace, LearnerConfig};
use crate::signal::{build_constellation, effective_gain, EffectiveGain, PamConstellation, Precoder};

/// Signature of the closed-form BER under test.
pub type BerFn = fn(u32, EffectiveGain, f64, f64) -> f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }

    fn record(&mut self, name: impl Into<String>, body: impl FnOnce() -> Result<(bool, String)>) {
        let start = Instant::now();
        let (passed, detail) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
        self.checks.push(Check { name: name.into(), passed, detail, seconds: start.elapsed().as_secs_f64() });
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(0);
        for c in &self.checks {
            let mark = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{mark}  {:<width$}  {:>7.2}s  {}", c.name, c.seconds, c.detail)?;
        }
        let passed = self.checks.iter().filter(|c| c.passed).count();
        write!(f, "{passed}/{} checks passed", self.checks.len())
    }
}

/// Gain (with σ = 1, E_s = 1) at which `ber` equals `target`, by bisection on
/// a log scale. Assumes `ber` is non-increasing in the gain.
pub fn gain_for_ber(ber: BerFn, order: u32, target: f64) -> f64 {
    let (mut lo, mut hi) = (-3.0f64, 5.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ber(order, EffectiveGain(10f64.powf(mid)), 1.0, 1.0) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    10f64.powf(0.5 * (lo + hi))
}

/// Bandit with ten distinct utilities: the fraction of seeds whose greedy
/// choice is the optimum in at least 95% of the final 200 slots.
pub fn bandit_check(cfg: &LearnerConfig, seeds: u64) -> (u64, Vec<f64>) {
    const UTILITIES: [f64; 10] = [0.3, -1.2, 1.7, 0.9, 2.4, -0.4, 1.1, 2.1, 0.0, 1.5];
    let best = 4;
    let fractions: Vec<f64> = (0..seeds)
        .map(|seed| {
            let trace = bandit_trace(&UTILITIES, cfg, 2000, &mut ChaCha8Rng::seed_from_u64(seed));
            trace[1800..].iter().filter(|&&a| a == best).count() as f64 / 200.0
        })
        .collect();
    (fractions.iter().filter(|&&f| f >= 0.95).count() as u64, fractions)
}

fn received_means(c: &PamConstellation, g: EffectiveGain) -> Vec<f64> {
    c.points().iter().map(|p| g.value() * p).collect()
}

/// Runs every check; failures are recorded rather than returned.
pub fn run_suite(
    level: Level,
    scenario: &Scenario,
    q: &QuadratureConfig,
    learner: &LearnerConfig,
    ber: BerFn,
) -> Report {
    let full = level == Level::Full;
    let mc_samples = if full { 2_000_000 } else { 200_000 };
    let mut report = Report::default();

    report.record("entropy closed form", || {
        let mut worst = 0.0f64;
        for sigma in [1e-6, 1.0, 1e3] {
            let h = mixture_entropy(&GaussianMixture::new(vec![0.0], sigma)?, q)?;
            worst = worst.max((h - noise_entropy(sigma)?).abs());
        }
        Ok((worst < 1e-6, format!("max |h - 1/2 log2(2 pi e s^2)| = {worst:.2e} bits")))
    });

    report.record("entropy vs Monte-Carlo", || {
        let means = [-3.0, -1.0, 1.0, 3.0];
        let h = mixture_entropy(&GaussianMixture::new(means.to_vec(), 1.0)?, q)?;
        let mc = mc_entropy_oracle(&means, 1.0, mc_samples, 11);
        Ok((mc.agrees(h, 4.0), format!("quadrature {h:.6}, MC {:.6} +/- {:.6}", mc.estimate, mc.std_error)))
    });

    report.record("mutual information vs Monte-Carlo", || {
        let c = PamConstellation::with_amplitude(8, 1.0)?;
        let mut worst = 0.0f64;
        let mut ok = true;
        for (i, snr) in [0.5, 2.0, 8.0].into_iter().enumerate() {
            let g = EffectiveGain(snr);
            let mi = mutual_information(&c, g, 1.0, q)?;
            let mc = mc_mutual_information_oracle(&received_means(&c, g), 1.0, mc_samples, 20 + i as u64);
            ok &= mc.agrees(mi, 4.0);
            worst = worst.max((mi - mc.estimate).abs() / mc.std_error);
        }
        Ok((ok, format!("worst deviation {worst:.2} SE (limit 4)")))
    });

    report.record("mutual information limits", || {
        let c = PamConstellation::with_amplitude(8, 1.0)?;
        let low = mutual_information(&c, EffectiveGain(1e-3), 1.0, q)?;
        let high = mutual_information(&c, EffectiveGain(1e6), 1.0, q)?;
        Ok((low < 0.01 && (high - 3.0).abs() < 0.01, format!("I(1e-3) = {low:.2e}, I(1e6) = {high:.6}")))
    });

    let orders: &[u32] = if full { &[2, 4, 8, 16, 32, 64] } else { &[2, 4, 8, 16] };
    report.record("BER vs Monte-Carlo", || {
        let mut worst = (0.0f64, 0, 0.0);
        let mut ok = true;
        for &m in orders {
            for (t, target) in [1e-1, 1e-2, 1e-3].into_iter().enumerate() {
                let g = gain_for_ber(ber, m, target);
                let closed = ber(m, EffectiveGain(g), 1.0, 1.0);
                let mc = mc_ber_oracle(m, g, 1.0, 1.0, 1_000_000, 100 * m as u64 + t as u64)?;
                ok &= mc.agrees(closed, 3.0);
                let dev = (closed - mc.estimate).abs() / mc.std_error;
                if dev > worst.0 {
                    worst = (dev, m, target);
                }
            }
        }
        Ok((ok, format!("worst {:.2} SE at M={}, BER~{:.0e} (limit 3)", worst.0, worst.1, worst.2)))
    });

    report.record("secrecy capacity vs Monte-Carlo", || {
        let drive = &scenario.drive;
        let n = scenario.num_leds();
        let mut precoders = vec![Precoder::uniform(n, 1.0)?];
        // outer LEDs only: favours a receiver near the centre line
        let mut outer = vec![0.0; n];
        outer[0] = 1.0;
        outer[n - 1] = 1.0;
        precoders.push(Precoder::new(outer)?);
        let mut signs = Vec::new();
        let mut ok = true;
        for (i, w) in precoders.iter().enumerate() {
            let c = build_constellation(8, drive)?;
            let gb = effective_gain(scenario.h_bob(), w, drive)?;
            let ge = effective_gain(scenario.h_eve(), w, drive)?;
            let cs = secrecy_capacity(&c, gb, scenario.bob.sigma, ge, scenario.eve.sigma, q)?;
            let b =
                mc_mutual_information_oracle(&received_means(&c, gb), scenario.bob.sigma, mc_samples, 40 + i as u64);
            let e =
                mc_mutual_information_oracle(&received_means(&c, ge), scenario.eve.sigma, mc_samples, 60 + i as u64);
            let se = b.std_error.hypot(e.std_error);
            ok &= (cs - (b.estimate - e.estimate)).abs() <= 4.0 * se;
            let swapped = secrecy_capacity(&c, ge, scenario.eve.sigma, gb, scenario.bob.sigma, q)?;
            ok &= swapped == -cs;
            signs.push(format!("{cs:+.4}"));
        }
        Ok((ok, format!("{}: C_s = {} bits", scenario.name, signs.join(", "))))
    });

    report.record("bandit convergence", || {
        let (hits, _) = bandit_check(learner, 20);
        Ok((hits >= 18, format!("{hits}/20 seeds greedy-optimal in >= 95% of the final 200 slots")))
    });

    report
}

/// The reference BER used by the command-line validator.
pub const REFERENCE_BER: BerFn = pam_ber;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_hits_target() {
        for m in [2, 16] {
            let g = gain_for_ber(pam_ber, m, 1e-2);
            let b = pam_ber(m, EffectiveGain(g), 1.0, 1.0);
            assert!((b - 1e-2).abs() < 1e-9, "{b}");
        }
    }

    #[test]
    fn report_formatting() {
        let mut r = Report::default();
        r.record("ok", || Ok((true, "fine".into())));
        r.record("bad", || Err(crate::Error::EmptyLog));
        assert!(!r.all_passed());
        assert_eq!(r.first_failure().unwrap().name, "bad");
        let text = r.to_string();
        assert!(text.contains("PASS  ok"));
        assert!(text.contains("FAIL  bad"));
        assert!(text.ends_with("1/2 checks passed"));
    }
}
