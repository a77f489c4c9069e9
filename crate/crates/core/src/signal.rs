//! Amplitude-constrained M-PAM, precoded LED drive currents and the scalar
//! gain left after the DC term is filtered out at the receiver.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};

pub const ALLOWED_ORDERS: [u32; 6] = [2, 4, 8, 16, 32, 64];

pub fn check_order(order: u32) -> Result<()> {
    if ALLOWED_ORDERS.contains(&order) {
        Ok(())
    } else {
        Err(Error::UnsupportedOrder(order))
    }
}

/// LED and photodiode electrical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// DC bias current in amperes.
    pub dc_bias: f64,
    /// Modulation index in [0, 1].
    pub modulation_index: f64,
    /// Electrical-to-optical conversion in W/A.
    pub led_conversion: f64,
    /// Photodiode responsivity in A/W.
    pub pd_responsivity: f64,
}

impl DriveParams {
    pub fn new(dc_bias: f64, modulation_index: f64, led_conversion: f64, pd_responsivity: f64) -> Result<Self> {
        if !(dc_bias > 0.0 && dc_bias.is_finite()) {
            return Err(Error::Domain { what: "DC bias (A)", value: dc_bias });
        }
        if !(0.0..=1.0).contains(&modulation_index) {
            return Err(Error::Domain { what: "modulation index", value: modulation_index });
        }
        if !(led_conversion > 0.0 && led_conversion.is_finite()) {
            return Err(Error::Domain { what: "LED conversion factor (W/A)", value: led_conversion });
        }
        if !(pd_responsivity > 0.0 && pd_responsivity.is_finite()) {
            return Err(Error::Domain { what: "PD responsivity (A/W)", value: pd_responsivity });
        }
        Ok(Self { dc_bias, modulation_index, led_conversion, pd_responsivity })
    }

    /// Bias derived from the optical power each luminaire emits at a zero symbol.
    pub fn from_optical_power(
        optical_power_w: f64,
        modulation_index: f64,
        led_conversion: f64,
        pd_responsivity: f64,
    ) -> Result<Self> {
        Self::new(optical_power_w / led_conversion, modulation_index, led_conversion, pd_responsivity)
    }

    /// Peak symbol amplitude `αI_DC`.
    pub fn peak_amplitude(&self) -> f64 {
        self.modulation_index * self.dc_bias
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PamConstellation {
    order: u32,
    amplitude: f64,
    points: Vec<f64>,
    avg_symbol_energy: f64,
}

impl PamConstellation {
    /// Symmetric, equally spaced levels `A(2i − M + 1)/(M − 1)` with peak `A`.
    pub fn with_amplitude(order: u32, amplitude: f64) -> Result<Self> {
        check_order(order)?;
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::Domain { what: "PAM peak amplitude", value: amplitude });
        }
        let m = order as f64;
        let points = (0..order).map(|i| amplitude * (2.0 * i as f64 - m + 1.0) / (m - 1.0)).collect();
        let avg_symbol_energy = amplitude * amplitude * (m + 1.0) / (3.0 * (m - 1.0));
        Ok(Self { order, amplitude, points, avg_symbol_energy })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn avg_symbol_energy(&self) -> f64 {
        self.avg_symbol_energy
    }
}

pub fn build_constellation(order: u32, params: &DriveParams) -> Result<PamConstellation> {
    PamConstellation::with_amplitude(order, params.peak_amplitude())
}

/// Per-luminaire precoding weights, bounded by 1 in the infinity norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoder(Vec<f64>);

impl Precoder {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.abs() <= 1.0)) {
            return Err(Error::Domain { what: "precoder weight (|w| <= 1)", value: *w });
        }
        Ok(Self(weights))
    }

    pub fn uniform(n: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `γη hᵀw`. May be zero or negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct EffectiveGain(pub f64);

impl EffectiveGain {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn effective_gain(h: &ChannelVector, w: &Precoder, params: &DriveParams) -> Result<EffectiveGain> {
    if h.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: h.len(), got: w.len() });
    }
    let dot: f64 = h.gains().iter().zip(w.weights()).map(|(h, w)| h * w).sum();
    Ok(EffectiveGain(params.pd_responsivity * params.led_conversion * dot))
}

/// LED drive currents `x_n = w_n d + I_DC`.
pub fn drive_currents(w: &Precoder, symbol: f64, params: &DriveParams) -> Result<Vec<f64>> {
    let peak = params.peak_amplitude();
    if !(symbol.abs() <= peak) {
        return Err(Error::LinearRange(format!("|symbol| = {} exceeds αI_DC = {peak}", symbol.abs())));
    }
    Ok(w.weights().iter().map(|w| w * symbol + params.dc_bias).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn table_params() -> DriveParams {
        DriveParams::from_optical_power(5.0, 0.1, 0.44, 0.54).unwrap()
    }

    #[test]
    fn binary_constellation() {
        let c = PamConstellation::with_amplitude(2, 1.0).unwrap();
        assert_eq!(c.points(), &[-1.0, 1.0]);
        assert_relative_eq!(c.avg_symbol_energy(), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn quaternary_constellation() {
        let c = PamConstellation::with_amplitude(4, 1.0).unwrap();
        for (p, e) in c.points().iter().zip([-1.0, -1.0 / 3.0, 1.0 / 3.0, 1.0]) {
            assert_relative_eq!(*p, e, max_relative = 1e-15);
        }
        assert_relative_eq!(c.avg_symbol_energy(), 5.0 / 9.0, max_relative = 1e-15);
    }

    #[test]
    fn table_bias_and_64_pam_energy() {
        let params = table_params();
        assert_relative_eq!(params.dc_bias, 11.363_636_363_636_363, max_relative = 1e-15);
        let c = build_constellation(64, &params).unwrap();
        // A²(M+1)/(3(M−1)) with A = 0.1·5/0.44, 30-digit arithmetic
        assert_relative_eq!(c.avg_symbol_energy(), 0.444_105_557_741_921_4, max_relative = 1e-14);
    }

    #[test]
    fn unsupported_orders() {
        for m in [0, 1, 3, 12, 128] {
            assert_eq!(PamConstellation::with_amplitude(m, 1.0), Err(Error::UnsupportedOrder(m)));
        }
    }

    #[test]
    fn effective_gain_cases() {
        let p = table_params();
        let h = ChannelVector::new(vec![1e-6, 2e-6, 3e-6]).unwrap();
        assert_eq!(effective_gain(&h, &Precoder::uniform(3, 0.0).unwrap(), &p).unwrap().value(), 0.0);
        let h1 = ChannelVector::new(vec![0.0, 4e-6, 0.0]).unwrap();
        let unit = Precoder::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_relative_eq!(effective_gain(&h1, &unit, &p).unwrap().value(), 0.54 * 0.44 * 4e-6, max_relative = 1e-15);
        assert!(matches!(
            effective_gain(&h, &Precoder::uniform(2, 1.0).unwrap(), &p),
            Err(Error::DimensionMismatch { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn setup_one_all_ones_gain() {
        let h = ChannelVector::new(vec![2.260_188_540_949_993e-6; 4]).unwrap();
        let g = effective_gain(&h, &Precoder::uniform(4, 1.0).unwrap(), &table_params()).unwrap();
        assert_relative_eq!(g.value(), 2.148_083_189_318_873_4e-6, max_relative = 1e-13);
    }

    #[test]
    fn drive_current_bounds() {
        let p = table_params();
        let a = p.peak_amplitude();
        let w = Precoder::new(vec![1.0, -1.0, 0.5]).unwrap();
        assert_eq!(drive_currents(&w, 0.0, &p).unwrap(), vec![p.dc_bias; 3]);
        let x = drive_currents(&w, a, &p).unwrap();
        assert_relative_eq!(x[0], p.dc_bias * 1.1, max_relative = 1e-15);
        assert_relative_eq!(x[1], p.dc_bias * 0.9, max_relative = 1e-15);
        assert!(matches!(drive_currents(&w, 1.01 * a, &p), Err(Error::LinearRange(_))));
        assert!(Precoder::new(vec![1.2]).is_err());
    }

    proptest! {
        #[test]
        fn constellation_shape(idx in 0usize..6, amp in 1e-3f64..1e3) {
            let c = PamConstellation::with_amplitude(ALLOWED_ORDERS[idx], amp).unwrap();
            let pts = c.points();
            let sum: f64 = pts.iter().sum();
            prop_assert!(sum.abs() <= 1e-12 * amp * pts.len() as f64);
            let step = pts[1] - pts[0];
            for w in pts.windows(2) {
                prop_assert!(w[1] > w[0]);
                prop_assert!(((w[1] - w[0]) - step).abs() <= 1e-12 * amp);
            }
            let peak = pts.iter().fold(0.0f64, |m, p| m.max(p.abs()));
            prop_assert!((peak - amp).abs() <= 1e-15 * amp);
            let mean_sq = pts.iter().map(|p| p * p).sum::<f64>() / pts.len() as f64;
            prop_assert!((mean_sq - c.avg_symbol_energy()).abs() <= 1e-12 * c.avg_symbol_energy());
        }

        #[test]
        fn drive_currents_stay_linear(
            weights in proptest::collection::vec(-1.0f64..=1.0, 1..8),
            frac in -1.0f64..=1.0,
            alpha in 0.0f64..=1.0,
            bias in 0.1f64..50.0,
        ) {
            let p = DriveParams::new(bias, alpha, 0.44, 0.54).unwrap();
            let w = Precoder::new(weights).unwrap();
            let x = drive_currents(&w, frac * p.peak_amplitude(), &p).unwrap();
            let slack = 1e-12 * bias;
            for xn in x {
                prop_assert!(xn >= bias * (1.0 - alpha) - slack && xn <= bias * (1.0 + alpha) + slack);
            }
        }

        #[test]
        fn effective_gain_is_linear(
            h in proptest::collection::vec(0.0f64..1e-5, 4),
            w1 in proptest::collection::vec(-1.0f64..=1.0, 4),
            w2 in proptest::collection::vec(-1.0f64..=1.0, 4),
            a in -0.5f64..=0.5,
            b in -0.5f64..=0.5,
        ) {
            let p = table_params();
            let h = ChannelVector::new(h).unwrap();
            let mix: Vec<f64> = w1.iter().zip(&w2).map(|(x, y)| a * x + b * y).collect();
            let lhs = effective_gain(&h, &Precoder::new(mix).unwrap(), &p).unwrap().value();
            let rhs = a * effective_gain(&h, &Precoder::new(w1).unwrap(), &p).unwrap().value()
                + b * effective_gain(&h, &Precoder::new(w2).unwrap(), &p).unwrap().value();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * 1e-5);
        }
    }
}
