//! TOML system description.
//!
//! Units follow the key suffixes: metres, degrees (full angles for the LED
//! beam and PD field of view), watts, amperes, cm² and dBm. Re-emitting a
//! parsed file with [`SystemConfig::to_toml`] gives the canonical form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{Luminaire, Receiver, Vec3};
use crate::error::{Error, Result};
use crate::experiment::{Link, Mode, RunConfig, Scenario};
use crate::metrics::{QuadratureConfig, UtilityWeights};
use crate::qlearn::{LearnerConfig, StateBins};
use crate::signal::DriveParams;

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSection {
    pub dimensions_m: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LuminairesSection {
    pub positions_m: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LedSection {
    pub transmit_optical_power_w: f64,
    /// Full beam angle; the semi-angle at half illuminance is half of it.
    pub beam_angle_deg: f64,
    pub conversion_factor_w_per_a: f64,
    pub modulation_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdSection {
    pub active_area_cm2: f64,
    pub responsivity_a_per_w: f64,
    /// Full field of view; the concentrator uses half of it.
    pub field_of_view_deg: f64,
    pub optical_filter_gain: f64,
    pub concentrator_refractive_index: f64,
    /// Receiver plane height above the floor.
    pub height_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Applied to both receivers.
    pub average_noise_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationSection {
    pub orders: Vec<u32>,
    pub precoder_quantization_levels: u32,
    pub baseline_order: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    pub bob_ber_coefficient: f64,
    pub eve_ber_coefficient: f64,
    #[serde(default)]
    pub clamp_secrecy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub num_slots: usize,
    pub seed: u64,
    pub summary_window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetupSection {
    pub name: String,
    /// Horizontal (x, y) positions; height comes from `[pd]`.
    pub bob_m: [f64; 2],
    pub eve_m: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub room: RoomSection,
    pub luminaires: LuminairesSection,
    pub led: LedSection,
    pub pd: PdSection,
    pub noise: NoiseSection,
    pub modulation: ModulationSection,
    pub utility: UtilitySection,
    pub learner: LearnerConfig,
    pub run: RunSection,
    #[serde(default)]
    pub state: StateBins,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(rename = "setup")]
    pub setups: Vec<SetupSection>,
}

/// Noise standard deviation for an average noise power in dBm.
pub fn noise_sigma_from_dbm(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0).sqrt()
}

impl SystemConfig {
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("bundled configuration parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(describe_toml_error(text, &e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    fn validate(&self) -> Result<()> {
        if self.luminaires.positions_m.is_empty() {
            return Err(Error::Config("[luminaires] positions_m is empty".into()));
        }
        if self.setups.is_empty() {
            return Err(Error::Config("at least one [[setup]] is required".into()));
        }
        let [lx, ly, lz] = self.room.dimensions_m;
        if !(lx > 0.0 && ly > 0.0 && lz > 0.0) {
            return Err(Error::Config("[room] dimensions_m must be positive".into()));
        }
        let inside = |p: [f64; 3]| p[0].abs() <= lx / 2.0 && p[1].abs() <= ly / 2.0 && (0.0..=lz).contains(&p[2]);
        if let Some(p) = self.luminaires.positions_m.iter().find(|p| !inside(**p)) {
            return Err(Error::Config(format!("[luminaires] position {p:?} lies outside the room")));
        }
        for s in &self.setups {
            for (who, xy) in [("bob_m", s.bob_m), ("eve_m", s.eve_m)] {
                if !inside([xy[0], xy[1], self.pd.height_m]) {
                    return Err(Error::Config(format!("[[setup]] {}: {who} {xy:?} lies outside the room", s.name)));
                }
            }
        }
        let mut names: Vec<&str> = self.setups.iter().map(|s| s.name.as_str()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.setups.len() {
            return Err(Error::Config("[[setup]] names must be unique".into()));
        }
        self.learner.validate()?;
        self.quadrature.validate()?;
        self.scenarios()?;
        self.run_config(Mode::Adaptive)?.validate()?;
        crate::signal::check_order(self.modulation.baseline_order)
    }

    pub fn drive(&self) -> Result<DriveParams> {
        DriveParams::from_optical_power(
            self.led.transmit_optical_power_w,
            self.led.modulation_index,
            self.led.conversion_factor_w_per_a,
            self.pd.responsivity_a_per_w,
        )
    }

    pub fn scenarios(&self) -> Result<Vec<Scenario>> {
        let semi_angle = self.led.beam_angle_deg / 2.0;
        let luminaires = self
            .luminaires
            .positions_m
            .iter()
            .map(|p| Luminaire::new(Vec3::from(*p), semi_angle))
            .collect::<Result<Vec<_>>>()?;
        let pd = &self.pd;
        let receiver = |xy: [f64; 2]| {
            Receiver::new(
                Vec3::new(xy[0], xy[1], pd.height_m),
                pd.active_area_cm2 * 1e-4,
                pd.field_of_view_deg / 2.0,
                pd.optical_filter_gain,
                pd.concentrator_refractive_index,
            )
        };
        let sigma = noise_sigma_from_dbm(self.noise.average_noise_power_dbm);
        let drive = self.drive()?;
        self.setups
            .iter()
            .map(|s| {
                Scenario::new(
                    s.name.clone(),
                    luminaires.clone(),
                    drive,
                    Link { receiver: receiver(s.bob_m)?, sigma },
                    Link { receiver: receiver(s.eve_m)?, sigma },
                )
            })
            .collect()
    }

    pub fn run_config(&self, mode: Mode) -> Result<RunConfig> {
        Ok(RunConfig {
            num_slots: self.run.num_slots,
            seed: self.run.seed,
            weights: UtilityWeights::new(self.utility.bob_ber_coefficient, self.utility.eve_ber_coefficient)?,
            learner: self.learner,
            bins: self.state,
            mode,
            summary_window: self.run.summary_window,
            orders: self.modulation.orders.clone(),
            quant_levels: self.modulation.precoder_quantization_levels,
            quadrature: self.quadrature,
            clamp_secrecy: self.utility.clamp_secrecy,
        })
    }

    pub fn baseline_mode(&self) -> Mode {
        Mode::FixedOrder(self.modulation.baseline_order)
    }
}

fn describe_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message();
    let lower = msg.to_ascii_lowercase();
    let section = if lower.starts_with("missing field") {
        msg.split('`').nth(1).map(|f| format!("missing section or key [{f}]: "))
    } else {
        None
    };
    let location = e.span().map(|span| {
        let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
        format!("line {line}: ")
    });
    format!("{}{}{msg}", location.unwrap_or_default(), section.unwrap_or_default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_defaults() {
        let cfg = SystemConfig::bundled();
        assert_eq!(cfg.setups.len(), 3);
        let drive = cfg.drive().unwrap();
        assert!((drive.dc_bias - 5.0 / 0.44).abs() < 1e-12);
        let sc = cfg.scenarios().unwrap();
        assert_eq!(sc[0].bob.receiver.fov_deg, 60.0);
        assert!((sc[0].luminaires[0].lambertian_order() - 1.0).abs() < 1e-12);
        assert_eq!(sc[0].luminaires[2].position.x, 5f64.sqrt());
        // 10^((−98.82 − 30)/10) W, 30-digit arithmetic
        assert!((sc[0].bob.sigma - 3.622_429_984_166_986e-7).abs() < 1e-20);
    }

    #[test]
    fn round_trip_is_canonical() {
        let cfg = SystemConfig::bundled();
        let text = cfg.to_toml();
        let again = SystemConfig::parse(&text).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_toml(), text);
    }

    #[test]
    fn missing_section_is_named() {
        let text = DEFAULT_CONFIG.replace("[noise]\naverage_noise_power_dbm = -98.82\n", "");
        let err = SystemConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("noise"), "{err}");
    }

    #[test]
    fn bad_value_reports_line() {
        let text = DEFAULT_CONFIG.replace("modulation_index = 0.1", "modulation_index = \"high\"");
        let err = SystemConfig::parse(&text).unwrap_err().to_string();
        let line = DEFAULT_CONFIG.lines().position(|l| l.starts_with("modulation_index")).unwrap() + 1;
        assert!(err.contains(&format!("line {line}")), "{err}");
    }

    #[test]
    fn invariant_violations() {
        let cases = [
            ("modulation_index = 0.1", "modulation_index = 1.5"),
            ("orders = [2, 4, 8, 16, 32, 64]", "orders = [2, 3]"),
            ("eve_m = [1.0, 0.0]", "eve_m = [9.0, 0.0]"),
            ("learning_rate = 0.5", "learning_rate = 2.0"),
            ("num_slots = 2000", "num_slots = 0"),
        ];
        for (from, to) in cases {
            let text = DEFAULT_CONFIG.replace(from, to);
            assert!(SystemConfig::parse(&text).is_err(), "{to}");
        }
    }
}
