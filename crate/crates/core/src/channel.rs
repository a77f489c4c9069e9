//! Lambertian line-of-sight channel gains between ceiling luminaires and
//! upward-facing photodiode receivers.
//!
//! LEDs point straight down and photodiodes straight up, so the irradiance
//! and incidence angles coincide: `cos φ = cos ψ = Δz / d`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(&self, other: &Vec3) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(p: [f64; 3]) -> Self {
        Self::new(p[0], p[1], p[2])
    }
}

/// Lambertian emission order for a semi-angle at half illuminance:
/// `l = -ln 2 / ln(cos Θ½)`.
pub fn lambertian_order(semi_angle_deg: f64) -> Result<f64> {
    if !(semi_angle_deg > 0.0 && semi_angle_deg < 90.0) {
        return Err(Error::Domain { what: "semi-angle at half illuminance (degrees)", value: semi_angle_deg });
    }
    Ok(-std::f64::consts::LN_2 / semi_angle_deg.to_radians().cos().ln())
}

/// Gain of a non-imaging concentrator, `κ² / sin²Ψ` inside the field of view
/// and zero outside it.
pub fn concentrator_gain(incidence_deg: f64, kappa: f64, fov_deg: f64) -> f64 {
    if incidence_deg > fov_deg {
        return 0.0;
    }
    let s = fov_deg.to_radians().sin();
    kappa * kappa / (s * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Luminaire {
    pub position: Vec3,
    semi_angle_deg: f64,
    lambertian_order: f64,
}

impl Luminaire {
    pub fn new(position: Vec3, semi_angle_deg: f64) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::Geometry(format!("non-finite luminaire position {position:?}")));
        }
        let lambertian_order = lambertian_order(semi_angle_deg)?;
        Ok(Self { position, semi_angle_deg, lambertian_order })
    }

    pub fn semi_angle_deg(&self) -> f64 {
        self.semi_angle_deg
    }

    pub fn lambertian_order(&self) -> f64 {
        self.lambertian_order
    }
}

/// Single-photodiode receiver facing the zenith.
#[derive(Debug, Clone, PartialEq)]
pub struct Receiver {
    pub position: Vec3,
    /// Active area in m².
    pub active_area: f64,
    /// Field-of-view half-angle in degrees.
    pub fov_deg: f64,
    pub filter_gain: f64,
    pub refractive_index: f64,
}

impl Receiver {
    pub fn new(
        position: Vec3,
        active_area: f64,
        fov_deg: f64,
        filter_gain: f64,
        refractive_index: f64,
    ) -> Result<Self> {
        if !position.is_finite() {
            return Err(Error::Geometry(format!("non-finite receiver position {position:?}")));
        }
        if !(active_area > 0.0 && active_area.is_finite()) {
            return Err(Error::Domain { what: "active area (m^2)", value: active_area });
        }
        if !(fov_deg > 0.0 && fov_deg <= 90.0) {
            return Err(Error::Domain { what: "field-of-view half-angle (degrees)", value: fov_deg });
        }
        if !(filter_gain > 0.0 && filter_gain.is_finite()) {
            return Err(Error::Domain { what: "optical filter gain", value: filter_gain });
        }
        if !(refractive_index >= 1.0 && refractive_index.is_finite()) {
            return Err(Error::Domain { what: "concentrator refractive index", value: refractive_index });
        }
        Ok(Self { position, active_area, fov_deg, filter_gain, refractive_index })
    }

    /// Same optics, different location.
    pub fn at(&self, position: Vec3) -> Self {
        Self { position, ..self.clone() }
    }
}

/// Per-luminaire LoS gains seen by one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelVector(Vec<f64>);

impl ChannelVector {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if let Some(g) = gains.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::Domain { what: "channel gain", value: *g });
        }
        Ok(Self(gains))
    }

    pub fn gains(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// DC gain of the line-of-sight path from `lum` to `rx`.
pub fn los_gain(lum: &Luminaire, rx: &Receiver) -> Result<f64> {
    let d = lum.position.distance(&rx.position);
    if d == 0.0 {
        return Err(Error::Geometry("luminaire and receiver coincide".into()));
    }
    let dz = lum.position.z - rx.position.z;
    if dz <= 0.0 {
        return Err(Error::Geometry(format!(
            "luminaire at z={} is not above the receiver plane z={}",
            lum.position.z, rx.position.z
        )));
    }
    let cos_angle = (dz / d).min(1.0);
    let incidence_deg = cos_angle.acos().to_degrees();
    if incidence_deg > rx.fov_deg {
        return Ok(0.0);
    }
    let l = lum.lambertian_order;
    let radiant_intensity = (l + 1.0) / (2.0 * PI) * cos_angle.powf(l);
    let concentrator = concentrator_gain(incidence_deg, rx.refractive_index, rx.fov_deg);
    Ok(rx.active_area / (d * d) * radiant_intensity * rx.filter_gain * concentrator * cos_angle)
}

pub fn channel_vector(lums: &[Luminaire], rx: &Receiver) -> Result<ChannelVector> {
    if lums.is_empty() {
        return Err(Error::Geometry("no luminaires".into()));
    }
    let gains = lums.iter().map(|l| los_gain(l, rx)).collect::<Result<Vec<_>>>()?;
    ChannelVector::new(gains)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const SQRT5: f64 = 2.236_067_977_499_79;

    fn table_layout() -> Vec<Luminaire> {
        [[-SQRT5, -SQRT5, 3.0], [SQRT5, -SQRT5, 3.0], [SQRT5, SQRT5, 3.0], [-SQRT5, SQRT5, 3.0]]
            .into_iter()
            .map(|p| Luminaire::new(p.into(), 60.0).unwrap())
            .collect()
    }

    fn pd(position: [f64; 3]) -> Receiver {
        Receiver::new(position.into(), 1e-4, 60.0, 1.0, 1.5).unwrap()
    }

    #[test]
    fn lambertian_order_values() {
        assert_relative_eq!(lambertian_order(60.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(lambertian_order(45.0).unwrap(), 2.0, max_relative = 1e-12);
        // -ln2 / ln(cos 30°), evaluated in 30-digit arithmetic
        assert_relative_eq!(lambertian_order(30.0).unwrap(), 4.818_841_679_306_418, max_relative = 1e-12);
    }

    #[test]
    fn lambertian_order_rejects_out_of_range() {
        for bad in [0.0, 90.0, -5.0, 120.0, f64::NAN] {
            assert!(matches!(lambertian_order(bad), Err(Error::Domain { .. })), "{bad}");
        }
    }

    #[test]
    fn concentrator_branches() {
        assert_eq!(concentrator_gain(70.0, 1.5, 60.0), 0.0);
        assert_relative_eq!(concentrator_gain(0.0, 1.5, 60.0), 3.0, max_relative = 1e-12);
        assert_relative_eq!(concentrator_gain(30.0, 1.5, 90.0), 2.25, max_relative = 1e-12);
    }

    #[test]
    fn overhead_gain_is_pure_substitution() {
        let d = 2.5;
        let lum = Luminaire::new(Vec3::new(0.0, 0.0, d), 60.0).unwrap();
        let rx = pd([0.0, 0.0, 0.0]);
        let expected = 1e-4 / (d * d) * (1.0 / PI) * 3.0;
        assert_relative_eq!(los_gain(&lum, &rx).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn table_geometry_gain() {
        let lum = Luminaire::new(Vec3::new(SQRT5, SQRT5, 3.0), 60.0).unwrap();
        // term-by-term evaluation in 30-digit arithmetic
        assert_relative_eq!(
            los_gain(&lum, &pd([0.0, 0.0, 0.5])).unwrap(),
            2.260_188_540_949_993e-6,
            max_relative = 1e-12
        );
    }

    #[test]
    fn outside_fov_is_zero() {
        let lum = Luminaire::new(Vec3::new(SQRT5, SQRT5, 3.0), 60.0).unwrap();
        assert_eq!(los_gain(&lum, &pd([-5.0, -5.0, 0.5])).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_geometry() {
        let lum = Luminaire::new(Vec3::new(0.0, 0.0, 0.5), 60.0).unwrap();
        assert!(matches!(los_gain(&lum, &pd([0.0, 0.0, 0.5])), Err(Error::Geometry(_))));
        assert!(matches!(los_gain(&lum, &pd([1.0, 0.0, 1.0])), Err(Error::Geometry(_))));
    }

    #[test]
    fn center_receiver_sees_identical_gains() {
        let h = channel_vector(&table_layout(), &pd([0.0, 0.0, 0.5])).unwrap();
        assert_eq!(h.len(), 4);
        assert!(h.gains().windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn setup_one_channels() {
        let lums = table_layout();
        let bob = channel_vector(&lums, &pd([0.0, 0.0, 0.5])).unwrap();
        for g in bob.gains() {
            assert_relative_eq!(*g, 2.260_188_540_949_993e-6, max_relative = 1e-12);
        }
        let eve = channel_vector(&lums, &pd([1.0, 0.0, 0.5])).unwrap();
        let expected = [
            1.264_871_316_799_256_1e-6,
            3.655_399_713_097_562e-6,
            3.655_399_713_097_562e-6,
            1.264_871_316_799_256_1e-6,
        ];
        for (g, e) in eve.gains().iter().zip(expected) {
            assert_relative_eq!(*g, e, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_luminaire_vector() {
        let lums = &table_layout()[..1];
        let rx = pd([0.3, -0.2, 0.5]);
        let h = channel_vector(lums, &rx).unwrap();
        assert_eq!(h.gains(), &[los_gain(&lums[0], &rx).unwrap()]);
    }
}
