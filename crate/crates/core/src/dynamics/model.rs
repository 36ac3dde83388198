use std::f64::consts::TAU;
use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gravitational constant [m^3 kg^-1 s^-2].
pub const G: f64 = 6.6743e-11;
/// Astronomical unit [m].
pub const AU: f64 = 1.495_978_707e11;
/// Solar gravitational parameter [m^3/s^2].
pub const MU_SUN: f64 = 1.327_124_400_18e20;
/// Speed of light [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Solar flux at 1 AU [W/m^2].
pub const SOLAR_FLUX_1AU: f64 = 1367.0;

/// The two members of the binary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Body {
    #[serde(rename = "D1", alias = "primary")]
    Primary,
    #[serde(rename = "D2", alias = "secondary")]
    Secondary,
}

impl fmt::Display for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Body::Primary => f.write_str("D1"),
            Body::Secondary => f.write_str("D2"),
        }
    }
}

/// Heliocentric Kepler elements of the system barycenter (ecliptic J2000).
///
/// The mean motion is taken from `period_days`, distances from `a_au`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HelioElements {
    pub a_au: f64,
    pub e: f64,
    pub i_deg: f64,
    pub period_days: f64,
    pub raan_deg: f64,
    pub arg_perihelion_deg: f64,
    /// Epoch of perihelion passage relative to the scenario reference epoch.
    pub perihelion_epoch_days: f64,
}

impl Default for HelioElements {
    fn default() -> Self {
        Self {
            a_au: 1.66446,
            e: 0.3839,
            i_deg: 3.4083,
            period_days: 770.0,
            raan_deg: 73.20,
            arg_perihelion_deg: 319.32,
            // Places the reference epoch at eccentric anomaly 90 deg, where r = a.
            perihelion_epoch_days: -145.45,
        }
    }
}

/// Physical and orbital parameters of the binary system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemModel {
    pub mu_sun: f64,
    pub helio: HelioElements,
    /// Primary gravitational parameter [m^3/s^2].
    pub mu1: f64,
    /// Secondary gravitational parameter [m^3/s^2].
    pub mu2: f64,
    pub spin_period1_h: f64,
    pub spin_period2_h: f64,
    /// Primary-secondary distance of the circular mutual orbit [m].
    pub separation_d12: f64,
    /// Unit spin axis of the primary in the ecliptic frame; the mutual orbit
    /// is prograde about it.
    pub pole: Vector3<f64>,
    pub tidally_locked: bool,
    /// Angle of the secondary from the equatorial reference axis at t = 0 [deg].
    pub mutual_phase_deg: f64,
}

impl Default for SystemModel {
    fn default() -> Self {
        Self::didymos()
    }
}

impl SystemModel {
    /// Reference model of the Didymos system.
    pub fn didymos() -> Self {
        Self {
            mu_sun: MU_SUN,
            helio: HelioElements::default(),
            mu1: G * 5.226e11,
            mu2: G * 4.860e9,
            spin_period1_h: 2.26,
            spin_period2_h: 11.92,
            separation_d12: 1180.0,
            pole: pole_from_ecliptic(310.0, -84.0),
            tidally_locked: true,
            mutual_phase_deg: 0.0,
        }
    }

    pub fn mu_total(&self) -> f64 {
        self.mu1 + self.mu2
    }

    /// Period of the circular mutual orbit [s].
    pub fn mutual_period(&self) -> f64 {
        TAU * (self.separation_d12.powi(3) / self.mu_total()).sqrt()
    }

    /// Angular rate of the mutual orbit [rad/s].
    pub fn mutual_rate(&self) -> f64 {
        TAU / self.mutual_period()
    }

    /// Orthonormal basis (e1, e2, pole) of the equatorial plane. `e1` is the
    /// projection of the ecliptic x axis (or y axis if the pole is along x).
    pub fn equatorial_basis(&self) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        let p = self.pole;
        let mut seed = Vector3::x();
        if p.dot(&seed).abs() > 0.9 {
            seed = Vector3::y();
        }
        let e1 = (seed - p * p.dot(&seed)).normalize();
        let e2 = p.cross(&e1);
        (e1, e2, p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !(self.mu1 > self.mu2 && self.mu2 > 0.0) {
            return bad(format!(
                "gravitational parameters must satisfy mu1 > mu2 > 0 (got {} and {})",
                self.mu1, self.mu2
            ));
        }
        if !(0.0..1.0).contains(&self.helio.e) {
            return bad(format!("eccentricity {} outside [0, 1)", self.helio.e));
        }
        if !(self.helio.a_au > 0.0 && self.helio.period_days > 0.0) {
            return bad("heliocentric semi-major axis and period must be positive".into());
        }
        if self.separation_d12 <= 0.0 {
            return bad("separation must be positive".into());
        }
        if (self.pole.norm() - 1.0).abs() > 1e-9 {
            return bad(format!("pole direction norm {} is not 1", self.pole.norm()));
        }
        if self.tidally_locked {
            let period_h = self.mutual_period() / 3600.0;
            let rel = (period_h - self.spin_period2_h).abs() / self.spin_period2_h;
            if rel > 0.01 {
                return bad(format!(
                    "tidally locked secondary: mutual period {period_h:.3} h differs from spin period {:.3} h by {:.2}%",
                    self.spin_period2_h,
                    100.0 * rel
                ));
            }
        }
        Ok(())
    }
}

/// Unit vector from ecliptic longitude/latitude in degrees.
pub fn pole_from_ecliptic(lon_deg: f64, lat_deg: f64) -> Vector3<f64> {
    let (lon, lat) = (lon_deg.to_radians(), lat_deg.to_radians());
    Vector3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
}

/// Cannonball parameters of the spacecraft.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacecraftModel {
    pub mass: f64,
    pub area: f64,
    pub cr: f64,
}

impl Default for SpacecraftModel {
    fn default() -> Self {
        Self {
            mass: 12.0,
            area: 0.51,
            cr: 1.25,
        }
    }
}

impl SpacecraftModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.area > 0.0) {
            return Err(Error::InvalidModel("mass and area must be positive".into()));
        }
        if !(1.0..=2.0).contains(&self.cr) {
            return Err(Error::InvalidModel(format!(
                "reflectivity coefficient {} outside [1, 2]",
                self.cr
            )));
        }
        Ok(())
    }

    /// SRP acceleration magnitude at 1 AU [m/s^2].
    pub fn srp_accel_1au(&self) -> f64 {
        SOLAR_FLUX_1AU / SPEED_OF_LIGHT * self.cr * self.area / self.mass
    }
}
