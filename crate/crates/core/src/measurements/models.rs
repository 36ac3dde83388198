use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{sun_south_rotation, Epoch, SystemModel};
use crate::error::{Error, Result};

const ARCSEC: f64 = std::f64::consts::PI / (180.0 * 3600.0);

/// Optical navigation accuracy model. Range and two line-of-sight angles
/// are measured with respect to the system barycenter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavCamModel {
    /// Constant part of the range noise [m].
    pub c_r0: f64,
    /// Range-proportional part of the range noise [-].
    pub c_r1: f64,
    /// Apparent size of the angular noise floor [m].
    pub c_th0: f64,
    /// Angular noise growth [rad/sqrt(m)].
    pub c_th1: f64,
    /// [m]
    pub bias_range: f64,
    /// Per-axis angle bias [rad].
    pub bias_angle: f64,
}

impl Default for NavCamModel {
    fn default() -> Self {
        Self {
            c_r0: 10.0,
            c_r1: 5e-3,
            c_th0: 50.0,
            c_th1: 1e-5,
            bias_range: 2.0,
            bias_angle: 32.4 * ARCSEC,
        }
    }
}

impl NavCamModel {
    pub fn validate(&self) -> Result<()> {
        let coeffs = [self.c_r0, self.c_r1, self.c_th0, self.c_th1];
        if coeffs.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::InvalidModel(
                "NavCam noise coefficients must be finite and non-negative".into(),
            ));
        }
        if !(self.bias_range.is_finite() && self.bias_angle.is_finite()) {
            return Err(Error::InvalidModel("NavCam biases must be finite".into()));
        }
        Ok(())
    }

    /// 1-sigma range noise at range `r` [m].
    pub fn sigma_range(&self, r: f64) -> f64 {
        self.c_r0 + self.c_r1 * r
    }

    /// 1-sigma per-axis angle noise at range `r` [rad].
    pub fn sigma_angle(&self, r: f64) -> f64 {
        (self.c_th0 / r).atan() + self.c_th1 * r.sqrt()
    }
}

/// Sample of a tabulated reference trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSample {
    pub epoch_s: f64,
    pub position_m: [f64; 3],
    pub velocity_mps: [f64; 3],
}

/// Trajectory of the mothership that closes the inter-satellite link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HeraReference {
    /// Fixed point in the Sun-South frame [m].
    SunSouthFixed { position_m: [f64; 3] },
    /// Barycentric ecliptic samples, linearly interpolated.
    Table { samples: Vec<ReferenceSample> },
}

impl Default for HeraReference {
    fn default() -> Self {
        HeraReference::SunSouthFixed {
            position_m: [10_000.0, 0.0, 0.0],
        }
    }
}

impl HeraReference {
    /// Barycentric ecliptic position and velocity at `t`.
    pub fn state(&self, t: Epoch, sys: &SystemModel) -> Result<(Vector3<f64>, Vector3<f64>)> {
        match self {
            HeraReference::SunSouthFixed { position_m } => {
                let p = Vector3::from(*position_m);
                let at = |s: Epoch| sun_south_rotation(s, sys).map(|m| m.transpose() * p);
                // The frame turns with the heliocentric motion; its rate is
                // taken by a central difference over a minute.
                let h = 60.0;
                let r = at(t)?;
                let v = (at(t + h)? - at(t + -h)?) / (2.0 * h);
                Ok((r, v))
            }
            HeraReference::Table { samples } => {
                let s = t.seconds();
                let k = samples.partition_point(|x| x.epoch_s <= s);
                let missing = || Error::Config(format!("no Hera state at t = {s:.1} s"));
                if samples.is_empty() || k == 0 {
                    return Err(missing());
                }
                let a = &samples[k - 1];
                if k == samples.len() {
                    return if a.epoch_s == s {
                        Ok((a.position_m.into(), a.velocity_mps.into()))
                    } else {
                        Err(missing())
                    };
                }
                let b = &samples[k];
                let w = (s - a.epoch_s) / (b.epoch_s - a.epoch_s);
                let lerp =
                    |x: [f64; 3], y: [f64; 3]| Vector3::from(x) * (1.0 - w) + Vector3::from(y) * w;
                Ok((
                    lerp(a.position_m, b.position_m),
                    lerp(a.velocity_mps, b.velocity_mps),
                ))
            }
        }
    }
}

/// Inter-satellite link accuracy model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IslModel {
    /// [m]
    pub sigma_range: f64,
    /// [m/s]
    pub sigma_rr: f64,
    /// [m]
    pub bias_range: f64,
    /// [m/s]
    pub bias_rr: f64,
    pub hera: HeraReference,
}

impl Default for IslModel {
    fn default() -> Self {
        Self {
            sigma_range: 0.5,
            sigma_rr: 0.015,
            bias_range: 150.0,
            bias_rr: 0.03,
            hera: HeraReference::default(),
        }
    }
}

impl IslModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_range > 0.0 && self.sigma_rr > 0.0) {
            return Err(Error::InvalidModel(
                "ISL noise sigmas must be positive".into(),
            ));
        }
        if !(self.bias_range.is_finite() && self.bias_rr.is_finite()) {
            return Err(Error::InvalidModel("ISL biases must be finite".into()));
        }
        if let HeraReference::Table { samples } = &self.hera {
            if samples.windows(2).any(|w| w[1].epoch_s <= w[0].epoch_s) {
                return Err(Error::InvalidModel(
                    "Hera samples must have increasing epochs".into(),
                ));
            }
        }
        Ok(())
    }
}
