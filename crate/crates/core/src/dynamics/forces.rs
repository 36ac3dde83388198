//! Accelerations acting on the spacecraft and their position Jacobian.

use nalgebra::{Matrix3, Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use super::ephemeris::{asteroid_states, body_position, sun_position};
use super::epoch::Epoch;
use super::frames::{FrameId, StateVector};
use super::model::{Body, SpacecraftModel, SystemModel, AU};
use crate::error::{Error, Result};

/// Switches for the individual force terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForceFlags {
    pub primary: bool,
    pub secondary: bool,
    pub sun_tide: bool,
    pub srp: bool,
}

impl Default for ForceFlags {
    fn default() -> Self {
        Self {
            primary: true,
            secondary: true,
            sun_tide: true,
            srp: true,
        }
    }
}

impl ForceFlags {
    /// Only the primary's point mass.
    pub fn two_body() -> Self {
        Self {
            primary: true,
            secondary: false,
            sun_tide: false,
            srp: false,
        }
    }
}

/// Deviations of the force model from its nominal values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Perturbation {
    /// Multiplier on both gravitational parameters.
    pub mu_scale: f64,
    /// Fractional error of the SRP acceleration, per ecliptic axis.
    pub srp_scale: Vector3<f64>,
    /// Additional unmodeled acceleration [m/s^2].
    pub extra: Vector3<f64>,
}

impl Default for Perturbation {
    fn default() -> Self {
        Self {
            mu_scale: 1.0,
            srp_scale: Vector3::zeros(),
            extra: Vector3::zeros(),
        }
    }
}

/// Positions of the attracting bodies at one epoch.
#[derive(Clone, Copy, Debug)]
pub struct Environment {
    pub epoch: Epoch,
    /// Sun relative to the barycenter.
    pub sun: Vector3<f64>,
    pub primary: Vector3<f64>,
    pub secondary: Vector3<f64>,
}

/// Acceleration split by source.
#[derive(Clone, Copy, Debug, Default)]
pub struct AccelParts {
    /// Point-mass gravity of both asteroids, including `mu_scale`.
    pub gravity: Vector3<f64>,
    pub tide: Vector3<f64>,
    /// Nominal SRP, before `srp_scale`.
    pub srp: Vector3<f64>,
    pub total: Vector3<f64>,
}

/// Complete force model for the spacecraft.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dynamics {
    pub sys: SystemModel,
    pub sc: SpacecraftModel,
    #[serde(default)]
    pub flags: ForceFlags,
    #[serde(default)]
    pub pert: Perturbation,
}

impl Dynamics {
    pub fn new(sys: SystemModel, sc: SpacecraftModel) -> Self {
        Self {
            sys,
            sc,
            flags: ForceFlags::default(),
            pert: Perturbation::default(),
        }
    }

    pub fn with_flags(mut self, flags: ForceFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn environment(&self, t: Epoch) -> Result<Environment> {
        let (primary, secondary) = asteroid_states(t, &self.sys);
        let sun = if self.flags.sun_tide || self.flags.srp {
            sun_position(t, &self.sys)?
        } else {
            Vector3::zeros()
        };
        Ok(Environment {
            epoch: t,
            sun,
            primary,
            secondary,
        })
    }

    fn bodies(&self, env: &Environment) -> [(Body, bool, f64, Vector3<f64>); 2] {
        let k = self.pert.mu_scale;
        [
            (
                Body::Primary,
                self.flags.primary,
                k * self.sys.mu1,
                env.primary,
            ),
            (
                Body::Secondary,
                self.flags.secondary,
                k * self.sys.mu2,
                env.secondary,
            ),
        ]
    }

    pub fn accel_parts(&self, r: &Vector3<f64>, env: &Environment) -> Result<AccelParts> {
        let mut parts = AccelParts::default();
        for (body, on, mu, pos) in self.bodies(env) {
            if !on {
                continue;
            }
            let rel = r - pos;
            let d2 = rel.norm_squared();
            if d2 == 0.0 {
                return Err(Error::Singularity { body });
            }
            parts.gravity -= rel * (mu / (d2 * d2.sqrt()));
        }
        if self.flags.sun_tide {
            parts.tide = tide(r, &env.sun, self.sys.mu_sun);
        }
        if self.flags.srp {
            parts.srp = srp(r, &env.sun, &self.sc);
        }
        parts.total = parts.gravity
            + parts.tide
            + parts.srp
            + parts.srp.component_mul(&self.pert.srp_scale)
            + self.pert.extra;
        Ok(parts)
    }

    pub fn accel(&self, r: &Vector3<f64>, t: Epoch) -> Result<Vector3<f64>> {
        Ok(self.accel_parts(r, &self.environment(t)?)?.total)
    }

    /// Partial derivative of the acceleration with respect to position.
    pub fn accel_gradient(&self, r: &Vector3<f64>, env: &Environment) -> Result<Matrix3<f64>> {
        let mut g = Matrix3::zeros();
        for (body, on, mu, pos) in self.bodies(env) {
            if !on {
                continue;
            }
            let rel = r - pos;
            if rel.norm_squared() == 0.0 {
                return Err(Error::Singularity { body });
            }
            g += gravity_gradient(&rel, mu);
        }
        if self.flags.sun_tide {
            // The tide is the Sun's point-mass field minus a uniform term.
            g += gravity_gradient(&(r - env.sun), self.sys.mu_sun);
        }
        if self.flags.srp {
            let rs = r - env.sun;
            let d = rs.norm();
            let u = rs / d;
            let k = self.sc.srp_accel_1au() * AU * AU / (d * d * d);
            let grad = (Matrix3::identity() - u * u.transpose() * 3.0) * k;
            let scale = Matrix3::from_diagonal(&self.pert.srp_scale.add_scalar(1.0));
            g += scale * grad;
        }
        Ok(g)
    }

    /// Jacobian of the first-order equations of motion.
    pub fn jacobian_at(&self, r: &Vector3<f64>, env: &Environment) -> Result<Matrix6<f64>> {
        let mut a = Matrix6::zeros();
        a.fixed_view_mut::<3, 3>(0, 3).fill_with_identity();
        a.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&self.accel_gradient(r, env)?);
        Ok(a)
    }
}

/// Solar tide, written so that the direct and indirect terms do not cancel
/// numerically near the barycenter.
fn tide(r: &Vector3<f64>, sun: &Vector3<f64>, mu_sun: f64) -> Vector3<f64> {
    let s2 = sun.norm_squared();
    let q = r.dot(&(r - sun * 2.0)) / s2;
    let f = q * (3.0 + 3.0 * q + q * q) / (1.0 + (1.0 + q).powf(1.5));
    let d = (sun - r).norm();
    -(r + sun * f) * (mu_sun / (d * d * d))
}

fn srp(r: &Vector3<f64>, sun: &Vector3<f64>, sc: &SpacecraftModel) -> Vector3<f64> {
    // Sun-to-spacecraft vector; the acceleration points away from the Sun.
    let rs = r - sun;
    let d = rs.norm();
    rs * (sc.srp_accel_1au() * AU * AU / (d * d * d))
}

/// Gradient of a point-mass field `-mu rel / |rel|^3` with respect to `rel`.
pub fn gravity_gradient(rel: &Vector3<f64>, mu: f64) -> Matrix3<f64> {
    let d = rel.norm();
    let u = rel / d;
    (u * u.transpose() * 3.0 - Matrix3::identity()) * (mu / (d * d * d))
}

/// Solar tidal acceleration at barycentric position `r`.
pub fn accel_fourbody(r: &Vector3<f64>, t: Epoch, sys: &SystemModel) -> Result<Vector3<f64>> {
    Ok(tide(r, &sun_position(t, sys)?, sys.mu_sun))
}

/// Cannonball solar radiation pressure at barycentric position `r`.
pub fn accel_srp(
    r: &Vector3<f64>,
    t: Epoch,
    sys: &SystemModel,
    sc: &SpacecraftModel,
) -> Result<Vector3<f64>> {
    Ok(srp(r, &sun_position(t, sys)?, sc))
}

fn check_frame(state: &StateVector) -> Result<()> {
    if state.frame != FrameId::DidymosEclipJ2000 {
        return Err(Error::InvalidModel(
            "equations of motion are evaluated in DidymosEclipJ2000".into(),
        ));
    }
    Ok(())
}

/// Total acceleration with the nominal force model.
pub fn accel_total(
    state: &StateVector,
    sys: &SystemModel,
    sc: &SpacecraftModel,
) -> Result<Vector3<f64>> {
    check_frame(state)?;
    Dynamics::new(sys.clone(), sc.clone()).accel(&state.r, state.epoch)
}

/// Jacobian of the nominal equations of motion at `state`.
pub fn jacobian(
    state: &StateVector,
    sys: &SystemModel,
    sc: &SpacecraftModel,
) -> Result<Matrix6<f64>> {
    check_frame(state)?;
    let dynamics = Dynamics::new(sys.clone(), sc.clone());
    let env = dynamics.environment(state.epoch)?;
    dynamics.jacobian_at(&state.r, &env)
}

/// Sun-asteroid-spacecraft angle [deg].
pub fn phase_angle(r: &Vector3<f64>, t: Epoch, body: Body, sys: &SystemModel) -> Result<f64> {
    let pos = body_position(body, t, sys);
    let to_sc = r - pos;
    let to_sun = sun_position(t, sys)? - pos;
    if to_sc.norm() == 0.0 {
        return Err(Error::SingularGeometry(
            "spacecraft coincides with the body",
        ));
    }
    Ok(to_sc.angle(&to_sun).to_degrees())
}
