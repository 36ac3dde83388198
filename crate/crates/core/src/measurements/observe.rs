use nalgebra::{RowVector6, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::models::{IslModel, NavCamModel};
use crate::dynamics::{phase_angle, Body, Epoch, StateVector, SystemModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    NavCamRange,
    /// Barycentric azimuth and elevation in the ecliptic frame.
    NavCamAngles,
    IslRange,
    IslRangeRate,
}

impl MeasurementKind {
    pub fn dim(self) -> usize {
        match self {
            MeasurementKind::NavCamAngles => 2,
            _ => 1,
        }
    }
}

/// Simulated observable with its 1-sigma noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub kind: MeasurementKind,
    pub epoch: Epoch,
    pub value: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Taken after the cut-off time; only feeds the following leg.
    pub post_cot: bool,
}

/// Wraps an angle difference to (-pi, pi].
pub fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(std::f64::consts::TAU);
    if w > std::f64::consts::PI {
        w - std::f64::consts::TAU
    } else {
        w
    }
}

/// Noise-free NavCam observables: range and (azimuth, elevation).
pub fn navcam_geometry(r: &Vector3<f64>) -> Result<(f64, [f64; 2])> {
    let range = r.norm();
    let rho = r.x.hypot(r.y);
    if rho == 0.0 {
        return Err(Error::SingularGeometry(
            "line of sight along the ecliptic pole",
        ));
    }
    Ok((range, [r.y.atan2(r.x), (r.z / range).asin()]))
}

/// Noise-free ISL range and range rate.
pub fn isl_geometry(
    state: &StateVector,
    model: &IslModel,
    sys: &SystemModel,
) -> Result<(f64, f64)> {
    let (rh, vh) = model.hera.state(state.epoch, sys)?;
    let d = state.r - rh;
    let range = d.norm();
    if range == 0.0 {
        return Err(Error::SingularGeometry(
            "spacecraft coincides with the link partner",
        ));
    }
    Ok((range, d.dot(&(state.v - vh)) / range))
}

/// NavCam range and angle pair. Noise is drawn with the model sigmas at the
/// observed range, which are also attached to the measurements.
pub fn navcam_observe<R: Rng>(
    state: &StateVector,
    model: &NavCamModel,
    sys: &SystemModel,
    rng: &mut R,
) -> Result<(Measurement, Measurement)> {
    let phase = phase_angle(&state.r, state.epoch, Body::Primary, sys)?;
    if phase >= 90.0 {
        return Err(Error::Unavailable(format!(
            "night side at t = {:.1} s (phase {phase:.1} deg)",
            state.epoch.seconds()
        )));
    }
    let (range, angles) = navcam_geometry(&state.r)?;
    let (sr, sa) = (model.sigma_range(range), model.sigma_angle(range));
    let mut noise = || -> f64 { rng.sample(StandardNormal) };
    let range_meas = Measurement {
        kind: MeasurementKind::NavCamRange,
        epoch: state.epoch,
        value: vec![range + model.bias_range + sr * noise()],
        sigma: vec![sr],
        post_cot: false,
    };
    let az = wrap_angle(angles[0] + model.bias_angle + sa * noise());
    let el = angles[1] + model.bias_angle + sa * noise();
    let angle_meas = Measurement {
        kind: MeasurementKind::NavCamAngles,
        epoch: state.epoch,
        value: vec![az, el],
        sigma: vec![sa, sa],
        post_cot: false,
    };
    Ok((range_meas, angle_meas))
}

/// ISL range or range-rate observable.
pub fn isl_observe<R: Rng>(
    state: &StateVector,
    kind: MeasurementKind,
    model: &IslModel,
    sys: &SystemModel,
    rng: &mut R,
) -> Result<Measurement> {
    let (range, rate) = isl_geometry(state, model, sys)?;
    let z: f64 = rng.sample(StandardNormal);
    let (value, sigma) = match kind {
        MeasurementKind::IslRange => (
            range + model.bias_range + model.sigma_range * z,
            model.sigma_range,
        ),
        MeasurementKind::IslRangeRate => {
            (rate + model.bias_rr + model.sigma_rr * z, model.sigma_rr)
        }
        _ => return Err(Error::Config(format!("{kind:?} is not an ISL observable"))),
    };
    Ok(Measurement {
        kind,
        epoch: state.epoch,
        value: vec![value],
        sigma: vec![sigma],
        post_cot: false,
    })
}

/// Analytic partials of the noise-free observable with respect to the
/// barycentric position and velocity, one row per component.
pub fn measurement_partials(
    kind: MeasurementKind,
    state: &StateVector,
    isl: &IslModel,
    sys: &SystemModel,
) -> Result<Vec<RowVector6<f64>>> {
    let row =
        |dr: Vector3<f64>, dv: Vector3<f64>| RowVector6::new(dr.x, dr.y, dr.z, dv.x, dv.y, dv.z);
    let r = &state.r;
    match kind {
        MeasurementKind::NavCamRange => {
            let range = r.norm();
            if range == 0.0 {
                return Err(Error::SingularGeometry("zero range to the barycenter"));
            }
            Ok(vec![row(r / range, Vector3::zeros())])
        }
        MeasurementKind::NavCamAngles => {
            let rho2 = r.x * r.x + r.y * r.y;
            if rho2 == 0.0 {
                return Err(Error::SingularGeometry(
                    "line of sight along the ecliptic pole",
                ));
            }
            let rho = rho2.sqrt();
            let r2 = r.norm_squared();
            let d_az = Vector3::new(-r.y / rho2, r.x / rho2, 0.0);
            let d_el = Vector3::new(-r.x * r.z, -r.y * r.z, rho2) / (r2 * rho);
            Ok(vec![
                row(d_az, Vector3::zeros()),
                row(d_el, Vector3::zeros()),
            ])
        }
        MeasurementKind::IslRange | MeasurementKind::IslRangeRate => {
            let (rh, vh) = isl.hera.state(state.epoch, sys)?;
            let d = r - rh;
            let range = d.norm();
            if range == 0.0 {
                return Err(Error::SingularGeometry("zero range to the link partner"));
            }
            let u = d / range;
            if kind == MeasurementKind::IslRange {
                return Ok(vec![row(u, Vector3::zeros())]);
            }
            let dv = state.v - vh;
            let rate = u.dot(&dv);
            Ok(vec![row((dv - u * rate) / range, u)])
        }
    }
}
