use nalgebra::{Matrix3, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use super::ephemeris::sun_direction;
use super::epoch::Epoch;
use super::model::SystemModel;
use crate::error::{Error, Result};

/// Barycentric reference frames.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FrameId {
    /// Axes parallel to the ecliptic J2000 frame.
    DidymosEclipJ2000,
    /// x along the Sun direction projected on the equator, z toward the
    /// south pole.
    DidymosEquatorialSunSouth,
}

/// Spacecraft position and velocity at an epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub r: Vector3<f64>,
    pub v: Vector3<f64>,
    pub frame: FrameId,
    pub epoch: Epoch,
}

impl StateVector {
    /// State in the ecliptic frame.
    pub fn new(r: Vector3<f64>, v: Vector3<f64>, epoch: Epoch) -> Self {
        Self {
            r,
            v,
            frame: FrameId::DidymosEclipJ2000,
            epoch,
        }
    }

    pub fn from_vector(x: &Vector6<f64>, epoch: Epoch) -> Self {
        Self::new(
            x.fixed_rows::<3>(0).into(),
            x.fixed_rows::<3>(3).into(),
            epoch,
        )
    }

    pub fn to_vector(&self) -> Vector6<f64> {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.r);
        x.fixed_rows_mut::<3>(3).copy_from(&self.v);
        x
    }
}

/// Rotation taking ecliptic-frame vectors to the Sun-South frame at `t`.
pub fn sun_south_rotation(t: Epoch, sys: &SystemModel) -> Result<Matrix3<f64>> {
    let (s, _) = sun_direction(t, sys)?;
    let p = sys.pole;
    let proj = s - p * s.dot(&p);
    if proj.norm() < 1e-12 {
        return Err(Error::DegenerateFrame);
    }
    let x = proj.normalize();
    let z = -p;
    let y = z.cross(&x);
    Ok(Matrix3::from_rows(&[
        x.transpose(),
        y.transpose(),
        z.transpose(),
    ]))
}

/// Re-expresses an ecliptic-frame state in the Sun-South frame.
pub fn to_sun_south_frame(state: &StateVector, sys: &SystemModel) -> Result<StateVector> {
    match state.frame {
        FrameId::DidymosEquatorialSunSouth => Ok(state.clone()),
        FrameId::DidymosEclipJ2000 => {
            let rot = sun_south_rotation(state.epoch, sys)?;
            Ok(StateVector {
                r: rot * state.r,
                v: rot * state.v,
                frame: FrameId::DidymosEquatorialSunSouth,
                epoch: state.epoch,
            })
        }
    }
}

/// Inverse of [`to_sun_south_frame`].
pub fn from_sun_south_frame(state: &StateVector, sys: &SystemModel) -> Result<StateVector> {
    match state.frame {
        FrameId::DidymosEclipJ2000 => Ok(state.clone()),
        FrameId::DidymosEquatorialSunSouth => {
            let rot = sun_south_rotation(state.epoch, sys)?.transpose();
            Ok(StateVector {
                r: rot * state.r,
                v: rot * state.v,
                frame: FrameId::DidymosEclipJ2000,
                epoch: state.epoch,
            })
        }
    }
}
