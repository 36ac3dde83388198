use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dynamics::{body_position, sun_position, Body, Epoch, SystemModel};
use crate::error::{Error, Result};

/// Location where the spacecraft can perform a science observation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyPoint {
    pub epoch: Epoch,
    pub target: Body,
    /// Distance from the target body [m].
    pub distance: f64,
    /// Sun-target-spacecraft angle [deg].
    pub phase_angle: f64,
    /// Orientation on the cone of constant phase angle [deg]; 0 lies in the
    /// equatorial plane, 90 toward the south pole.
    pub azimuth: f64,
    /// Barycentric ecliptic position [m].
    pub position: Vector3<f64>,
}

/// Places a key point at the given distance and phase angle from `target`.
///
/// With `day_side` set, phase angles beyond 90 deg are rejected.
pub fn make_keypoint(
    epoch: Epoch,
    target: Body,
    distance: f64,
    phase_angle: f64,
    azimuth: f64,
    day_side: bool,
    sys: &SystemModel,
) -> Result<KeyPoint> {
    if !(distance > 0.0) {
        return Err(Error::Constraint(format!(
            "key point distance {distance} m must be positive"
        )));
    }
    if !(0.0..=180.0).contains(&phase_angle) {
        return Err(Error::Constraint(format!(
            "phase angle {phase_angle} deg outside [0, 180]"
        )));
    }
    if day_side && phase_angle > 90.0 {
        return Err(Error::Constraint(format!(
            "phase angle {phase_angle} deg cannot be reached on the day side"
        )));
    }
    let body = body_position(target, epoch, sys);
    let to_sun = (sun_position(epoch, sys)? - body).normalize();
    let p = sys.pole;
    let south = -p + to_sun * to_sun.dot(&p);
    if south.norm() < 1e-12 {
        return Err(Error::DegenerateFrame);
    }
    let e2 = south.normalize();
    let e1 = e2.cross(&to_sun);
    let (sp, cp) = phase_angle.to_radians().sin_cos();
    let (sa, ca) = azimuth.to_radians().sin_cos();
    let dir = to_sun * cp + (e1 * ca + e2 * sa) * sp;
    Ok(KeyPoint {
        epoch,
        target,
        distance,
        phase_angle,
        azimuth,
        position: body + dir * distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::phase_angle;

    #[test]
    fn zero_phase_is_sunward() {
        let sys = SystemModel::didymos();
        let t = Epoch::from_days(2.0);
        let kp = make_keypoint(t, Body::Secondary, 2780.0, 0.0, 33.0, true, &sys).unwrap();
        let body = body_position(Body::Secondary, t, &sys);
        let sun = (sun_position(t, &sys).unwrap() - body).normalize();
        assert!((kp.position - (body + sun * 2780.0)).norm() < 1e-9);
    }

    #[test]
    fn inverse_consistency() {
        let sys = SystemModel::didymos();
        for (k, (phase, az)) in [(5.0, 0.0), (42.0, 90.0), (75.0, -130.0), (120.0, 10.0)]
            .into_iter()
            .enumerate()
        {
            let t = Epoch::from_hours(5.0 * k as f64);
            let kp = make_keypoint(t, Body::Primary, 3500.0, phase, az, false, &sys).unwrap();
            let measured = phase_angle(&kp.position, t, Body::Primary, &sys).unwrap();
            assert!((measured - phase).abs() < 1e-9);
            let range = (kp.position - body_position(Body::Primary, t, &sys)).norm();
            assert!((range - 3500.0).abs() < 1e-6);
        }
    }

    #[test]
    fn azimuth_zero_stays_equatorial_relative_to_body() {
        let sys = SystemModel::didymos();
        let t = Epoch::ZERO;
        let kp = make_keypoint(t, Body::Secondary, 3000.0, 30.0, 0.0, true, &sys).unwrap();
        let body = body_position(Body::Secondary, t, &sys);
        let to_sun = (sun_position(t, &sys).unwrap() - body).normalize();
        let offset = (kp.position - body) / 3000.0 - to_sun * 30f64.to_radians().cos();
        assert!(offset.dot(&sys.pole).abs() < 1e-12);
        let south = make_keypoint(t, Body::Secondary, 3000.0, 30.0, 90.0, true, &sys).unwrap();
        assert!((south.position - body).dot(&-sys.pole) > (kp.position - body).dot(&-sys.pole));
    }

    #[test]
    fn night_side_rejected() {
        let sys = SystemModel::didymos();
        let res = make_keypoint(Epoch::ZERO, Body::Secondary, 3000.0, 120.0, 0.0, true, &sys);
        assert!(matches!(res, Err(Error::Constraint(_))));
    }
}
