//! Analytic ephemerides of the Sun and of the two asteroids.

use std::f64::consts::{PI, TAU};

use nalgebra::{Rotation3, Vector3};

use super::epoch::{Epoch, DAY};
use super::model::{Body, SystemModel, AU};
use crate::error::{Error, Result};

const KEPLER_TOL: f64 = 1e-13;
const KEPLER_MAX_ITER: usize = 100;

/// Solves Kepler's equation `E - e sin E = M` for elliptic orbits.
///
/// Newton iterations are safeguarded by a bisection bracket, so convergence
/// does not depend on the starting point.
pub fn kepler_solve(mean_anomaly: f64, e: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&e) {
        return Err(Error::InvalidModel(format!(
            "eccentricity {e} outside [0, 1)"
        )));
    }
    if !mean_anomaly.is_finite() {
        return Err(Error::KeplerNonConvergence { residual: f64::NAN });
    }
    let turns = (mean_anomaly / TAU).floor();
    let m = mean_anomaly - turns * TAU;
    let offset = turns * TAU;
    if m == 0.0 || m == PI {
        return Ok(m + offset);
    }

    let kepler = |x: f64| x - e * x.sin() - m;
    // E - M = e sin E lies in [-e, e].
    let (mut lo, mut hi) = (m - e, m + e);
    let mut x = if e < 0.8 { m } else { PI };
    x = x.clamp(lo, hi);
    for _ in 0..KEPLER_MAX_ITER {
        let f = kepler(x);
        if f.abs() < KEPLER_TOL {
            return Ok(x + offset);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - f / (1.0 - e * x.cos());
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x {
            break;
        }
        x = next;
    }
    let residual = kepler(x);
    if residual.abs() < 1e-12 {
        Ok(x + offset)
    } else {
        Err(Error::KeplerNonConvergence { residual })
    }
}

/// Position and velocity of the system barycenter relative to the Sun in the
/// ecliptic frame [m, m/s].
pub fn heliocentric_state(t: Epoch, sys: &SystemModel) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let el = &sys.helio;
    let a = el.a_au * AU;
    let e = el.e;
    let n = TAU / (el.period_days * DAY);
    let mean = n * (t.seconds() - el.perihelion_epoch_days * DAY);
    let ecc = kepler_solve(mean, e)?;
    let (s, c) = ecc.sin_cos();
    let b = a * (1.0 - e * e).sqrt();
    let ecc_rate = n / (1.0 - e * c);
    let r_pf = Vector3::new(a * (c - e), b * s, 0.0);
    let v_pf = Vector3::new(-a * s * ecc_rate, b * c * ecc_rate, 0.0);
    let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), el.raan_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::x_axis(), el.i_deg.to_radians())
        * Rotation3::from_axis_angle(&Vector3::z_axis(), el.arg_perihelion_deg.to_radians());
    Ok((rot * r_pf, rot * v_pf))
}

/// Position of the Sun relative to the system barycenter [m].
pub fn sun_position(t: Epoch, sys: &SystemModel) -> Result<Vector3<f64>> {
    Ok(-heliocentric_state(t, sys)?.0)
}

/// Unit vector from the barycenter toward the Sun and the Sun distance [m].
pub fn sun_direction(t: Epoch, sys: &SystemModel) -> Result<(Vector3<f64>, f64)> {
    let s = sun_position(t, sys)?;
    let d = s.norm();
    Ok((s / d, d))
}

/// Barycentric positions of the primary and secondary [m].
pub fn asteroid_states(t: Epoch, sys: &SystemModel) -> (Vector3<f64>, Vector3<f64>) {
    let (e1, e2, _) = sys.equatorial_basis();
    let theta = sys.mutual_phase_deg.to_radians() + sys.mutual_rate() * t.seconds();
    let (s, c) = theta.sin_cos();
    let dir = e1 * c + e2 * s;
    let mu = sys.mu_total();
    let d = sys.separation_d12;
    (-dir * (sys.mu2 / mu * d), dir * (sys.mu1 / mu * d))
}

/// Barycentric position of one asteroid [m].
pub fn body_position(body: Body, t: Epoch, sys: &SystemModel) -> Vector3<f64> {
    let (r1, r2) = asteroid_states(t, sys);
    match body {
        Body::Primary => r1,
        Body::Secondary => r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_symmetry_points() {
        assert_eq!(kepler_solve(0.0, 0.3839).unwrap(), 0.0);
        assert_eq!(kepler_solve(PI, 0.3839).unwrap(), PI);
    }

    #[test]
    fn kepler_keeps_revolution_count() {
        let m = 1.0 + 3.0 * TAU;
        let ecc = kepler_solve(m, 0.3839).unwrap();
        assert!((ecc - 0.3839 * ecc.sin() - m).abs() < 1e-12);
        let m = -2.5;
        let ecc = kepler_solve(m, 0.9).unwrap();
        assert!((ecc - 0.9 * ecc.sin() - m).abs() < 1e-12);
    }

    #[test]
    fn kepler_rejects_hyperbolic() {
        assert!(kepler_solve(1.0, 1.0).is_err());
    }

    #[test]
    fn perihelion_distance() {
        let mut sys = SystemModel::didymos();
        sys.helio.perihelion_epoch_days = 12.0;
        let (_, d) = sun_direction(Epoch::from_days(12.0), &sys).unwrap();
        let expected = 1.66446 * (1.0 - 0.3839) * AU;
        assert!((d - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn circular_orbit_has_constant_distance() {
        let mut sys = SystemModel::didymos();
        sys.helio.e = 0.0;
        for k in 0..10 {
            let (_, d) = sun_direction(Epoch::from_days(37.0 * k as f64), &sys).unwrap();
            assert!((d - sys.helio.a_au * AU).abs() < 1e-4);
        }
    }

    #[test]
    fn heliocentric_velocity_matches_finite_difference() {
        let sys = SystemModel::didymos();
        let t = Epoch::from_days(3.0);
        let h = 10.0;
        let (_, v) = heliocentric_state(t, &sys).unwrap();
        let (rp, _) = heliocentric_state(t + h, &sys).unwrap();
        let (rm, _) = heliocentric_state(t + -h, &sys).unwrap();
        let fd = (rp - rm) / (2.0 * h);
        assert!((fd - v).norm() / v.norm() < 1e-9);
    }

    #[test]
    fn asteroid_orbit_geometry() {
        let sys = SystemModel::didymos();
        let period = sys.mutual_period();
        for k in 0..7 {
            let t = Epoch::from_hours(1.7 * k as f64);
            let (r1, r2) = asteroid_states(t, &sys);
            assert!(((r1 - r2).norm() - sys.separation_d12).abs() < 1e-9);
            assert!((sys.mu1 * r1 + sys.mu2 * r2).norm() < 1e-9 * sys.mu1);
            assert!(r1.dot(&sys.pole).abs() < 1e-9);
            assert!(r2.dot(&sys.pole).abs() < 1e-9);
            let (q1, q2) = asteroid_states(t + period, &sys);
            assert!((q1 - r1).norm() < 1e-9 * sys.separation_d12);
            assert!((q2 - r2).norm() < 1e-9 * sys.separation_d12);
        }
    }

    #[test]
    fn mutual_orbit_is_prograde_about_pole() {
        let sys = SystemModel::didymos();
        let (_, a) = asteroid_states(Epoch::ZERO, &sys);
        let (_, b) = asteroid_states(Epoch::from_seconds(60.0), &sys);
        assert!(a.cross(&b).dot(&sys.pole) > 0.0);
    }
}
