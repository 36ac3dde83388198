//! Zero-revolution Lambert solver in universal variables, used to seed the
//! boundary-value solver.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Stumpff functions C(z) and S(z).
pub fn stumpff(z: f64) -> (f64, f64) {
    if z > 1e-6 {
        let s = z.sqrt();
        ((1.0 - s.cos()) / z, (s - s.sin()) / (s * z))
    } else if z < -1e-6 {
        let s = (-z).sqrt();
        ((s.cosh() - 1.0) / -z, (s.sinh() - s) / (s * -z))
    } else {
        (
            0.5 - z / 24.0 + z * z / 720.0,
            1.0 / 6.0 - z / 120.0 + z * z / 5040.0,
        )
    }
}

/// Two-body transfer from `r1` to `r2` in time `dt` about a point mass `mu`.
///
/// `prograde` selects the transfer whose angular momentum has a positive
/// component along `normal`. Returns the departure and arrival velocities.
pub fn lambert(
    r1: &Vector3<f64>,
    r2: &Vector3<f64>,
    dt: f64,
    mu: f64,
    normal: &Vector3<f64>,
    prograde: bool,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let n1 = r1.norm();
    let n2 = r2.norm();
    if !(dt > 0.0 && n1 > 0.0 && n2 > 0.0) {
        return Err(Error::SingularGeometry("degenerate Lambert geometry"));
    }
    let cos_dnu = (r1.dot(r2) / (n1 * n2)).clamp(-1.0, 1.0);
    let mut dnu = cos_dnu.acos();
    let short = r1.cross(r2).dot(normal) >= 0.0;
    if short != prograde {
        dnu = 2.0 * PI - dnu;
    }
    let a = dnu.sin() * (n1 * n2 / (1.0 - cos_dnu)).sqrt();
    if !a.is_finite() || a.abs() < 1e-12 {
        return Err(Error::SingularGeometry("collinear Lambert endpoints"));
    }
    let y = |z: f64| {
        let (c, s) = stumpff(z);
        n1 + n2 + a * (z * s - 1.0) / c.sqrt()
    };
    let tof = |z: f64| {
        let (c, s) = stumpff(z);
        let yz = y(z);
        ((yz / c).powf(1.5) * s + a * yz.sqrt()) / mu.sqrt()
    };

    // Upper limit is the single-revolution bound; the lower limit is either
    // deep hyperbolic or where y vanishes.
    let mut hi = 4.0 * PI * PI - 1e-9;
    let mut lo = -4.0 * PI * PI;
    while y(lo) >= 0.0 && tof(lo) > dt {
        lo = lo * 2.0 - 1.0;
        if lo < -1e6 {
            return Err(Error::Numerical(
                "Lambert time of flight unreachable".into(),
            ));
        }
    }
    if y(lo) < 0.0 {
        // Move the lower end to where y crosses zero; the time of flight
        // vanishes there.
        let (mut neg, mut pos) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (neg + pos);
            if y(mid) < 0.0 {
                neg = mid;
            } else {
                pos = mid;
            }
        }
        lo = pos;
    }
    if tof(hi) < dt {
        return Err(Error::Numerical(
            "Lambert transfer needs more than one revolution".into(),
        ));
    }
    // Newton iterations on the monotone time-of-flight curve, falling back
    // to bisection whenever a step leaves the bracket.
    let dtof = |z: f64| {
        let (c, s) = stumpff(z);
        let yz = y(z);
        let d = if z.abs() > 1e-6 {
            (yz / c).powf(1.5) * ((c - 1.5 * s / c) / (2.0 * z) + 0.75 * s * s / c)
                + a / 8.0 * (3.0 * s / c * yz.sqrt() + a * (c / yz).sqrt())
        } else {
            2f64.sqrt() / 40.0 * yz.powf(1.5) + a / 8.0 * (yz.sqrt() + a * (0.5 / yz).sqrt())
        };
        d / mu.sqrt()
    };
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fz = tof(z) - dt;
        if fz.abs() < 1e-11 * dt {
            break;
        }
        if fz > 0.0 {
            hi = z;
        } else {
            lo = z;
        }
        let next = z - fz / dtof(z);
        z = if next.is_finite() && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-14 * hi.abs().max(1.0) {
            break;
        }
    }
    let yz = y(z);
    let f = 1.0 - yz / n1;
    let g = a * (yz / mu).sqrt();
    let gdot = 1.0 - yz / n2;
    let v1 = (r2 - r1 * f) / g;
    let v2 = (r2 * gdot - r1) / g;
    if !(v1.iter().chain(v2.iter()).all(|x| x.is_finite())) {
        return Err(Error::Numerical("Lambert solution is not finite".into()));
    }
    Ok((v1, v2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_circle() {
        let mu = 35.2;
        let r: f64 = 8000.0;
        let n = (mu / r.powi(3)).sqrt();
        let dt = 0.5 * PI / n;
        let r1 = Vector3::new(r, 0.0, 0.0);
        let r2 = Vector3::new(0.0, r, 0.0);
        let (v1, v2) = lambert(&r1, &r2, dt, mu, &Vector3::z(), true).unwrap();
        let vc = (mu / r).sqrt();
        assert!((v1 - Vector3::new(0.0, vc, 0.0)).norm() < 1e-9 * vc);
        assert!((v2 - Vector3::new(-vc, 0.0, 0.0)).norm() < 1e-9 * vc);
    }

    #[test]
    fn retrograde_branch_goes_the_long_way() {
        let mu = 35.2;
        let r1 = Vector3::new(8000.0, 0.0, 0.0);
        let r2 = Vector3::new(0.0, 8000.0, 0.0);
        let (v1, _) = lambert(&r1, &r2, 4e5, mu, &Vector3::z(), false).unwrap();
        assert!(r1.cross(&v1).z < 0.0);
    }
}
