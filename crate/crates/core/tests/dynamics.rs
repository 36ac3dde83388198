mod common;

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use approx::assert_relative_eq;
use binarynav::dynamics::*;
use nalgebra::{Matrix6, Vector3, Vector6};
use proptest::prelude::*;

fn sys() -> SystemModel {
    SystemModel::default()
}

#[test]
fn kepler_matches_bisection() {
    let e = 0.3839;
    assert_eq!(kepler_solve(0.0, e).unwrap(), 0.0);
    assert_relative_eq!(kepler_solve(PI, e).unwrap(), PI, epsilon = 1e-15);
    let oracle = common::bisect(|x| x - e * x.sin() - 1.0, 0.0, PI);
    assert!((kepler_solve(1.0, e).unwrap() - oracle).abs() < 1e-12);
}

#[test]
fn sun_distance_at_perihelion() {
    let s = sys();
    let t = Epoch::from_days(s.helio.perihelion_epoch_days);
    let (_, r) = sun_direction(t, &s).unwrap();
    assert_relative_eq!(r, 1.66446 * (1.0 - 0.3839) * AU, max_relative = 1e-12);
}

#[test]
fn circular_orbit_keeps_semi_major_axis() {
    let mut s = sys();
    s.helio.e = 0.0;
    for days in [0.0, 37.0, 200.0, 611.5] {
        let (_, r) = sun_direction(Epoch::from_days(days), &s).unwrap();
        assert_relative_eq!(r, s.helio.a_au * AU, max_relative = 1e-12);
    }
}

#[test]
fn quarter_period_distance_matches_kepler_oracle() {
    let s = sys();
    let t = Epoch::from_days(s.helio.perihelion_epoch_days + s.helio.period_days / 4.0);
    let e = s.helio.e;
    let big_e = common::bisect(|x| x - e * x.sin() - FRAC_PI_2, 0.0, PI);
    let expected = s.helio.a_au * AU * (1.0 - e * big_e.cos());
    let (_, r) = sun_direction(t, &s).unwrap();
    assert_relative_eq!(r, expected, max_relative = 1e-10);
}

#[test]
fn system_gravity_from_masses() {
    let mu = G * (5.226e11 + 4.860e9);
    assert!((mu - 35.2).abs() < 0.5);
    let s = sys();
    assert_relative_eq!(s.mu1 + s.mu2, mu, max_relative = 1e-12);
}

#[test]
fn tide_near_barycenter_matches_taylor_term() {
    let s = sys();
    let t = Epoch::from_days(10.0);
    let (u, r_ds) = sun_direction(t, &s).unwrap();
    let r = u * 10_000.0;
    let a = accel_fourbody(&r, t, &s).unwrap();
    let taylor = 2.0 * s.mu_sun * 10_000.0 / r_ds.powi(3);
    assert_relative_eq!(a.norm(), taylor, max_relative = 0.01);
    assert!(a.dot(&u) > 0.0, "tide must stretch toward the Sun");
}

#[test]
fn srp_hand_values() {
    let sc = SpacecraftModel::default();
    let at_1au = 1367.0 / 299_792_458.0 * (1.25 * 0.51 / 12.0);
    assert_relative_eq!(sc.srp_accel_1au(), at_1au, max_relative = 1e-12);
    assert_relative_eq!(at_1au, 2.423e-7, max_relative = 1e-3);
    assert_relative_eq!(at_1au / 1.66446_f64.powi(2), 8.74e-8, max_relative = 2e-3);

    let s = sys();
    let t = Epoch::from_days(3.0);
    let r = Vector3::new(3000.0, -2000.0, 500.0);
    let a = accel_srp(&r, t, &s, &sc).unwrap();
    let heavy = SpacecraftModel {
        mass: 2.0 * sc.mass,
        ..sc.clone()
    };
    assert_relative_eq!(
        accel_srp(&r, t, &s, &heavy).unwrap(),
        a * 0.5,
        max_relative = 1e-14
    );
}

#[test]
fn force_terms_rank_at_ten_km() {
    let s = sys();
    let sc = SpacecraftModel::default();
    let t = Epoch::from_days(1.0);
    let (u, _) = sun_direction(t, &s).unwrap();
    let r = u.cross(&s.pole).normalize() * 10_000.0;
    let point_mass = (s.mu1 + s.mu2) / 1e8;
    let srp = accel_srp(&r, t, &s, &sc).unwrap().norm();
    let tide = accel_fourbody(&r, t, &s).unwrap().norm();
    assert_relative_eq!(point_mass, 3.5e-7, max_relative = 0.01);
    assert!(
        point_mass > srp && srp > tide,
        "{point_mass:e} {srp:e} {tide:e}"
    );
    assert!((srp - 8.7e-8).abs() < 0.15e-7, "{srp:e}");
}

#[test]
fn jacobian_matches_central_differences() {
    let s = sys();
    let sc = SpacecraftModel::default();
    let states = [
        (Vector3::new(10_000.0, 2_000.0, -500.0), 0.0),
        (Vector3::new(-3_000.0, 4_000.0, 1_000.0), 1.3),
        (Vector3::new(2_500.0, -600.0, 2_000.0), 4.7),
        (Vector3::new(-12_000.0, -7_000.0, 300.0), 9.1),
        (Vector3::new(800.0, 3_100.0, -2_900.0), 20.0),
    ];
    for (r, days) in states {
        let state = StateVector::new(r, Vector3::new(0.01, -0.02, 0.005), Epoch::from_days(days));
        let a = jacobian(&state, &s, &sc).unwrap();
        let mut fd = Matrix6::zeros();
        for j in 0..6 {
            let x = state.to_vector();
            let h = f64::EPSILON.cbrt() * x[j].abs().max(1.0);
            let f = |sign: f64| {
                let mut y = x;
                y[j] += sign * h;
                let st = StateVector::from_vector(&y, state.epoch);
                let acc = accel_total(&st, &s, &sc).unwrap();
                Vector6::new(y[3], y[4], y[5], acc.x, acc.y, acc.z)
            };
            fd.set_column(j, &((f(1.0) - f(-1.0)) / (2.0 * h)));
        }
        let scale = a.abs().max();
        assert!(
            (a - fd).abs().max() / scale < 1e-6,
            "{}",
            (a - fd).abs().max() / scale
        );
    }
}

#[test]
fn point_mass_gradient_is_traceless_with_textbook_eigenvalues() {
    let mu = 35.2;
    let r = 5000.0;
    let g = gravity_gradient(&Vector3::new(r, 0.0, 0.0), mu);
    assert!(g.trace().abs() < 1e-25);
    let k = mu / r.powi(3);
    assert_relative_eq!(g[(0, 0)], 2.0 * k, max_relative = 1e-14);
    assert_relative_eq!(g[(1, 1)], -k, max_relative = 1e-14);
    assert_relative_eq!(g[(2, 2)], -k, max_relative = 1e-14);
}

fn circular(r: f64, mu: f64) -> StateVector {
    StateVector::new(
        Vector3::new(r, 0.0, 0.0),
        Vector3::new(0.0, (mu / r).sqrt(), 0.0),
        Epoch::ZERO,
    )
}

#[test]
fn kepler_limit_conserves_energy_and_momentum() {
    let dynamics = common::kepler();
    let mu = dynamics.sys.mu1;
    let s0 = circular(5_000.0, mu);
    let period = TAU * (5_000.0_f64.powi(3) / mu).sqrt();
    // The default rtol of 1e-10 accumulates about 1e-8 over ten orbits.
    let opts = PropagationOptions {
        rtol: 1e-12,
        atol_pos: 1e-8,
        atol_vel: 1e-11,
        ..Default::default()
    };
    let s1 = propagate(&s0, Epoch::from_seconds(10.0 * period), &dynamics, &opts).unwrap();
    let energy = |s: &StateVector| 0.5 * s.v.norm_squared() - mu / s.r.norm();
    let drift = ((energy(&s1) - energy(&s0)) / energy(&s0)).abs();
    assert!(drift < 1e-9, "{drift:e}");
    let h0 = s0.r.cross(&s0.v);
    assert!((s1.r.cross(&s1.v) - h0).norm() / h0.norm() < 1e-9);
    assert!((s1.r - s0.r).norm() < 1e-3 * 5_000.0);
}

#[test]
fn forward_then_backward_returns_home() {
    let dynamics = common::dynamics();
    let opts = PropagationOptions::default();
    let s0 = StateVector::new(
        Vector3::new(9_000.0, 3_000.0, -1_000.0),
        Vector3::new(-0.02, 0.04, 0.003),
        Epoch::ZERO,
    );
    let s1 = propagate(&s0, Epoch::from_days(3.0), &dynamics, &opts).unwrap();
    let back = propagate(&s1, Epoch::ZERO, &dynamics, &opts).unwrap();
    assert!((back.r - s0.r).norm() < 1e-3);
    assert!((back.v - s0.v).norm() < 1e-9);
}

#[test]
fn tighter_tolerance_converges() {
    let dynamics = common::dynamics();
    let s0 = StateVector::new(
        Vector3::new(9_000.0, 3_000.0, -1_000.0),
        Vector3::new(-0.02, 0.04, 0.003),
        Epoch::ZERO,
    );
    let tf = Epoch::from_days(4.0);
    let run = |rtol: f64| {
        let opts = PropagationOptions {
            rtol,
            ..Default::default()
        };
        propagate(&s0, tf, &dynamics, &opts).unwrap().r
    };
    let (coarse, fine, finest) = (run(1e-8), run(1e-9), run(1e-11));
    let err_coarse = (coarse - finest).norm();
    let err_fine = (fine - finest).norm();
    assert!(err_fine < err_coarse, "{err_fine} vs {err_coarse}");
}

/// Column-wise relative error of the STM against central differences.
fn stm_fd_error(s0: &StateVector, tf: Epoch) -> f64 {
    let dynamics = common::dynamics();
    let opts = PropagationOptions::default();
    let (_, stm) = propagate_with_stm(s0, tf, &dynamics, &opts).unwrap();
    let steps = [1.0, 1.0, 1.0, 1e-4, 1e-4, 1e-4];
    let mut worst: f64 = 0.0;
    for (j, h) in steps.iter().enumerate() {
        let shoot = |sign: f64| {
            let mut x = s0.to_vector();
            x[j] += sign * h;
            propagate(
                &StateVector::from_vector(&x, s0.epoch),
                tf,
                &dynamics,
                &opts,
            )
            .unwrap()
            .to_vector()
        };
        let col = (shoot(1.0) - shoot(-1.0)) / (2.0 * h);
        let phi = stm.phi.column(j).into_owned();
        worst = worst.max((phi - col).norm() / col.norm());
    }
    worst
}

#[test]
fn stm_identity_at_start() {
    let dynamics = common::dynamics();
    let s0 = StateVector::new(
        Vector3::new(9_000.0, 0.0, 0.0),
        Vector3::new(0.0, 0.05, 0.0),
        Epoch::ZERO,
    );
    let (_, stm) =
        propagate_with_stm(&s0, Epoch::ZERO, &dynamics, &PropagationOptions::default()).unwrap();
    assert_eq!(stm.phi, Matrix6::identity());
}

#[test]
fn stm_matches_finite_differences_on_three_and_seven_day_arcs() {
    let s0 = StateVector::new(
        Vector3::new(10_000.0, 4_000.0, -800.0),
        Vector3::new(-0.03, 0.035, 0.004),
        Epoch::from_days(2.0),
    );
    for days in [3.0, 7.0] {
        let err = stm_fd_error(&s0, s0.epoch + days * DAY);
        assert!(err < 1e-4, "{days}-day arc: {err:e}");
    }
}

#[test]
fn stm_chain_rule() {
    let dynamics = common::dynamics();
    let opts = PropagationOptions::default();
    let s0 = StateVector::new(
        Vector3::new(10_000.0, 4_000.0, -800.0),
        Vector3::new(-0.03, 0.035, 0.004),
        Epoch::ZERO,
    );
    let (s1, a) = propagate_with_stm(&s0, Epoch::from_days(2.0), &dynamics, &opts).unwrap();
    let (_, b) = propagate_with_stm(&s1, Epoch::from_days(5.0), &dynamics, &opts).unwrap();
    let (_, full) = propagate_with_stm(&s0, Epoch::from_days(5.0), &dynamics, &opts).unwrap();
    let chained = b.phi * a.phi;
    assert!((chained - full.phi).norm() / full.phi.norm() < 1e-8);
}

#[test]
fn sun_line_point_maps_to_x_axis() {
    let mut s = sys();
    let t = Epoch::from_days(5.0);
    // Put the pole perpendicular to the Sun line so the Sun lies in the equator.
    let (u, _) = sun_direction(t, &s).unwrap();
    s.pole = u.cross(&Vector3::z()).cross(&u).normalize();
    let p = StateVector::new(u * 7_000.0, Vector3::zeros(), t);
    let q = to_sun_south_frame(&p, &s).unwrap();
    assert_relative_eq!(q.r, Vector3::new(7_000.0, 0.0, 0.0), epsilon = 1e-9);
}

#[test]
fn phase_angle_limits() {
    let s = sys();
    let t = Epoch::from_days(2.0);
    let (u, _) = sun_direction(t, &s).unwrap();
    let d1 = body_position(Body::Primary, t, &s);
    let side = u.cross(&s.pole).normalize();
    let at = |dir: Vector3<f64>| phase_angle(&(d1 + dir * 5_000.0), t, Body::Primary, &s).unwrap();
    assert!(at(u).abs() < 1e-9);
    assert!((at(-u) - 180.0).abs() < 1e-9);
    assert!((at(side) - 90.0).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn barycenter_separation_and_period(days in 0.0..60.0_f64) {
        let s = sys();
        let t = Epoch::from_days(days);
        let (r1, r2) = asteroid_states(t, &s);
        prop_assert!((r1 * s.mu1 + r2 * s.mu2).norm() < 1e-12 * s.mu1 * s.separation_d12);
        prop_assert!(((r1 - r2).norm() - s.separation_d12).abs() < 1e-9 * s.separation_d12);
        let (q1, q2) = asteroid_states(t + s.mutual_period(), &s);
        prop_assert!((q1 - r1).norm() < 1e-9 * s.separation_d12);
        prop_assert!((q2 - r2).norm() < 1e-9 * s.separation_d12);
    }

    #[test]
    fn tide_vanishes_at_barycenter(days in -100.0..400.0_f64) {
        let a = accel_fourbody(&Vector3::zeros(), Epoch::from_days(days), &sys()).unwrap();
        prop_assert_eq!(a, Vector3::zeros());
    }

    #[test]
    fn srp_scales_inverse_square(days in 0.0..700.0_f64) {
        let s = sys();
        let sc = SpacecraftModel::default();
        let t = Epoch::from_days(days);
        let (_, r_ds) = sun_direction(t, &s).unwrap();
        let a = accel_srp(&Vector3::zeros(), t, &s, &sc).unwrap().norm();
        prop_assert!((a * (r_ds / AU).powi(2) / sc.srp_accel_1au() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sun_south_frame_is_a_rotation(days in 0.0..700.0_f64, x in -2e4..2e4_f64, y in -2e4..2e4_f64, z in -2e4..2e4_f64) {
        let s = sys();
        let t = Epoch::from_days(days);
        let rot = sun_south_rotation(t, &s).unwrap();
        prop_assert!((rot.determinant() - 1.0).abs() < 1e-12);
        prop_assert!((rot.transpose() * rot - nalgebra::Matrix3::identity()).abs().max() < 1e-14);
        let p = StateVector::new(Vector3::new(x, y, z), Vector3::new(y, z, x) * 1e-6, t);
        let back = from_sun_south_frame(&to_sun_south_frame(&p, &s).unwrap(), &s).unwrap();
        prop_assert!((back.r - p.r).norm() < 1e-9 * p.r.norm().max(1.0));
        prop_assert!((back.v - p.v).norm() < 1e-12);
    }
}
