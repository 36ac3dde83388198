mod common;

use binarynav::design::{OptionLabel, ShootingOptions};
use binarynav::dynamics::*;
use binarynav::knowledge::*;
use binarynav::measurements::{build_schedule, IslModel, NavCamModel, ScheduleRule};
use nalgebra::{DVector, Matrix6, Vector3, Vector6};
use proptest::prelude::*;

fn prior(biases: BiasTreatment) -> FilterState {
    let p0 = Matrix6::from_diagonal(&Vector6::new(1e4, 2e4, 3e4, 1e-6, 2e-6, 3e-6));
    FilterState::new(
        Epoch::ZERO,
        &p0,
        &UncertaintyBudget::default(),
        &NavCamModel::default(),
        &IslModel::default(),
        biases,
    )
}

/// Circular orbit about the primary alone.
fn circular(r: f64) -> (StateVector, Dynamics) {
    let dynamics = common::kepler();
    let v = (dynamics.sys.mu1 / r).sqrt();
    (
        StateVector::new(
            Vector3::new(r, 0.0, 0.0),
            Vector3::new(0.0, v, 0.0),
            Epoch::ZERO,
        ),
        dynamics,
    )
}

fn row(fs: &FilterState, entries: &[(usize, f64)], sigma: f64) -> ObservationRow {
    let mut h = DVector::zeros(fs.layout.n());
    for &(i, x) in entries {
        h[i] = x;
    }
    ObservationRow {
        h,
        sigma,
        innovation: 0.0,
    }
}

#[test]
fn zero_step_time_update_is_identity() {
    let (state, dynamics) = circular(10_000.0);
    let mut fs = prior(BiasTreatment::Estimate);
    let before = fs.clone();
    let out = time_update(
        &mut fs,
        &state,
        Epoch::ZERO,
        &dynamics,
        &PropagationOptions::default(),
        &UncertaintyBudget::default(),
        HOUR,
    )
    .unwrap();
    assert_eq!(fs, before);
    assert_eq!(out, state);
}

#[test]
fn gauss_markov_reaches_steady_state() {
    let gm = UncertaintyBudget::default().srp_gm;
    let (dt, n) = (HOUR, (20.0 * gm.tau() / HOUR) as usize);
    let mut v = 0.0;
    for _ in 0..n {
        v = gm.decay(dt).powi(2) * v + gm.process_variance(dt);
    }
    assert!((v - gm.sigma.powi(2)).abs() < 1e-12);

    // The same recursion inside the filter, starting from zero variance.
    let (state, dynamics) = circular(10_000.0);
    let budget = UncertaintyBudget::default();
    let mut fs = prior(BiasTreatment::Estimate);
    for i in 0..3 {
        fs.p[(Layout::SRP + i, Layout::SRP + i)] = 0.0;
        fs.p[(Layout::RES + i, Layout::RES + i)] = 0.0;
    }
    let to = Epoch::ZERO + 20.0 * budget.srp_gm.tau();
    time_update(
        &mut fs,
        &state,
        to,
        &dynamics,
        &PropagationOptions::default(),
        &budget,
        6.0 * HOUR,
    )
    .unwrap();
    for i in 0..3 {
        let s = fs.p[(Layout::SRP + i, Layout::SRP + i)];
        let r = fs.p[(Layout::RES + i, Layout::RES + i)];
        assert!((s / budget.srp_gm.sigma.powi(2) - 1.0).abs() < 1e-12);
        assert!((r / budget.resid_gm.sigma.powi(2) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn scalar_update_matches_bayes() {
    let mut fs = prior(BiasTreatment::Consider);
    let (p, r) = (fs.p[(0, 0)], 50.0_f64.powi(2));
    let others = fs.pxx();
    let obs = row(&fs, &[(0, 1.0)], 50.0);
    schmidt_update(&mut fs, &obs).unwrap();
    let expected = 1.0 / (1.0 / p + 1.0 / r);
    assert!((fs.p[(0, 0)] / expected - 1.0).abs() < 1e-12);
    for i in 1..6 {
        assert_eq!(fs.p[(i, i)], others[(i, i)]);
    }
}

#[test]
fn consider_block_is_untouched() {
    for biases in [BiasTreatment::Consider, BiasTreatment::Estimate] {
        let mut fs = prior(biases);
        let pcc = fs.pcc();
        let mu = fs.layout.mu();
        let cols: Vec<(usize, f64)> = vec![(0, 0.6), (1, -0.8), (4, 3_000.0), (mu, 1e4)];
        for k in 0..5 {
            let r = row(&fs, &cols, 1.0 + k as f64);
            schmidt_update(&mut fs, &r).unwrap();
        }
        assert_eq!(fs.pcc(), pcc);
        let px = fs.pxx();
        assert!(px[(0, 0)] < 1e4 && px[(1, 1)] < 2e4);
    }
}

#[test]
fn uninformative_observable_changes_nothing() {
    let mut fs = prior(BiasTreatment::Estimate);
    let before = fs.p.clone();
    let obs = row(&fs, &[(0, 1.0), (2, 1.0)], 1e12);
    schmidt_update(&mut fs, &obs).unwrap();
    let diff = (&fs.p - &before).abs().max();
    assert!(diff <= 1e-12 * before.abs().max());
}

#[test]
fn maneuver_execution_knowledge() {
    let budget = UncertaintyBudget::default();
    let mut fs = prior(BiasTreatment::Estimate);
    let before = fs.clone();
    apply_maneuver_knowledge(&mut fs, &Vector3::zeros(), &budget);
    assert_eq!(fs, before);

    apply_maneuver_knowledge(&mut fs, &Vector3::new(1.0, 0.0, 0.0), &budget);
    let d = &fs.p - &before.p;
    assert!((d[(3, 3)].sqrt() - 0.0167).abs() < 1e-12);
    let transverse = 0.67_f64.to_radians().tan().powi(2);
    assert!((d[(4, 4)] - transverse).abs() < 1e-15);
    assert_eq!(d[(4, 4)], d[(5, 5)]);
    assert_eq!(d[(3, 4)], 0.0);
    assert_eq!(d.view((0, 0), (3, 3)).abs().max(), 0.0);
}

#[test]
fn execution_covariance_is_rotation_invariant() {
    let dv = Vector3::new(0.3, -0.4, 1.2);
    let e = execution_covariance(&dv, 0.02, 0.01);
    let u = dv.normalize();
    assert!(((u.transpose() * e * u)[0] - (0.02 * dv.norm()).powi(2)).abs() < 1e-15);
    assert!(
        (e.trace() - (0.02 * dv.norm()).powi(2) - 2.0 * (dv.norm() * 0.01_f64.tan()).powi(2)).abs()
            < 1e-15
    );
}

fn run(
    plan: &binarynav::design::TrajectoryPlan,
    navcam: &NavCamModel,
    isl: &IslModel,
    empty: bool,
) -> KnowledgeTimeline {
    let dynamics = common::dynamics();
    let mut schedule = build_schedule(plan, &ScheduleRule::for_option(plan.option_label)).unwrap();
    if empty {
        schedule = schedule.empty_like();
    }
    let opts = ShootingOptions::default();
    run_knowledge(
        plan,
        &schedule,
        navcam,
        isl,
        &UncertaintyBudget::default(),
        &KnowledgeConfig::default(),
        &dynamics,
        &opts.propagation,
    )
    .unwrap()
}

#[test]
fn knowledge_only_degrades_without_observables() {
    let plan = common::reference_plan(OptionLabel::A);
    let blind = run(&plan, &NavCamModel::default(), &IslModel::default(), true);
    let seen = common::default_knowledge(&plan);
    let s: Vec<f64> = blind.maneuvers.iter().map(|m| m.sigma_pos).collect();
    assert!(s.windows(2).all(|w| w[1] >= w[0]), "{s:?}");
    for (b, m) in blind.maneuvers.iter().zip(&seen.maneuvers).skip(1) {
        assert!(b.sigma_pos > m.sigma_pos && b.sigma_vel > m.sigma_vel);
    }
}

#[test]
fn reference_plans_have_usable_knowledge() {
    for label in [OptionLabel::A, OptionLabel::B] {
        let plan = common::reference_plan(label);
        let k = common::default_knowledge(&plan);
        assert_eq!(k.maneuvers.len(), plan.commanded_nodes().len());
        for m in k.maneuvers.iter().skip(1) {
            assert!(
                (10.0..=1000.0).contains(&m.sigma_pos),
                "{label:?}: {}",
                m.sigma_pos
            );
            assert!(m.sigma_vel < 0.01, "{label:?}: {}", m.sigma_vel);
        }
        for r in &k.records {
            assert!(r.sigma_pos_post <= r.sigma_pos_ground * (1.0 + 1e-9));
        }
        assert!(k.min_relative_eigenvalue > -1e-9);
        for c in &k.cutoffs {
            let eig = c.covariance.symmetric_eigenvalues();
            assert!(eig.min() > -1e-9 * eig.max());
        }
    }
}

#[test]
fn noisier_observables_never_help() {
    let plan = common::reference_plan(OptionLabel::B);
    let base = common::default_knowledge(&plan);
    let n = NavCamModel::default();
    let navcam = NavCamModel {
        c_r0: 2.0 * n.c_r0,
        c_r1: 2.0 * n.c_r1,
        c_th0: 2.0 * n.c_th0,
        c_th1: 2.0 * n.c_th1,
        ..n
    };
    let i = IslModel::default();
    let isl = IslModel {
        sigma_range: 2.0 * i.sigma_range,
        sigma_rr: 2.0 * i.sigma_rr,
        ..i
    };
    let noisy = run(&plan, &navcam, &isl, false);
    for (a, b) in base.records.iter().zip(&noisy.records) {
        assert_eq!(a.epoch, b.epoch);
        assert!(b.sigma_pos_ground >= a.sigma_pos_ground * (1.0 - 1e-9));
        assert!(b.sigma_vel_ground >= a.sigma_vel_ground * (1.0 - 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn updates_keep_covariance_psd(
        h in proptest::collection::vec(-1.0..1.0_f64, 6),
        sigma in 0.01..100.0_f64,
        scale in 1.0..1e4_f64,
    ) {
        let mut fs = prior(BiasTreatment::Estimate);
        let entries: Vec<(usize, f64)> = h.iter().enumerate().map(|(i, x)| (i, if i < 3 { *x } else { x * scale })).collect();
        let before = fs.pxx();
        let obs = row(&fs, &entries, sigma);
    schmidt_update(&mut fs, &obs).unwrap();
        let p = fs.pxx();
        prop_assert!((p - p.transpose()).abs().max() == 0.0);
        let eig = p.symmetric_eigenvalues();
        prop_assert!(eig.min() > -1e-12 * eig.max());
        for i in 0..6 {
            prop_assert!(p[(i, i)] <= before[(i, i)] * (1.0 + 1e-12));
        }
    }
}
