//! Acceptance criteria, one line each. Run with
//! `cargo test --release -p binarynav-cli --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use binarynav::design::{
    solve_arc, validate_plan, Constraints, OptionLabel, ShootingOptions, TrajectoryPlan,
};
use binarynav::dispersion::{
    differential_guidance, run_dispersion, DispersionConfig, DispersionResult,
};
use binarynav::dynamics::*;
use binarynav::knowledge::{run_knowledge, KnowledgeTimeline, UncertaintyBudget};
use binarynav::measurements::{build_schedule, isl_observe, IslModel, MeasurementKind};
use binarynav::rng::stream;
use binarynav_cli::{execute, Command, Overrides, Scenario};
use nalgebra::{Matrix6, Vector3, Vector6};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scenario(label: OptionLabel, out: &Path, samples: Option<usize>) -> Scenario {
    let overrides = Overrides {
        option: Some(label),
        out: Some(out.to_path_buf()),
        seed: None,
        samples,
    };
    Scenario::load(None, &overrides).unwrap()
}

/// Plan and default knowledge of a reference option, as the CLI builds them.
fn pipeline(label: OptionLabel) -> (TrajectoryPlan, KnowledgeTimeline, Scenario) {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario(label, dir.path(), None);
    execute(&Command::Design, &sc, None).unwrap();
    let plan: TrajectoryPlan =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    let dynamics = sc.dynamics();
    let schedule = build_schedule(&plan, &sc.schedule).unwrap();
    let knowledge = run_knowledge(
        &plan,
        &schedule,
        &sc.navcam,
        &sc.isl,
        &sc.budget,
        &sc.knowledge,
        &dynamics,
        &sc.shooting.propagation,
    )
    .unwrap();
    (plan, knowledge, sc)
}

fn gravity() -> Check {
    let from_masses = G * (5.226e11 + 4.860e9);
    let model = SystemModel::default().mu_total();
    ensure(
        (from_masses - 35.2).abs() <= 0.5 && (model - from_masses).abs() < 1e-12,
        format!("G(M1+M2) = {from_masses:.4} m^3/s^2, model {model:.4}"),
    )
}

fn tidal_lock() -> Check {
    let sys = SystemModel::default();
    let period =
        std::f64::consts::TAU * (sys.separation_d12.powi(3) / sys.mu_total()).sqrt() / HOUR;
    let model = sys.mutual_period() / HOUR;
    ensure(
        (period / 11.92 - 1.0).abs() <= 0.01 && (model - period).abs() < 1e-12,
        format!("mutual period {period:.3} h"),
    )
}

fn plan_structure() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for (label, pattern) in [
        (OptionLabel::A, vec![3.0, 4.0, 3.0, 4.0, 3.0, 4.0, 3.0, 4.0]),
        (OptionLabel::B, vec![7.0, 4.0, 7.0, 7.0, 3.0, 7.0]),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let sc = scenario(label, dir.path(), None);
        let t = Instant::now();
        let summary = execute(&Command::Design, &sc, None);
        let secs = t.elapsed().as_secs_f64();
        let plan: TrajectoryPlan = match summary {
            Ok(_) => {
                serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap())
                    .unwrap()
            }
            Err(e) => return Err(format!("option {label}: {e}")),
        };
        let report = validate_plan(
            &plan,
            &sc.dynamics(),
            &Constraints::default(),
            &sc.shooting.propagation,
        );
        let keypoints_ok = !report.keypoints.is_empty()
            && report
                .keypoints
                .iter()
                .all(|k| k.distance_ok && k.phase_ok && (2780.0..=4572.0).contains(&k.distance));
        let this = plan.closed
            && plan.pattern == pattern
            && report.is_compliant()
            && keypoints_ok
            && report.min_arc_hours >= 48.0
            && secs < 60.0;
        ok &= this;
        notes.push(format!(
            "{label}: {} nodes {:?} d, {} key points, shortest arc {:.0} h, {} hard violations, {secs:.1} s",
            plan.pattern.len(),
            plan.pattern,
            report.keypoints.len(),
            report.min_arc_hours,
            report.hard.len()
        ));
    }
    ensure(ok, notes.join("; "))
}

fn oracles() -> Check {
    // Circular orbit about a lone point mass: a quarter period joins two
    // orthogonal radii with the circular speed.
    let mut sys = SystemModel::default();
    sys.mu1 += sys.mu2;
    sys.mu2 = 0.0;
    let dynamics =
        Dynamics::new(sys.clone(), SpacecraftModel::default()).with_flags(ForceFlags::two_body());
    let r = 8_000.0;
    let speed = (sys.mu1 / r).sqrt();
    let quarter = std::f64::consts::FRAC_PI_2 * r / speed;
    let opts = ShootingOptions::default();
    let (r0, r1) = (Vector3::new(r, 0.0, 0.0), Vector3::new(0.0, r, 0.0));
    let sol = solve_arc(
        &r0,
        &r1,
        Epoch::ZERO,
        Epoch::ZERO + quarter,
        &dynamics,
        &opts,
        None,
    )
    .map_err(|e| e.to_string())?;
    let expected = Vector3::new(0.0, speed, 0.0);
    let bvp = (sol.v0 - expected).norm() / speed;

    let mut rng = stream(4, "acceptance-guidance", 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut u = || rng.random_range(-1.0..1.0);
        let phi = Matrix6::from_fn(|i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            let scale = match (i < 3, j < 3) {
                (true, false) => 2e4,
                (false, true) => 1e-5,
                _ => 0.5,
            };
            base + scale * u()
                + if i < 3 && j >= 3 && i + 3 == j {
                    5e4
                } else {
                    0.0
                }
        });
        let stm = Stm { phi };
        let dr = Vector3::new(u(), u(), u()) * 500.0;
        let dv = Vector3::new(u(), u(), u()) * 0.01;
        let corr = differential_guidance(&dr, &dv, &stm, 0.0).map_err(|e| e.to_string())?;
        let v = dv + corr;
        let arrival = stm.phi * Vector6::new(dr.x, dr.y, dr.z, v.x, v.y, v.z);
        let scale = (stm.rr() * dr).norm() + (stm.rv() * dv).norm();
        worst = worst.max(arrival.fixed_rows::<3>(0).norm() / scale);
    }
    ensure(
        bvp < 1e-6 && worst < 1e-12,
        format!("two-body BVP velocity error {bvp:.1e}, linear arrival residual {worst:.1e}"),
    )
}

/// Worst relative column error of the transition matrix against central
/// differences. The differences use tight tolerances and steps small enough
/// that their own truncation error, quadratic in the step, stays near 1e-6.
fn stm_error(s0: &StateVector, tf: Epoch, dynamics: &Dynamics, opts: &PropagationOptions) -> f64 {
    let (_, stm) = propagate_with_stm(s0, tf, dynamics, opts).unwrap();
    let fd = PropagationOptions {
        rtol: 1e-13,
        atol_pos: 1e-9,
        atol_vel: 1e-12,
        ..opts.clone()
    };
    let steps = [0.1, 0.1, 0.1, 1e-5, 1e-5, 1e-5];
    let mut worst: f64 = 0.0;
    for (j, h) in steps.iter().enumerate() {
        let shoot = |sign: f64| {
            let mut x = s0.to_vector();
            x[j] += sign * h;
            propagate(&StateVector::from_vector(&x, s0.epoch), tf, dynamics, &fd)
                .unwrap()
                .to_vector()
        };
        let col = (shoot(1.0) - shoot(-1.0)) / (2.0 * h);
        worst = worst.max((stm.phi.column(j) - &col).norm() / col.norm());
    }
    worst
}

fn stm_fidelity(a: &TrajectoryPlan, b: &TrajectoryPlan) -> Check {
    let dynamics = Dynamics::new(SystemModel::default(), SpacecraftModel::default());
    let opts = PropagationOptions::default();
    let mut rng = stream(5, "acceptance-stm", 0);
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for (plan, days) in [(a, 3.0), (b, 7.0)] {
        let cmd = plan.commanded_nodes();
        let legs: Vec<usize> = (0..cmd.len() - 1)
            .filter(|&k| {
                ((plan.nodes[cmd[k + 1]].epoch - plan.nodes[cmd[k]].epoch) / DAY - days).abs()
                    < 1e-9
            })
            .collect();
        for _ in 0..5 {
            let k = legs[rng.random_range(0..legs.len())];
            let s0 = plan.departure_state(cmd[k]);
            let e = stm_error(&s0, s0.epoch + days * DAY, &dynamics, &opts);
            notes.push(format!("{:.0}d:{e:.1e}", s0.epoch.days()));
            worst = worst.max(e);
        }
    }
    ensure(
        worst < 1e-4,
        format!(
            "worst relative column error {worst:.1e} ({})",
            notes.join(" ")
        ),
    )
}

fn knowledge_magnitudes(runs: &[(OptionLabel, &KnowledgeTimeline)]) -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, k) in runs {
        let man = &k.maneuvers[1..];
        let pos = man.iter().map(|m| m.sigma_pos).fold(0.0, f64::max);
        let pos_min = man
            .iter()
            .map(|m| m.sigma_pos)
            .fold(f64::INFINITY, f64::min);
        let vel = man.iter().map(|m| m.sigma_vel).fold(0.0, f64::max);
        let tracks = k.records.iter().all(|r| {
            r.sigma_pos_post <= r.sigma_pos_ground * (1.0 + 1e-9)
                && r.sigma_vel_post <= r.sigma_vel_ground * (1.0 + 1e-9)
        });
        ok &= pos_min >= 10.0 && pos <= 1000.0 && vel < 0.01 && tracks;
        notes.push(format!(
            "{label}: sigma_pos {pos_min:.0}..{pos:.0} m, worst sigma_vel {:.2} mm/s, a-posteriori <= ground {tracks}",
            vel * 1e3
        ));
    }
    ensure(ok, notes.join("; "))
}

fn dispersion(
    plan: &TrajectoryPlan,
    knowledge: &KnowledgeTimeline,
    sc: &Scenario,
) -> DispersionResult {
    let cfg = DispersionConfig {
        n_samples: 500,
        ..sc.dispersion.clone()
    };
    run_dispersion(
        plan,
        knowledge,
        &sc.budget,
        &cfg,
        &sc.dynamics(),
        &sc.shooting.propagation,
    )
    .unwrap()
}

fn dispersion_verdicts(
    a: (&TrajectoryPlan, &KnowledgeTimeline, &Scenario),
    b: (&TrajectoryPlan, &KnowledgeTimeline, &Scenario),
) -> Check {
    let t = Instant::now();
    let ra = dispersion(a.0, a.1, a.2);
    let rb = dispersion(b.0, b.1, b.2);
    let secs = t.elapsed().as_secs_f64();
    let first_correction = a.0.nodes[1].epoch;
    let a_first = ra.peak_relative_until(first_correction);
    let a_peak = ra.peak_relative();
    let b_peak = rb.peak_relative();
    let part_a = a_first > 15.0 && ra.early_stop.is_some();
    let b_below = rb.stats.iter().all(|s| s.rel_sigma_pct < a_peak);
    let part_b = rb.early_stop.is_none() && b_below && rb.collision_fraction < 0.01;
    let part_c = a_peak / b_peak >= 2.0;
    let stop = |r: &DispersionResult| match &r.early_stop {
        Some(s) => format!(
            "stop at day {:.0} with {:.1}% collided",
            s.epoch.days(),
            100.0 * s.collision_fraction
        ),
        None => "full phase".into(),
    };
    ensure(
        part_a && part_b && part_c && secs < 600.0,
        format!(
            "(a) {} A before first correction {a_first:.1}%, {}; (b) {} B {}, peak {b_peak:.1}%, collided {:.1}%; \
             (c) {} peak ratio {:.2}; {secs:.0} s",
            verdict(part_a),
            stop(&ra),
            verdict(part_b),
            stop(&rb),
            100.0 * rb.collision_fraction,
            verdict(part_c),
            a_peak / b_peak
        ),
    )
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn sanity(plan: &TrajectoryPlan, knowledge: &[&KnowledgeTimeline]) -> Check {
    let dynamics = Dynamics::new(SystemModel::default(), SpacecraftModel::default());
    let opts = ShootingOptions::default();
    let cfg = DispersionConfig {
        n_samples: 20,
        perfect_knowledge: true,
        initial: binarynav::knowledge::InitialCovariance {
            sigma_pos_m: 0.0,
            sigma_vel_mps: 0.0,
        },
        ..DispersionConfig::default()
    };
    let zero = run_dispersion(
        plan,
        knowledge[0],
        &UncertaintyBudget::zero(),
        &cfg,
        &dynamics,
        &opts.propagation,
    )
    .map_err(|e| e.to_string())?;
    let still =
        zero.stats.iter().all(|s| s.abs_sigma == 0.0) && zero.nav_cost.iter().all(|c| *c == 0.0);

    let sys = SystemModel::default();
    let isl = IslModel::default();
    let state = StateVector::new(
        Vector3::new(6_000.0, 5_000.0, -1_000.0),
        Vector3::new(0.02, -0.01, 0.0),
        Epoch::from_days(4.0),
    );
    let mut stds = Vec::new();
    for (kind, sigma) in [
        (MeasurementKind::IslRange, 0.5),
        (MeasurementKind::IslRangeRate, 0.015),
    ] {
        let mut rng = stream(9, "acceptance-isl", kind as u64);
        let x: Vec<f64> = (0..100_000)
            .map(|_| {
                isl_observe(&state, kind, &isl, &sys, &mut rng)
                    .unwrap()
                    .value[0]
            })
            .collect();
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt();
        stds.push(std / sigma);
    }
    let noise = stds.iter().all(|r| (r - 1.0).abs() < 0.03);
    let eig = knowledge
        .iter()
        .map(|k| k.min_relative_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let psd = eig > -1e-9;
    ensure(
        still && noise && psd,
        format!(
            "zero budget: zero dispersion and cost {still}; ISL std ratios {:.4}, {:.4}; min relative eigenvalue {eig:.1e}",
            stds[0], stds[1]
        ),
    )
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

fn reproducibility() -> Check {
    let mut notes = Vec::new();
    let mut ok = true;
    for label in [OptionLabel::A, OptionLabel::B] {
        let runs: Vec<_> = [Some(1), Some(4), Some(1)]
            .iter()
            .map(|workers| {
                let dir = tempfile::tempdir().unwrap();
                let sc = scenario(label, dir.path(), Some(100));
                for command in [Command::Design, Command::Knowledge, Command::Dispersion] {
                    execute(&command, &sc, *workers).unwrap();
                }
                files(dir.path())
            })
            .collect();
        let same = runs[0] == runs[1] && runs[0] == runs[2];
        ok &= same && !runs[0].is_empty();
        notes.push(format!(
            "{label}: {} files identical over 1/4/1 workers {same}",
            runs[0].len()
        ));
    }
    ensure(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let (plan_a, know_a, sc_a) = pipeline(OptionLabel::A);
    let (plan_b, know_b, sc_b) = pipeline(OptionLabel::B);
    let criteria: Vec<(&str, Box<dyn Fn() -> Check + '_>)> = vec![
        ("system gravity", Box::new(gravity)),
        ("tidal lock", Box::new(tidal_lock)),
        ("plan structure", Box::new(plan_structure)),
        ("boundary-value and guidance oracles", Box::new(oracles)),
        (
            "transition-matrix fidelity",
            Box::new(|| stm_fidelity(&plan_a, &plan_b)),
        ),
        (
            "knowledge magnitudes",
            Box::new(|| {
                knowledge_magnitudes(&[(OptionLabel::A, &know_a), (OptionLabel::B, &know_b)])
            }),
        ),
        (
            "dispersion verdicts",
            Box::new(|| dispersion_verdicts((&plan_a, &know_a, &sc_a), (&plan_b, &know_b, &sc_b))),
        ),
        (
            "statistical sanity",
            Box::new(|| sanity(&plan_a, &[&know_a, &know_b])),
        ),
        ("reproducibility", Box::new(reproducibility)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
