//! The pipelines behind each subcommand. Every command writes into the
//! scenario's output directory and leaves a scenario echo there.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use binarynav::design::{
    build_plan, load_node_set, reference, save_node_set, validate_plan, write_plan_json,
    write_trajectory_csv, ConstraintReport, NodeSet, OptionLabel, TrajectoryPlan,
};
use binarynav::dispersion::{
    run_dispersion, write_dispersion_csv, write_nav_cost_cdf_csv, write_nav_cost_csv,
    DispersionResult, EarlyStop, SampleSummary,
};
use binarynav::dynamics::Dynamics;
use binarynav::knowledge::{
    run_knowledge, write_knowledge_csv, KnowledgeTimeline, ManeuverKnowledge,
};
use binarynav::measurements::{build_schedule, simulate_schedule, write_measurements_csv};
use binarynav::rng::stream;
use log::info;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;
use crate::schema;

/// Output directory of one command.
struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn create(scenario: &Scenario) -> CliResult<Self> {
        let dir = scenario.out.clone();
        fs::create_dir_all(&dir).map_err(CliError::io(&dir))?;
        let out = Self { dir };
        if let Some(nodes) = &scenario.nodes {
            let dest = out.path("nodes.toml");
            if fs::canonicalize(nodes).ok() != fs::canonicalize(&dest).ok() {
                fs::copy(nodes, &dest).map_err(CliError::io(&dest))?;
            }
        }
        out.text("scenario.toml", &scenario.echo()?)?;
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn text(&self, name: &str, body: &str) -> CliResult<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(CliError::io(p))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(binarynav::Error::from)?;
        body.push('\n');
        self.text(name, &body)
    }

    fn schema(&self, files: Vec<schema::FileSchema>) -> CliResult<()> {
        self.json("schema.json", &files)
    }
}

/// Node set of the scenario's plan: constructed for the reference options,
/// read from the node file otherwise.
pub fn node_set(scenario: &Scenario, dynamics: &Dynamics) -> CliResult<NodeSet> {
    match scenario.option {
        OptionLabel::Custom => {
            let path = scenario
                .nodes
                .as_deref()
                .expect("validated scenario has a node file");
            Ok(load_node_set(path)?)
        }
        label => {
            let design = reference::ReferenceDesign::for_option(label)?;
            Ok(reference::construct(&design, dynamics, &scenario.shooting)?)
        }
    }
}

pub fn plan(scenario: &Scenario, dynamics: &Dynamics) -> CliResult<TrajectoryPlan> {
    let set = node_set(scenario, dynamics)?;
    let plan = build_plan(&set, dynamics, &scenario.shooting)?;
    info!(
        "option {}: {} nodes, {} arcs, total dv {:.4} m/s",
        plan.option_label,
        plan.nodes.len(),
        plan.arcs.len(),
        plan.total_dv
    );
    Ok(plan)
}

fn check_report(report: &ConstraintReport) -> CliResult<()> {
    for v in &report.hard {
        log::error!("{:?}: {}", v.kind, v.detail);
    }
    for v in &report.soft {
        log::warn!("{:?}: {}", v.kind, v.detail);
    }
    if report.is_compliant() {
        Ok(())
    } else {
        Err(CliError::Violations {
            count: report.hard.len(),
        })
    }
}

/// Builds and validates the plan; writes the node set, the plan, its dense
/// trajectory and the constraint report.
pub fn design(scenario: &Scenario) -> CliResult<String> {
    let out = Outputs::create(scenario)?;
    let dynamics = scenario.dynamics();
    let set = node_set(scenario, &dynamics)?;
    if scenario.option != OptionLabel::Custom {
        save_node_set(
            &out.path("nodes.toml"),
            &set,
            "Generated reference node set",
        )?;
    }
    let plan = build_plan(&set, &dynamics, &scenario.shooting)?;
    write_plan_json(&out.path("plan.json"), &plan)?;

    let traj_path = out.path("trajectory.csv");
    let file = fs::File::create(&traj_path).map_err(CliError::io(&traj_path))?;
    write_trajectory_csv(
        BufWriter::new(file),
        &plan,
        &dynamics,
        &scenario.shooting.propagation,
        scenario.trajectory_step_s,
        scenario.trajectory_frame,
    )?;
    out.schema(vec![schema::trajectory()])?;

    let report = validate_plan(
        &plan,
        &dynamics,
        &scenario.constraints,
        &scenario.shooting.propagation,
    );
    out.json("constraints.json", &report)?;
    check_report(&report)?;
    Ok(format!(
        "option {}: {} maneuver nodes, pattern {:?} days, {} ballistic arcs, total dv {:.4} m/s, no hard violations",
        plan.option_label,
        plan.pattern.len(),
        plan.pattern,
        plan.arcs.len(),
        plan.total_dv
    ))
}

/// Validates a stored plan, or the scenario's plan when none is given.
pub fn validate(scenario: &Scenario, plan_file: Option<&Path>) -> CliResult<String> {
    let dynamics = scenario.dynamics();
    let plan = match plan_file {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(CliError::io(p))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => plan(scenario, &dynamics)?,
    };
    let out = Outputs::create(scenario)?;
    let report = validate_plan(
        &plan,
        &dynamics,
        &scenario.constraints,
        &scenario.shooting.propagation,
    );
    out.json("constraints.json", &report)?;
    check_report(&report)?;
    Ok(format!(
        "option {}: no hard violations, {} soft, min range to D1 {:.0} m",
        plan.option_label,
        report.soft.len(),
        report.min_range_d1
    ))
}

#[derive(Serialize)]
struct KnowledgeSummary<'a> {
    option: OptionLabel,
    observables: usize,
    maneuvers: &'a [ManeuverKnowledge],
    /// Largest knowledge at a maneuver [m].
    max_sigma_pos_m: f64,
    /// Largest knowledge at a maneuver [m/s].
    max_sigma_vel_mps: f64,
    posterior_within_ground: bool,
    min_relative_eigenvalue: f64,
    scenario: Scenario,
}

fn knowledge_files(
    scenario: &Scenario,
    out: &Outputs,
    plan: &TrajectoryPlan,
    dynamics: &Dynamics,
) -> CliResult<KnowledgeTimeline> {
    let prop = &scenario.shooting.propagation;
    let mut schedule = build_schedule(plan, &scenario.schedule)?;
    if !scenario.observables {
        schedule = schedule.empty_like();
    }
    let mut rng = stream(scenario.seed, "measurements", 0);
    let measurements = simulate_schedule(
        plan,
        &schedule,
        &scenario.navcam,
        &scenario.isl,
        dynamics,
        prop,
        &mut rng,
    )?;
    write_measurements_csv(&out.path("measurements.csv"), &measurements)?;

    let timeline = run_knowledge(
        plan,
        &schedule,
        &scenario.navcam,
        &scenario.isl,
        &scenario.budget,
        &scenario.knowledge,
        dynamics,
        prop,
    )?;
    write_knowledge_csv(&out.path("knowledge.csv"), &timeline)?;

    let max =
        |f: fn(&ManeuverKnowledge) -> f64| timeline.maneuvers.iter().map(f).fold(0.0, f64::max);
    let summary = KnowledgeSummary {
        option: plan.option_label,
        observables: measurements.len(),
        maneuvers: &timeline.maneuvers,
        max_sigma_pos_m: max(|m| m.sigma_pos),
        max_sigma_vel_mps: max(|m| m.sigma_vel),
        posterior_within_ground: timeline.records.iter().all(|r| {
            r.sigma_pos_post <= r.sigma_pos_ground * (1.0 + 1e-9)
                && r.sigma_vel_post <= r.sigma_vel_ground * (1.0 + 1e-9)
        }),
        min_relative_eigenvalue: timeline.min_relative_eigenvalue,
        scenario: scenario.relocated(),
    };
    out.json("knowledge_summary.json", &summary)?;
    Ok(timeline)
}

/// Runs the knowledge analysis; writes the simulated observables, the
/// timeline and a summary of the knowledge at each maneuver.
pub fn knowledge(scenario: &Scenario) -> CliResult<String> {
    let out = Outputs::create(scenario)?;
    let dynamics = scenario.dynamics();
    let plan = plan(scenario, &dynamics)?;
    let timeline = knowledge_files(scenario, &out, &plan, &dynamics)?;
    out.schema(vec![schema::measurements(), schema::knowledge()])?;
    let worst_pos = timeline
        .maneuvers
        .iter()
        .map(|m| m.sigma_pos)
        .fold(0.0, f64::max);
    let worst_vel = timeline
        .maneuvers
        .iter()
        .map(|m| m.sigma_vel)
        .fold(0.0, f64::max);
    Ok(format!(
        "option {}: knowledge at {} maneuvers, worst {:.1} m and {:.2} mm/s",
        plan.option_label,
        timeline.maneuvers.len(),
        worst_pos,
        worst_vel * 1e3
    ))
}

#[derive(Serialize)]
struct DispersionSummary<'a> {
    option: OptionLabel,
    n_samples: usize,
    seed: u64,
    collision_fraction: f64,
    escape_fraction: f64,
    failures: usize,
    early_stop: &'a Option<EarlyStop>,
    peak_relative_pct: f64,
    nav_cost_p50_mps: f64,
    nav_cost_p95_mps: f64,
    nav_cost_p99_mps: f64,
    terminations: Vec<&'a SampleSummary>,
    scenario: Scenario,
}

/// Knowledge analysis followed by the Monte Carlo run; writes the
/// dispersion series, per-sample costs, their distribution and a summary.
pub fn dispersion(scenario: &Scenario) -> CliResult<String> {
    let out = Outputs::create(scenario)?;
    let dynamics = scenario.dynamics();
    let plan = plan(scenario, &dynamics)?;
    let timeline = knowledge_files(scenario, &out, &plan, &dynamics)?;
    info!("flying {} samples", scenario.dispersion.n_samples);
    let result = run_dispersion(
        &plan,
        &timeline,
        &scenario.budget,
        &scenario.dispersion,
        &dynamics,
        &scenario.shooting.propagation,
    )?;
    write_dispersion_csv(&out.path("dispersion.csv"), &result)?;
    write_nav_cost_csv(&out.path("nav_cost.csv"), &result)?;
    write_nav_cost_cdf_csv(&out.path("nav_cost_cdf.csv"), &result)?;
    out.json(
        "dispersion_summary.json",
        &dispersion_summary(scenario, &plan, &result),
    )?;
    out.schema(vec![
        schema::measurements(),
        schema::knowledge(),
        schema::dispersion(),
        schema::nav_cost(),
        schema::nav_cost_cdf(),
    ])?;

    let stop = match &result.early_stop {
        Some(s) => format!(
            "stopped at node {} ({:.2} d) with {:.1}% collided",
            s.node,
            s.epoch.days(),
            100.0 * s.collision_fraction
        ),
        None => "completed".to_string(),
    };
    Ok(format!(
        "option {}: {stop}, peak relative dispersion {:.1}%, collisions {:.1}%, nav cost p95 {:.4} m/s",
        plan.option_label,
        result.peak_relative(),
        100.0 * result.collision_fraction,
        result.cost_percentile(95.0)
    ))
}

fn dispersion_summary<'a>(
    scenario: &'a Scenario,
    plan: &TrajectoryPlan,
    result: &'a DispersionResult,
) -> DispersionSummary<'a> {
    DispersionSummary {
        option: plan.option_label,
        n_samples: result.n_samples,
        seed: scenario.seed,
        collision_fraction: result.collision_fraction,
        escape_fraction: result.escape_fraction,
        failures: result.failures,
        early_stop: &result.early_stop,
        peak_relative_pct: result.peak_relative(),
        nav_cost_p50_mps: result.cost_percentile(50.0),
        nav_cost_p95_mps: result.cost_percentile(95.0),
        nav_cost_p99_mps: result.cost_percentile(99.0),
        terminations: result
            .samples
            .iter()
            .filter(|s| s.termination.is_some())
            .collect(),
        scenario: scenario.relocated(),
    }
}

/// Writes the node set of a reference option for use as a custom plan.
pub fn generate_nodes(scenario: &Scenario) -> CliResult<String> {
    if scenario.option == OptionLabel::Custom {
        return Err(CliError::Config(
            "node sets are generated for option A or B".into(),
        ));
    }
    let dir = &scenario.out;
    fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    let dynamics = scenario.dynamics();
    let set = node_set(scenario, &dynamics)?;
    let path = dir.join("nodes.toml");
    let header = format!("Reference node set of option {}", scenario.option);
    save_node_set(&path, &set, &header)?;
    Ok(format!("wrote {}", path.display()))
}
