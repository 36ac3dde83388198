use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::sample::{Context, DispersionConfig, Fleet, Termination, TerminationKind};
use crate::design::TrajectoryPlan;
use crate::dynamics::{asteroid_states, Dynamics, Epoch, PropagationOptions};
use crate::error::Result;
use crate::knowledge::{KnowledgeTimeline, UncertaintyBudget};

/// Sample statistics at one epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: Epoch,
    /// Samples still flying.
    pub n_active: usize,
    /// 1-sigma position dispersion, root of the covariance trace [m].
    pub abs_sigma: f64,
    /// `abs_sigma` over the nominal distance to the closer body [%].
    pub rel_sigma_pct: f64,
    /// Nominal distance to the closer body [m].
    pub nominal_range: f64,
    /// A commanded maneuver takes place here.
    pub maneuver: bool,
}

/// Stop of the whole run at a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyStop {
    /// Index into the plan nodes.
    pub node: usize,
    pub epoch: Epoch,
    pub collision_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub seed: u64,
    pub nav_cost: f64,
    pub termination: Option<Termination>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub n_samples: usize,
    pub stats: Vec<EpochStats>,
    /// Per-sample correction cost, by sample index [m/s].
    pub nav_cost: Vec<f64>,
    pub collision_fraction: f64,
    pub escape_fraction: f64,
    pub failures: usize,
    pub early_stop: Option<EarlyStop>,
    pub samples: Vec<SampleSummary>,
}

impl DispersionResult {
    /// Largest relative dispersion over the run [%].
    pub fn peak_relative(&self) -> f64 {
        self.stats
            .iter()
            .map(|s| s.rel_sigma_pct)
            .fold(0.0, f64::max)
    }

    /// Largest relative dispersion up to and including `until` [%].
    pub fn peak_relative_until(&self, until: Epoch) -> f64 {
        self.stats
            .iter()
            .filter(|s| s.epoch <= until)
            .map(|s| s.rel_sigma_pct)
            .fold(0.0, f64::max)
    }

    /// Nearest-rank percentile of the navigation cost [m/s].
    pub fn cost_percentile(&self, p: f64) -> f64 {
        let mut c = self.nav_cost.clone();
        c.sort_by(f64::total_cmp);
        if c.is_empty() {
            return 0.0;
        }
        let rank = ((p / 100.0) * c.len() as f64).ceil().max(1.0) as usize;
        c[rank.min(c.len()) - 1]
    }
}

/// Root of the trace of the sample covariance of `devs`.
fn spread(devs: &[Vector3<f64>]) -> f64 {
    let n = devs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = devs.iter().sum::<Vector3<f64>>() / n as f64;
    let ss: f64 = devs.iter().map(|d| (d - mean).norm_squared()).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Monte Carlo dispersion analysis of `plan` with the correction law.
pub fn run_dispersion(
    plan: &TrajectoryPlan,
    knowledge: &KnowledgeTimeline,
    budget: &UncertaintyBudget,
    cfg: &DispersionConfig,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
) -> Result<DispersionResult> {
    let ctx = Context::new(plan, knowledge, budget, cfg, dynamics, prop)?;
    let n = cfg.n_samples;
    let mut fleet = Fleet::new(&ctx, 0..n as u64);
    let mut early_stop = None;
    let mut last_index = ctx.grid.len() - 1;
    for i in 0..ctx.n_arcs() {
        fleet.fly_arc(i, &ctx);
        let fraction = fleet.collided() as f64 / n as f64;
        if cfg.early_stop && fraction > cfg.collision_threshold && i + 1 < ctx.n_arcs() {
            early_stop = Some(EarlyStop {
                node: i + 1,
                epoch: plan.nodes[i + 1].epoch,
                collision_fraction: fraction,
            });
            last_index = ctx.node_index[i + 1];
            break;
        }
    }
    if early_stop.is_none() {
        fleet.finish(&ctx);
    }
    let runs = fleet.into_runs(&ctx.reference);

    let maneuver_epochs: Vec<Epoch> = plan
        .commanded_nodes()
        .iter()
        .map(|&i| plan.nodes[i].epoch)
        .collect();
    let stats = (0..=last_index)
        .map(|k| {
            let nominal = &ctx.reference[k];
            let devs: Vec<Vector3<f64>> = runs
                .iter()
                .filter_map(|r| r.truth.get(k).map(|t| t.r - nominal.r))
                .collect();
            let (r1, r2) = asteroid_states(nominal.epoch, &dynamics.sys);
            let range = (nominal.r - r1).norm().min((nominal.r - r2).norm());
            let abs_sigma = spread(&devs);
            EpochStats {
                epoch: ctx.grid[k],
                n_active: devs.len(),
                abs_sigma,
                rel_sigma_pct: 100.0 * abs_sigma / range,
                nominal_range: range,
                maneuver: maneuver_epochs.contains(&ctx.grid[k]),
            }
        })
        .collect();

    let count = |f: &dyn Fn(&TerminationKind) -> bool| {
        runs.iter()
            .filter(|r| r.termination.as_ref().is_some_and(|t| f(&t.kind)))
            .count()
    };
    let collisions = count(&|k| matches!(k, TerminationKind::Collision { .. }));
    let escapes = count(&|k| matches!(k, TerminationKind::Escape));
    let failures = count(&|k| matches!(k, TerminationKind::Failure { .. }));
    Ok(DispersionResult {
        n_samples: n,
        stats,
        nav_cost: runs.iter().map(|r| r.nav_cost).collect(),
        collision_fraction: collisions as f64 / n as f64,
        escape_fraction: escapes as f64 / n as f64,
        failures,
        early_stop,
        samples: runs
            .into_iter()
            .map(|r| SampleSummary {
                seed: r.seed,
                nav_cost: r.nav_cost,
                termination: r.termination,
            })
            .collect(),
    })
}

/// Empirical distribution of the navigation cost: (cost, P[X <= cost])
/// at each distinct cost.
pub fn nav_cost_cdf(result: &DispersionResult) -> Vec<(f64, f64)> {
    let mut c = result.nav_cost.clone();
    c.sort_by(f64::total_cmp);
    let n = c.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in c.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = p,
            _ => out.push((*x, p)),
        }
    }
    out
}

#[derive(Serialize)]
struct StatsRow {
    epoch_s: f64,
    n_active: usize,
    abs_sigma_m: f64,
    rel_sigma_pct: f64,
    nominal_range_m: f64,
    maneuver: bool,
}

pub fn write_dispersion_csv(path: &Path, result: &DispersionResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in &result.stats {
        w.serialize(StatsRow {
            epoch_s: s.epoch.seconds(),
            n_active: s.n_active,
            abs_sigma_m: s.abs_sigma,
            rel_sigma_pct: s.rel_sigma_pct,
            nominal_range_m: s.nominal_range,
            maneuver: s.maneuver,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CostRow {
    sample: u64,
    nav_cost_mps: f64,
}

#[derive(Serialize)]
struct CdfRow {
    nav_cost_mps: f64,
    probability: f64,
}

pub fn write_nav_cost_csv(path: &Path, result: &DispersionResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for s in &result.samples {
        w.serialize(CostRow {
            sample: s.seed,
            nav_cost_mps: s.nav_cost,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_nav_cost_cdf_csv(path: &Path, result: &DispersionResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (c, p) in nav_cost_cdf(result) {
        w.serialize(CdfRow {
            nav_cost_mps: c,
            probability: p,
        })?;
    }
    w.flush()?;
    Ok(())
}
