use std::path::Path;

use log::warn;
use nalgebra::Matrix6;
use serde::{Deserialize, Serialize};

use super::budget::{InitialCovariance, UncertaintyBudget};
use super::filter::{
    apply_maneuver_knowledge, observation_rows, schmidt_update, time_update, BiasTreatment,
    FilterState,
};
use crate::design::TrajectoryPlan;
use crate::dynamics::{phase_angle, Body, Dynamics, Epoch, PropagationOptions, StateVector, HOUR};
use crate::error::Result;
use crate::measurements::{
    measurement_partials, navcam_geometry, IslModel, MeasurementKind, MeasurementSchedule,
    NavCamModel, Stub,
};

/// Settings of a knowledge run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnowledgeConfig {
    pub initial: InitialCovariance,
    pub biases: BiasTreatment,
    /// Longest linear propagation step [h].
    pub max_step_h: f64,
    /// Spacing of the recorded timeline [h].
    pub record_cadence_h: f64,
}

impl Default for KnowledgeConfig {
    fn default() -> Self {
        Self {
            initial: InitialCovariance::default(),
            biases: BiasTreatment::Estimate,
            max_step_h: 1.0,
            record_cadence_h: 1.0,
        }
    }
}

/// Knowledge at one epoch on both tracks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeRecord {
    pub epoch: Epoch,
    pub leg: usize,
    /// Cut-off-limited knowledge available on ground [m].
    pub sigma_pos_ground: f64,
    /// [m/s]
    pub sigma_vel_ground: f64,
    /// Knowledge including observables taken after the cut-off [m].
    pub sigma_pos_post: f64,
    /// [m/s]
    pub sigma_vel_post: f64,
    pub maneuver: bool,
    pub cot: bool,
}

/// Knowledge just before a commanded maneuver.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManeuverKnowledge {
    /// Index into the plan nodes.
    pub node: usize,
    pub epoch: Epoch,
    pub sigma_pos: f64,
    pub sigma_vel: f64,
    pub sigma_pos_post: f64,
    pub sigma_vel_post: f64,
}

/// Ground knowledge at the cut-off time of a node, the last epoch whose
/// observables can shape a correction there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffKnowledge {
    /// Index into the plan nodes.
    pub node: usize,
    pub epoch: Epoch,
    /// Position/velocity covariance including consider effects.
    pub covariance: Matrix6<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeTimeline {
    pub config: KnowledgeConfig,
    pub records: Vec<KnowledgeRecord>,
    pub maneuvers: Vec<ManeuverKnowledge>,
    /// One entry per node after the first whose cut-off falls after the
    /// start of its leg, in node order.
    pub cutoffs: Vec<CutoffKnowledge>,
    /// Smallest eigenvalue over the run of the unit-diagonal scaled filter
    /// covariance, relative to its trace.
    pub min_relative_eigenvalue: f64,
}

struct Ctx<'a> {
    dynamics: &'a Dynamics,
    prop: &'a PropagationOptions,
    budget: &'a UncertaintyBudget,
    navcam: &'a NavCamModel,
    isl: &'a IslModel,
    max_step: f64,
}

impl Ctx<'_> {
    fn advance(
        &self,
        fs: &mut FilterState,
        nominal: &StateVector,
        to: Epoch,
    ) -> Result<StateVector> {
        time_update(
            fs,
            nominal,
            to,
            self.dynamics,
            self.prop,
            self.budget,
            self.max_step,
        )
    }

    /// Processes one observable; optical ones on the night side are skipped.
    fn update(&self, fs: &mut FilterState, nominal: &StateVector, stub: &Stub) -> Result<()> {
        let sys = &self.dynamics.sys;
        let sigmas = match stub.kind {
            MeasurementKind::NavCamRange | MeasurementKind::NavCamAngles => {
                if phase_angle(&nominal.r, nominal.epoch, Body::Primary, sys)? >= 90.0 {
                    warn!(
                        "optical observable at t = {:.0} s skipped: night side",
                        nominal.epoch.seconds()
                    );
                    return Ok(());
                }
                let (range, _) = navcam_geometry(&nominal.r)?;
                if stub.kind == MeasurementKind::NavCamRange {
                    vec![self.navcam.sigma_range(range)]
                } else {
                    vec![self.navcam.sigma_angle(range); 2]
                }
            }
            MeasurementKind::IslRange => vec![self.isl.sigma_range],
            MeasurementKind::IslRangeRate => vec![self.isl.sigma_rr],
        };
        let partials = measurement_partials(stub.kind, nominal, self.isl, sys)?;
        for row in observation_rows(fs.layout, stub.kind, &partials, &sigmas) {
            schmidt_update(fs, &row)?;
        }
        Ok(())
    }
}

fn min_relative_eigenvalue(fs: &FilterState) -> f64 {
    // Scale to unit diagonal so metres and metres per second compare.
    let d: Vec<f64> = (0..fs.p.nrows())
        .map(|i| fs.p[(i, i)].max(1e-300).sqrt())
        .collect();
    let scaled = nalgebra::DMatrix::from_fn(fs.p.nrows(), fs.p.ncols(), |i, j| {
        fs.p[(i, j)] / (d[i] * d[j])
    });
    let trace = scaled.trace();
    scaled.symmetric_eigenvalues().min() / trace
}

/// At equal epochs: record, then observe, then snapshot.
#[derive(Clone, Copy)]
enum Event<'a> {
    Record,
    Observe(&'a Stub),
    Snapshot(usize),
}

impl Event<'_> {
    fn rank(&self) -> u8 {
        match self {
            Event::Record => 0,
            Event::Observe(_) => 1,
            Event::Snapshot(_) => 2,
        }
    }
}

fn sorted_events<'a>(
    grid: Vec<Epoch>,
    stubs: impl Iterator<Item = &'a Stub>,
    snapshots: Vec<(Epoch, usize)>,
) -> Vec<(Epoch, Event<'a>)> {
    let mut events: Vec<(Epoch, Event)> = grid
        .into_iter()
        .skip(1)
        .map(|t| (t, Event::Record))
        .chain(stubs.map(|s| (s.epoch, Event::Observe(s))))
        .chain(snapshots.into_iter().map(|(t, n)| (t, Event::Snapshot(n))))
        .collect();
    events.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.rank().cmp(&b.1.rank())));
    events
}

/// Grid epochs of `[a, b)` at `step`.
fn epochs_between(a: Epoch, b: Epoch, step: f64) -> Vec<Epoch> {
    let mut out = Vec::new();
    let mut t = a;
    while t < b {
        out.push(t);
        t += step;
    }
    out
}

/// Runs the cut-off-aware knowledge analysis along `plan`.
#[allow(clippy::too_many_arguments)]
pub fn run_knowledge(
    plan: &TrajectoryPlan,
    schedule: &MeasurementSchedule,
    navcam: &NavCamModel,
    isl: &IslModel,
    budget: &UncertaintyBudget,
    config: &KnowledgeConfig,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
) -> Result<KnowledgeTimeline> {
    budget.validate()?;
    config.initial.validate()?;
    let ctx = Ctx {
        dynamics,
        prop,
        budget,
        navcam,
        isl,
        max_step: config.max_step_h * HOUR,
    };
    let cadence = config.record_cadence_h * HOUR;
    let cmd = plan.commanded_nodes();
    let mut fs = FilterState::new(
        plan.start_epoch(),
        &config.initial.matrix(),
        budget,
        navcam,
        isl,
        config.biases,
    );
    let mut records = Vec::new();
    let mut maneuvers = Vec::new();
    let mut cutoffs = Vec::new();
    let mut min_eig = f64::INFINITY;
    let record =
        |leg: usize, g: &FilterState, p: &FilterState, maneuver: bool, cot: bool| KnowledgeRecord {
            epoch: g.epoch,
            leg,
            sigma_pos_ground: g.sigma_pos(),
            sigma_vel_ground: g.sigma_vel(),
            sigma_pos_post: p.sigma_pos(),
            sigma_vel_post: p.sigma_vel(),
            maneuver,
            cot,
        };
    maneuvers.push(ManeuverKnowledge {
        node: cmd[0],
        epoch: fs.epoch,
        sigma_pos: fs.sigma_pos(),
        sigma_vel: fs.sigma_vel(),
        sigma_pos_post: fs.sigma_pos(),
        sigma_vel_post: fs.sigma_vel(),
    });

    for leg in &schedule.legs {
        let node = cmd[leg.leg];
        apply_maneuver_knowledge(&mut fs, &plan.nodes[node].dv, budget);
        let mut nominal = plan.departure_state(node);
        records.push(record(leg.leg, &fs, &fs, true, false));

        // Before the cut-off both tracks coincide.
        let margin = leg.end - leg.cot;
        // An inner node gets a cut-off only if it follows the previous node
        // and the leg's own cut-off does not precede the node.
        let inner: Vec<(Epoch, usize)> = (node + 1..cmd[leg.leg + 1])
            .map(|i| (plan.nodes[i].epoch + -margin, i))
            .filter(|&(t, i)| t >= plan.nodes[i - 1].epoch && leg.cot >= plan.nodes[i].epoch)
            .collect();
        let pre = leg.stubs.iter().filter(|s| !s.post_cot);
        for (t, event) in sorted_events(epochs_between(leg.start, leg.cot, cadence), pre, inner) {
            nominal = ctx.advance(&mut fs, &nominal, t)?;
            match event {
                Event::Record => records.push(record(leg.leg, &fs, &fs, false, false)),
                Event::Observe(s) => ctx.update(&mut fs, &nominal, s)?,
                Event::Snapshot(i) => cutoffs.push(CutoffKnowledge {
                    node: i,
                    epoch: t,
                    covariance: fs.pxx(),
                }),
            }
            min_eig = min_eig.min(min_relative_eigenvalue(&fs));
        }
        nominal = ctx.advance(&mut fs, &nominal, leg.cot)?;
        records.push(record(leg.leg, &fs, &fs, false, true));
        cutoffs.push(CutoffKnowledge {
            node: cmd[leg.leg + 1],
            epoch: leg.cot,
            covariance: fs.pxx(),
        });

        // After the cut-off the ground track only propagates.
        let mut ground = fs.clone();
        let post = leg.stubs.iter().filter(|s| s.post_cot);
        for (t, event) in sorted_events(epochs_between(leg.cot, leg.end, cadence), post, Vec::new())
        {
            let g_nominal = ctx.advance(&mut ground, &nominal, t)?;
            nominal = ctx.advance(&mut fs, &nominal, t)?;
            debug_assert_eq!(g_nominal.r, nominal.r);
            match event {
                Event::Observe(s) => ctx.update(&mut fs, &nominal, s)?,
                _ => records.push(record(leg.leg, &ground, &fs, false, false)),
            }
            min_eig = min_eig.min(min_relative_eigenvalue(&fs));
        }
        ctx.advance(&mut ground, &nominal, leg.end)?;
        ctx.advance(&mut fs, &nominal, leg.end)?;
        min_eig = min_eig.min(min_relative_eigenvalue(&ground));
        records.push(record(leg.leg, &ground, &fs, true, false));
        maneuvers.push(ManeuverKnowledge {
            node: cmd[leg.leg + 1],
            epoch: leg.end,
            sigma_pos: ground.sigma_pos(),
            sigma_vel: ground.sigma_vel(),
            sigma_pos_post: fs.sigma_pos(),
            sigma_vel_post: fs.sigma_vel(),
        });
    }
    if schedule.legs.iter().all(|l| l.stubs.is_empty()) {
        warn!("empty measurement schedule: knowledge only degrades");
    }
    Ok(KnowledgeTimeline {
        config: config.clone(),
        records,
        maneuvers,
        cutoffs,
        min_relative_eigenvalue: min_eig,
    })
}

#[derive(Serialize)]
struct Row {
    epoch_s: f64,
    leg: usize,
    sigma_pos_ground_m: f64,
    sigma_vel_ground_mps: f64,
    sigma_pos_post_m: f64,
    sigma_vel_post_mps: f64,
    maneuver: bool,
    cot: bool,
}

pub fn write_knowledge_csv(path: &Path, timeline: &KnowledgeTimeline) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &timeline.records {
        w.serialize(Row {
            epoch_s: r.epoch.seconds(),
            leg: r.leg,
            sigma_pos_ground_m: r.sigma_pos_ground,
            sigma_vel_ground_mps: r.sigma_vel_ground,
            sigma_pos_post_m: r.sigma_pos_post,
            sigma_vel_post_mps: r.sigma_vel_post,
            maneuver: r.maneuver,
            cot: r.cot,
        })?;
    }
    w.flush()?;
    Ok(())
}
