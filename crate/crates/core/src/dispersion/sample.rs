use log::warn;
use nalgebra::{Matrix6, Rotation3, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::guidance::{differential_guidance, GuidanceConfig};
use crate::design::TrajectoryPlan;
use crate::dynamics::{
    asteroid_states, propagate_until, propagate_with_stm, Body, Dynamics, Epoch, Perturbation,
    PropagationOptions, StateVector, Stm, HOUR,
};
use crate::error::{Error, Result};
use crate::knowledge::{InitialCovariance, KnowledgeTimeline, UncertaintyBudget};
use crate::rng::{stream, Stream};

/// Settings of a Monte Carlo dispersion run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub guidance: GuidanceConfig,
    /// Initial dispersion before the first impulse.
    pub initial: InitialCovariance,
    /// Estimated deviations equal the true ones.
    pub perfect_knowledge: bool,
    /// [m]
    pub collision_radius_d1: f64,
    /// [m]
    pub collision_radius_d2: f64,
    /// Barycentric range beyond which a sample counts as escaped [m].
    pub escape_range: f64,
    /// Collided fraction above which the run stops at the next node.
    pub collision_threshold: f64,
    pub early_stop: bool,
    /// Corrections also at nodes without a nominal impulse.
    pub correct_at_mid_nodes: bool,
    /// Truth propagation and sampling step [h].
    pub step_h: f64,
}

impl Default for DispersionConfig {
    fn default() -> Self {
        Self {
            n_samples: 500,
            seed: 1,
            guidance: GuidanceConfig::default(),
            initial: InitialCovariance::default(),
            perfect_knowledge: false,
            collision_radius_d1: 400.0,
            collision_radius_d2: 100.0,
            escape_range: 30_000.0,
            collision_threshold: 0.01,
            early_stop: true,
            correct_at_mid_nodes: true,
            step_h: 1.0,
        }
    }
}

impl DispersionConfig {
    pub fn validate(&self) -> Result<()> {
        self.guidance.validate()?;
        self.initial.validate()?;
        if self.n_samples == 0 {
            return Err(Error::Config("dispersion needs at least one sample".into()));
        }
        if !(self.step_h > 0.0 && self.escape_range > 0.0) {
            return Err(Error::Config(
                "step and escape range must be positive".into(),
            ));
        }
        if !(self.collision_radius_d1 >= 0.0 && self.collision_radius_d2 >= 0.0) {
            return Err(Error::Config("collision radii must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.collision_threshold) {
            return Err(Error::Config(
                "collision threshold must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Why a sample stopped before the end of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationKind {
    Collision { body: Body },
    Escape,
    Failure { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Termination {
    pub epoch: Epoch,
    #[serde(flatten)]
    pub kind: TerminationKind,
}

/// One Monte Carlo sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRun {
    pub seed: u64,
    /// Truth at the sampling epochs it reached.
    pub truth: Vec<StateVector>,
    pub corrections: Vec<(Epoch, Vector3<f64>)>,
    /// Distance from the nominal at the same epochs [m].
    pub dispersion: Vec<f64>,
    pub termination: Option<Termination>,
    /// Sum of the correction magnitudes [m/s].
    pub nav_cost: f64,
}

/// Symmetric square root factor `L` with `L Lᵀ = P` for a PSD matrix.
pub fn psd_sqrt(p: &Matrix6<f64>) -> Matrix6<f64> {
    let sym = (p + p.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let d = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    eig.eigenvectors * Matrix6::from_diagonal(&d)
}

/// Executed impulse: magnitude scaled by `1 + e` and direction tilted by
/// two independent transverse angles.
pub fn execute_impulse<R: Rng>(
    dv: &Vector3<f64>,
    sigma_mag: f64,
    sigma_dir: f64,
    rng: &mut R,
) -> Vector3<f64> {
    let e: f64 = rng.sample(StandardNormal);
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    let m = dv.norm();
    if m == 0.0 {
        return *dv;
    }
    let u = dv / m;
    let seed = if u.x.abs() < 0.9 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = u.cross(&seed).normalize();
    let e2 = u.cross(&e1);
    let axis = e1 * (sigma_dir * a) + e2 * (sigma_dir * b);
    Rotation3::new(axis) * (dv * (1.0 + sigma_mag * e))
}

/// Nominal quantities shared by every sample.
pub(crate) struct Context<'a> {
    pub plan: &'a TrajectoryPlan,
    pub dynamics: &'a Dynamics,
    pub prop: &'a PropagationOptions,
    pub budget: &'a UncertaintyBudget,
    pub cfg: &'a DispersionConfig,
    /// All sampling epochs: start, hourly epochs, cut-offs and nodes.
    pub grid: Vec<Epoch>,
    /// Grid index of every plan node.
    pub node_index: Vec<usize>,
    /// Per grid index, the nodes whose cut-off falls there.
    cut_at: Vec<Vec<usize>>,
    /// Per node: orbit-determination error factor and map from the cut-off
    /// to the node, when a correction happens there.
    cut: Vec<Option<(Matrix6<f64>, Stm)>>,
    /// Per node with a correction: map from just after the node to the
    /// next commanded node, and the time span.
    target: Vec<Option<(Stm, f64)>>,
    pub reference: Vec<StateVector>,
}

struct Walker {
    index: u64,
    state: StateVector,
    mu_scale: f64,
    srp: Vector3<f64>,
    res: Vector3<f64>,
    gm_rng: Stream,
    od_rng: Stream,
    thrust_rng: Stream,
    /// Estimated deviation at each node, set at its cut-off.
    estimates: Vec<Option<Vector6<f64>>>,
    truth: Vec<StateVector>,
    corrections: Vec<(Epoch, Vector3<f64>)>,
    nav_cost: f64,
    termination: Option<Termination>,
}

impl Walker {
    fn new(ctx: &Context, index: u64) -> Self {
        let (cfg, budget) = (ctx.cfg, ctx.budget);
        let mu_total = ctx.dynamics.sys.mu_total();
        let mut init = stream(cfg.seed, "initial", index);
        let mut z = || -> f64 { init.sample(StandardNormal) };
        let mut state = ctx.reference[0].clone();
        let (sp, sv) = (cfg.initial.sigma_pos_m, cfg.initial.sigma_vel_mps);
        state.r += Vector3::new(sp * z(), sp * z(), sp * z());
        state.v += Vector3::new(sv * z(), sv * z(), sv * z());
        let mu_scale = 1.0 + budget.sigma_mu * z() / mu_total;
        let (ss, sr) = (budget.srp_gm.sigma, budget.resid_gm.sigma);
        let srp = Vector3::new(ss * z(), ss * z(), ss * z());
        let res = Vector3::new(sr * z(), sr * z(), sr * z());
        Self {
            index,
            state: state.clone(),
            mu_scale,
            srp,
            res,
            gm_rng: stream(cfg.seed, "gauss-markov", index),
            od_rng: stream(cfg.seed, "orbit-determination", index),
            thrust_rng: stream(cfg.seed, "thrust", index),
            estimates: vec![None; ctx.plan.nodes.len()],
            truth: vec![state],
            corrections: Vec::new(),
            nav_cost: 0.0,
            termination: None,
        }
    }

    /// Noise-free walker that defines the nominal.
    fn nominal(start: &StateVector, n_nodes: usize) -> Self {
        Self {
            index: u64::MAX,
            state: start.clone(),
            mu_scale: 1.0,
            srp: Vector3::zeros(),
            res: Vector3::zeros(),
            gm_rng: stream(0, "unused", 0),
            od_rng: stream(0, "unused", 0),
            thrust_rng: stream(0, "unused", 0),
            estimates: vec![None; n_nodes],
            truth: vec![start.clone()],
            corrections: Vec::new(),
            nav_cost: 0.0,
            termination: None,
        }
    }

    fn is_nominal(&self) -> bool {
        self.index == u64::MAX
    }

    fn correct(
        &mut self,
        node: usize,
        stm: Option<&Stm>,
        duration: f64,
        guidance: &GuidanceConfig,
    ) -> Vector3<f64> {
        let Some(est) = self.estimates[node].take() else {
            return Vector3::zeros();
        };
        let dr: Vector3<f64> = est.fixed_rows::<3>(0).into();
        let dv: Vector3<f64> = est.fixed_rows::<3>(3).into();
        let corr = match stm {
            Some(stm) => match differential_guidance(&dr, &dv, stm, guidance.weight(duration)) {
                Ok(c) => c,
                Err(e) => {
                    warn!("sample {}: correction skipped: {e}", self.index);
                    Vector3::zeros()
                }
            },
            None => -dv,
        };
        self.corrections.push((self.state.epoch, corr));
        self.nav_cost += corr.norm();
        corr
    }

    fn impulse(&mut self, dv: Vector3<f64>, budget: &UncertaintyBudget) {
        let executed = if self.is_nominal() {
            dv
        } else {
            execute_impulse(
                &dv,
                budget.thrust_sigma_mag_dispersion,
                budget.thrust_sigma_dir_dispersion,
                &mut self.thrust_rng,
            )
        };
        self.state.v += executed;
    }

    /// Propagates to `to` with the current error realisation held fixed,
    /// then advances the Gauss-Markov processes.
    fn step(&mut self, to: Epoch, ctx: &Context) -> bool {
        let mut dynamics = ctx.dynamics.clone();
        dynamics.pert = Perturbation {
            mu_scale: self.mu_scale,
            srp_scale: self.srp,
            extra: self.res,
        };
        let cfg = ctx.cfg;
        let sys = &ctx.dynamics.sys;
        let mut hit = None;
        let check = |s: &StateVector, hit: &mut Option<TerminationKind>| {
            let (r1, r2) = asteroid_states(s.epoch, sys);
            if (s.r - r1).norm() < cfg.collision_radius_d1 {
                *hit = Some(TerminationKind::Collision {
                    body: Body::Primary,
                });
            } else if (s.r - r2).norm() < cfg.collision_radius_d2 {
                *hit = Some(TerminationKind::Collision {
                    body: Body::Secondary,
                });
            } else if s.r.norm() > cfg.escape_range {
                *hit = Some(TerminationKind::Escape);
            }
            hit.is_some()
        };
        let from = self.state.epoch;
        match propagate_until(&self.state, to, &dynamics, ctx.prop, |s| check(s, &mut hit)) {
            Ok((s, stopped)) => {
                self.state = s;
                if stopped {
                    self.termination = hit.map(|kind| Termination {
                        epoch: self.state.epoch,
                        kind,
                    });
                    return false;
                }
            }
            Err(e) => {
                let (epoch, kind) = match &e {
                    Error::Propagation {
                        epoch,
                        last_state: Some(last),
                        ..
                    } => {
                        let mut h = None;
                        check(last, &mut h);
                        (Epoch::from_seconds(*epoch), h)
                    }
                    _ => (from, None),
                };
                self.termination = Some(Termination {
                    epoch,
                    kind: kind.unwrap_or(TerminationKind::Failure {
                        reason: e.to_string(),
                    }),
                });
                return false;
            }
        }
        if self.is_nominal() {
            return true;
        }
        let dt = to - from;
        let (gs, gr) = (&ctx.budget.srp_gm, &ctx.budget.resid_gm);
        let (fs, fr) = (gs.decay(dt), gr.decay(dt));
        let (ns, nr) = (
            gs.process_variance(dt).sqrt(),
            gr.process_variance(dt).sqrt(),
        );
        for i in 0..3 {
            let a: f64 = self.gm_rng.sample(StandardNormal);
            let b: f64 = self.gm_rng.sample(StandardNormal);
            self.srp[i] = self.srp[i] * fs + ns * a;
            self.res[i] = self.res[i] * fr + nr * b;
        }
        true
    }

    /// Flies arc `i`: impulse at its first node, then propagation to the
    /// next node with orbit determination at every cut-off passed.
    fn fly_arc(&mut self, i: usize, ctx: &Context) {
        if self.termination.is_some() {
            return;
        }
        let mut dv = ctx.plan.nodes[i].dv;
        if !self.is_nominal() {
            if let Some((stm, duration)) = &ctx.target[i] {
                dv += self.correct(i, Some(stm), *duration, &ctx.cfg.guidance);
            }
        }
        self.impulse(dv, ctx.budget);
        for k in ctx.node_index[i] + 1..=ctx.node_index[i + 1] {
            if !self.step(ctx.grid[k], ctx) {
                return;
            }
            self.truth.push(self.state.clone());
            if self.is_nominal() {
                continue;
            }
            for &n in &ctx.cut_at[k] {
                let Some((sqrt, stm)) = &ctx.cut[n] else {
                    continue;
                };
                let mut dev = self.state.to_vector() - ctx.reference[k].to_vector();
                if !ctx.cfg.perfect_knowledge {
                    let z = Vector6::from_fn(|_, _| self.od_rng.sample::<f64, _>(StandardNormal));
                    dev += sqrt * z;
                }
                self.estimates[n] = Some(stm.phi * dev);
            }
        }
    }

    /// Optional velocity-nulling impulse at the final node.
    fn finish(&mut self, ctx: &Context) {
        let last = ctx.plan.nodes.len() - 1;
        if self.termination.is_none() && !self.is_nominal() && ctx.cfg.guidance.apply_final_impulse
        {
            let dv = self.correct(last, None, 0.0, &ctx.cfg.guidance);
            self.impulse(dv, ctx.budget);
        }
    }

    fn into_run(self, reference: &[StateVector]) -> SampleRun {
        let dispersion = self
            .truth
            .iter()
            .zip(reference)
            .map(|(t, n)| (t.r - n.r).norm())
            .collect();
        SampleRun {
            seed: self.index,
            truth: self.truth,
            corrections: self.corrections,
            dispersion,
            termination: self.termination,
            nav_cost: self.nav_cost,
        }
    }
}

impl<'a> Context<'a> {
    pub fn new(
        plan: &'a TrajectoryPlan,
        knowledge: &KnowledgeTimeline,
        budget: &'a UncertaintyBudget,
        cfg: &'a DispersionConfig,
        dynamics: &'a Dynamics,
        prop: &'a PropagationOptions,
    ) -> Result<Self> {
        cfg.validate()?;
        budget.validate()?;
        let nodes = &plan.nodes;
        let n_nodes = nodes.len();
        let last = n_nodes - 1;
        let commanded = plan.commanded_nodes();
        let mut cut_epoch: Vec<Option<(Epoch, &Matrix6<f64>)>> = vec![None; n_nodes];
        for c in &knowledge.cutoffs {
            if c.node >= n_nodes || c.epoch < plan.start_epoch() || c.epoch > nodes[c.node].epoch {
                return Err(Error::Config(format!(
                    "knowledge cut-off for node {} does not match the plan",
                    c.node
                )));
            }
            cut_epoch[c.node] = Some((c.epoch, &c.covariance));
        }
        // Corrections at every node with a cut-off; at zero-impulse nodes
        // only when enabled. The final node only by the optional impulse.
        let corrects: Vec<bool> = (0..n_nodes)
            .map(|i| {
                i > 0
                    && i < last
                    && cut_epoch[i].is_some()
                    && (commanded.contains(&i) || cfg.correct_at_mid_nodes)
            })
            .collect();
        if corrects.iter().all(|c| !c) && n_nodes > 2 {
            warn!("no correction opportunity: knowledge has no usable cut-off");
        }
        let mut observed = corrects.clone();
        observed[last] = cut_epoch[last].is_some();

        let step = cfg.step_h * HOUR;
        let mut marks: Vec<Epoch> = nodes.iter().map(|n| n.epoch).collect();
        marks.extend(
            (0..n_nodes)
                .filter(|&i| observed[i])
                .filter_map(|i| cut_epoch[i].map(|c| c.0)),
        );
        let (t0, tf) = (plan.start_epoch(), nodes[last].epoch);
        marks.extend((1..).map(|k| t0 + k as f64 * step).take_while(|t| *t < tf));
        marks.sort();
        let mut grid: Vec<Epoch> = Vec::new();
        for t in marks {
            match grid.last() {
                // Hourly epochs within a millisecond of an event merge into it.
                Some(p) if (t - *p).abs() < 1e-3 => {}
                _ => grid.push(t),
            }
        }
        let index_of = |t: Epoch| {
            grid.iter()
                .enumerate()
                .min_by(|a, b| (*a.1 - t).abs().total_cmp(&(*b.1 - t).abs()))
                .map(|(k, _)| k)
                .unwrap_or(0)
        };
        let node_index: Vec<usize> = nodes.iter().map(|n| index_of(n.epoch)).collect();
        let mut cut_at = vec![Vec::new(); grid.len()];
        let mut cut_index = vec![None; n_nodes];
        for i in 0..n_nodes {
            if let (true, Some((t, _))) = (observed[i], cut_epoch[i]) {
                let k = index_of(t);
                // A cut-off before the start of the walk is never reached.
                if k > 0 {
                    cut_at[k].push(i);
                    cut_index[i] = Some(k);
                }
            }
        }
        for i in 0..n_nodes {
            grid[node_index[i]] = nodes[i].epoch;
        }

        let mut ctx = Self {
            plan,
            dynamics,
            prop,
            budget,
            cfg,
            grid,
            node_index,
            cut_at,
            cut: vec![None; n_nodes],
            target: vec![None; n_nodes],
            reference: Vec::new(),
        };
        // State just before the first impulse.
        let start = StateVector::new(
            nodes[0].position,
            plan.departure_state(0).v - nodes[0].dv,
            t0,
        );
        let mut nominal = Walker::nominal(&start, n_nodes);
        for i in 0..last {
            nominal.fly_arc(i, &ctx);
            if let Some(t) = &nominal.termination {
                return Err(Error::Numerical(format!(
                    "nominal trajectory stopped at t = {:.0} s: {:?}",
                    t.epoch.seconds(),
                    t.kind
                )));
            }
        }
        ctx.reference = nominal.truth;
        for i in 0..n_nodes {
            if let (Some(k), Some((_, p))) = (cut_index[i], cut_epoch[i]) {
                let t = ctx.grid[ctx.node_index[i]];
                let stm = propagate_with_stm(&ctx.reference[k], t, dynamics, prop)?.1;
                ctx.cut[i] = Some((psd_sqrt(p), stm));
            }
            if corrects[i] && ctx.cut[i].is_some() {
                let next = commanded.iter().copied().find(|&c| c > i).unwrap_or(last);
                let mut s = ctx.reference[ctx.node_index[i]].clone();
                s.v += nodes[i].dv;
                let t = ctx.grid[ctx.node_index[next]];
                let stm = propagate_with_stm(&s, t, dynamics, prop)?.1;
                ctx.target[i] = Some((stm, t - s.epoch));
            }
        }
        Ok(ctx)
    }

    pub fn n_arcs(&self) -> usize {
        self.plan.nodes.len() - 1
    }

    fn walker(&self, index: u64) -> Walker {
        Walker::new(self, index)
    }
}

/// Samples of a run, flown arc by arc in parallel.
pub(crate) struct Fleet {
    walkers: Vec<Walker>,
}

impl Fleet {
    pub fn new(ctx: &Context, indices: impl Iterator<Item = u64>) -> Self {
        Self {
            walkers: indices.map(|i| ctx.walker(i)).collect(),
        }
    }

    pub fn fly_arc(&mut self, i: usize, ctx: &Context) {
        use rayon::prelude::*;
        self.walkers.par_iter_mut().for_each(|w| w.fly_arc(i, ctx));
    }

    pub fn finish(&mut self, ctx: &Context) {
        for w in &mut self.walkers {
            w.finish(ctx);
        }
    }

    pub fn collided(&self) -> usize {
        self.walkers
            .iter()
            .filter(|w| {
                matches!(
                    w.termination,
                    Some(Termination {
                        kind: TerminationKind::Collision { .. },
                        ..
                    })
                )
            })
            .count()
    }

    pub fn into_runs(self, reference: &[StateVector]) -> Vec<SampleRun> {
        self.walkers
            .into_iter()
            .map(|w| w.into_run(reference))
            .collect()
    }
}

/// Simulates one sample through the whole plan, without early stop.
pub fn simulate_sample(
    plan: &TrajectoryPlan,
    knowledge: &KnowledgeTimeline,
    budget: &UncertaintyBudget,
    cfg: &DispersionConfig,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
    seed: u64,
) -> Result<SampleRun> {
    let ctx = Context::new(plan, knowledge, budget, cfg, dynamics, prop)?;
    let mut w = ctx.walker(seed);
    for i in 0..ctx.n_arcs() {
        w.fly_arc(i, &ctx);
    }
    w.finish(&ctx);
    Ok(w.into_run(&ctx.reference))
}
