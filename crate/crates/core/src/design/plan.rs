use std::fmt;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::keypoint::{make_keypoint, KeyPoint};
use super::shooting::{solve_arc, ShootingOptions};
use crate::dynamics::{propagate, Body, Dynamics, Epoch, StateVector, DAY};
use crate::error::{Error, Result};

/// Which trajectory concept a plan implements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionLabel {
    A,
    B,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for OptionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptionLabel::A => f.write_str("A"),
            OptionLabel::B => f.write_str("B"),
            OptionLabel::Custom => f.write_str("custom"),
        }
    }
}

impl std::str::FromStr for OptionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(OptionLabel::A),
            "B" | "b" => Ok(OptionLabel::B),
            "custom" => Ok(OptionLabel::Custom),
            other => Err(Error::Config(format!("unknown plan option {other:?}"))),
        }
    }
}

/// Long arcs are flown as two ballistic sub-arcs joined by a node that
/// carries no nominal impulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRule {
    /// Arcs at least this long are split [days].
    pub min_duration_days: f64,
    /// Duration of the first sub-arc [days].
    pub first_days: f64,
}

/// Key point requested on a maneuver arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeypointSpec {
    /// Index of the maneuver arc.
    pub arc: usize,
    pub epoch_days: f64,
    pub target: Body,
    pub distance_m: f64,
    pub phase_deg: f64,
    #[serde(default)]
    pub azimuth_deg: f64,
}

/// Departure velocity used as the first shooting guess for one arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcGuess {
    pub arc: usize,
    pub v0_mps: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub position_m: [f64; 3],
}

/// Node set a plan is built from. Positions are barycentric ecliptic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSet {
    pub label: OptionLabel,
    /// Loop plans return to the first node after the last arc.
    #[serde(default = "yes")]
    pub closed: bool,
    #[serde(default)]
    pub start_epoch_days: f64,
    /// Durations between commanded maneuvers [days].
    pub pattern_days: Vec<f64>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub split: Option<SplitRule>,
    #[serde(default)]
    pub keypoints: Vec<KeypointSpec>,
    #[serde(default)]
    pub guesses: Vec<ArcGuess>,
}

fn yes() -> bool {
    true
}

impl NodeSet {
    /// Epochs of the commanded nodes, including the final one.
    pub fn epochs(&self) -> Vec<Epoch> {
        let mut t = self.start_epoch_days;
        let mut out = vec![Epoch::from_days(t)];
        for d in &self.pattern_days {
            t += d;
            out.push(Epoch::from_days(t));
        }
        out
    }

    /// Positions of the commanded nodes, including the final one.
    pub fn positions(&self) -> Vec<Vector3<f64>> {
        let mut out: Vec<Vector3<f64>> = self
            .nodes
            .iter()
            .map(|n| Vector3::from(n.position_m))
            .collect();
        if self.closed {
            if let Some(first) = out.first().copied() {
                out.push(first);
            }
        }
        out
    }

    pub fn check(&self) -> Result<()> {
        let expected = self.pattern_days.len() + usize::from(!self.closed);
        if self.pattern_days.is_empty() {
            return Err(Error::Config("node set has no arcs".into()));
        }
        if self.nodes.len() != expected {
            return Err(Error::Config(format!(
                "{} arcs need {expected} node positions, found {}",
                self.pattern_days.len(),
                self.nodes.len()
            )));
        }
        if let Some(d) = self.pattern_days.iter().find(|d| !(**d > 0.0)) {
            return Err(Error::Config(format!(
                "arc duration {d} days is not positive"
            )));
        }
        if let Some(s) = &self.split {
            if !(s.first_days > 0.0 && s.first_days < s.min_duration_days) {
                return Err(Error::Config(
                    "split sub-arc must be shorter than the split threshold".into(),
                ));
            }
        }
        for k in &self.keypoints {
            if k.arc >= self.pattern_days.len() {
                return Err(Error::Config(format!("key point on missing arc {}", k.arc)));
            }
        }
        Ok(())
    }
}

/// Node joining two ballistic arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManeuverNode {
    pub epoch: Epoch,
    pub position: Vector3<f64>,
    /// Nominal impulse applied here [m/s].
    pub dv: Vector3<f64>,
    /// False for the zero-impulse node inside a split arc.
    pub commanded: bool,
}

/// One ballistic arc of a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: ManeuverNode,
    pub end_epoch: Epoch,
    pub end_position: Vector3<f64>,
    /// [days]
    pub duration: f64,
    pub keypoint: Option<KeyPoint>,
    /// Velocity just after the start node [m/s].
    pub v0: Vector3<f64>,
    /// Velocity on arrival at the end node [m/s].
    pub v1: Vector3<f64>,
    /// Miss distance of the arc at its end node [m].
    pub residual: f64,
    /// Index of the maneuver arc this (sub-)arc belongs to.
    pub maneuver_arc: usize,
}

/// Patched sequence of ballistic arcs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPlan {
    pub option_label: OptionLabel,
    pub closed: bool,
    /// Durations between commanded maneuvers [days].
    pub pattern: Vec<f64>,
    /// Start nodes of every arc followed by the final node.
    pub nodes: Vec<ManeuverNode>,
    pub arcs: Vec<Arc>,
    pub total_dv: f64,
}

impl TrajectoryPlan {
    pub fn start_epoch(&self) -> Epoch {
        self.nodes[0].epoch
    }

    pub fn end_epoch(&self) -> Epoch {
        self.nodes[self.nodes.len() - 1].epoch
    }

    /// State just after the impulse at the start of arc `i`.
    pub fn departure_state(&self, i: usize) -> StateVector {
        let arc = &self.arcs[i];
        StateVector::new(arc.start.position, arc.v0, arc.start.epoch)
    }

    /// Index of the arc flown at `t` (the later one at node epochs).
    pub fn arc_at(&self, t: Epoch) -> usize {
        self.arcs
            .iter()
            .rposition(|a| a.start.epoch <= t)
            .unwrap_or(0)
    }

    /// Indices into `nodes` of the commanded maneuvers, final node included.
    pub fn commanded_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].commanded)
            .collect()
    }
}

/// Sum of the nominal impulse magnitudes, closure included [m/s].
pub fn plan_total_dv(plan: &TrajectoryPlan) -> f64 {
    plan.nodes.iter().map(|n| n.dv.norm()).sum()
}

/// Solves every arc of a node set and patches the impulses.
pub fn build_plan(
    set: &NodeSet,
    dynamics: &Dynamics,
    opts: &ShootingOptions,
) -> Result<TrajectoryPlan> {
    set.check()?;
    let epochs = set.epochs();
    let positions = set.positions();
    let n = set.pattern_days.len();

    let solutions: Vec<_> = (0..n)
        .into_par_iter()
        .map(|k| {
            let guess = set
                .guesses
                .iter()
                .find(|g| g.arc == k)
                .map(|g| Vector3::from(g.v0_mps));
            solve_arc(
                &positions[k],
                &positions[k + 1],
                epochs[k],
                epochs[k + 1],
                dynamics,
                opts,
                guess,
            )
            .map_err(|e| e.in_arc(k))
        })
        .collect();

    let mut arcs = Vec::new();
    for (k, sol) in solutions.into_iter().enumerate() {
        let sol = sol?;
        let (t0, t1) = (epochs[k], epochs[k + 1]);
        let node = |epoch, position, commanded| ManeuverNode {
            epoch,
            position,
            dv: Vector3::zeros(),
            commanded,
        };
        let split_at = set
            .split
            .as_ref()
            .filter(|s| set.pattern_days[k] >= s.min_duration_days)
            .map(|s| t0 + s.first_days * DAY);
        match split_at {
            None => arcs.push(Arc {
                start: node(t0, positions[k], true),
                end_epoch: t1,
                end_position: positions[k + 1],
                duration: (t1 - t0) / DAY,
                keypoint: None,
                v0: sol.v0,
                v1: sol.v1,
                residual: sol.residual,
                maneuver_arc: k,
            }),
            Some(tm) => {
                let prop = &opts.propagation;
                let mid = propagate(
                    &StateVector::new(positions[k], sol.v0, t0),
                    tm,
                    dynamics,
                    prop,
                )
                .map_err(|e| e.in_arc(k))?;
                let end = propagate(&mid, t1, dynamics, prop).map_err(|e| e.in_arc(k))?;
                arcs.push(Arc {
                    start: node(t0, positions[k], true),
                    end_epoch: tm,
                    end_position: mid.r,
                    duration: (tm - t0) / DAY,
                    keypoint: None,
                    v0: sol.v0,
                    v1: mid.v,
                    residual: 0.0,
                    maneuver_arc: k,
                });
                arcs.push(Arc {
                    start: node(tm, mid.r, false),
                    end_epoch: t1,
                    end_position: positions[k + 1],
                    duration: (t1 - tm) / DAY,
                    keypoint: None,
                    v0: mid.v,
                    v1: end.v,
                    residual: (end.r - positions[k + 1]).norm(),
                    maneuver_arc: k,
                });
            }
        }
    }

    for spec in &set.keypoints {
        let epoch = Epoch::from_days(spec.epoch_days);
        let kp = make_keypoint(
            epoch,
            spec.target,
            spec.distance_m,
            spec.phase_deg,
            spec.azimuth_deg,
            true,
            &dynamics.sys,
        )?;
        let Some(arc) = arcs
            .iter_mut()
            .find(|a| a.maneuver_arc == spec.arc && a.start.epoch <= epoch && epoch <= a.end_epoch)
        else {
            return Err(Error::Config(format!(
                "key point at day {} lies outside maneuver arc {}",
                spec.epoch_days, spec.arc
            )));
        };
        arc.keypoint = Some(kp);
    }

    // Patch the impulses; nodes inside split arcs keep an exactly zero one.
    for i in 1..arcs.len() {
        if arcs[i].start.commanded {
            arcs[i].start.dv = arcs[i].v0 - arcs[i - 1].v1;
        }
    }
    if set.closed {
        let last = arcs[arcs.len() - 1].v1;
        arcs[0].start.dv = arcs[0].v0 - last;
    }
    let mut nodes: Vec<ManeuverNode> = arcs.iter().map(|a| a.start.clone()).collect();
    let last = &arcs[arcs.len() - 1];
    nodes.push(ManeuverNode {
        epoch: last.end_epoch,
        position: last.end_position,
        dv: Vector3::zeros(),
        commanded: true,
    });
    let mut plan = TrajectoryPlan {
        option_label: set.label,
        closed: set.closed,
        pattern: set.pattern_days.clone(),
        nodes,
        arcs,
        total_dv: 0.0,
    };
    plan.total_dv = plan_total_dv(&plan);
    Ok(plan)
}
