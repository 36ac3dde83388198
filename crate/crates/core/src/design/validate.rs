use serde::{Deserialize, Serialize};

use super::plan::TrajectoryPlan;
use crate::dynamics::{
    asteroid_states, body_position, phase_angle, propagate, propagate_dense, Body, Dynamics, Epoch,
    PropagationOptions, HOUR,
};

/// Operational and science constraints checked on a plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constraints {
    /// Shortest time between commanded maneuvers [h].
    pub min_arc_hours: f64,
    /// Allowed distance of a key point from its target [m].
    pub keypoint_distance_band: [f64; 2],
    /// Allowed phase angles at key points [deg]; any band may be met.
    pub keypoint_phase_bands: Vec<[f64; 2]>,
    /// Largest phase angle with respect to the primary counted as day side [deg].
    pub day_side_max_phase: f64,
    pub collision_radius_d1: f64,
    pub collision_radius_d2: f64,
    /// Range to the primary below which the infrared camera saturates [m].
    pub nir_saturation_range: f64,
    /// Sampling interval of the dense checks [s].
    pub sample_step: f64,
}

impl Default for Constraints {
    fn default() -> Self {
        Self {
            min_arc_hours: 48.0,
            keypoint_distance_band: [2780.0, 4572.0],
            keypoint_phase_bands: vec![[0.0, 10.0], [30.0, 60.0]],
            day_side_max_phase: 90.0,
            collision_radius_d1: 400.0,
            collision_radius_d2: 100.0,
            nir_saturation_range: 1960.0,
            sample_step: 600.0,
        }
    }
}

impl Constraints {
    pub fn collision_radius(&self, body: Body) -> f64 {
        match body {
            Body::Primary => self.collision_radius_d1,
            Body::Secondary => self.collision_radius_d2,
        }
    }

    pub fn phase_ok(&self, phase: f64) -> bool {
        self.keypoint_phase_bands
            .iter()
            .any(|[lo, hi]| (*lo..=*hi).contains(&phase))
    }

    pub fn distance_ok(&self, distance: f64) -> bool {
        let [lo, hi] = self.keypoint_distance_band;
        (lo..=hi).contains(&distance)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    NightSide,
    ShortArc,
    KeypointDistance,
    KeypointPhase,
    Collision,
    NirSaturation,
    Propagation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub arc: Option<usize>,
    /// [days]
    pub epoch_days: Option<f64>,
    pub detail: String,
}

/// Key point as actually flown.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeypointCheck {
    pub arc: usize,
    pub epoch_days: f64,
    pub target: Body,
    pub distance: f64,
    pub phase_angle: f64,
    pub distance_ok: bool,
    pub phase_ok: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub hard: Vec<Violation>,
    pub soft: Vec<Violation>,
    pub min_range_d1: f64,
    pub min_range_d2: f64,
    pub max_phase_d1: f64,
    /// Shortest time between commanded maneuvers [h].
    pub min_arc_hours: f64,
    pub keypoints: Vec<KeypointCheck>,
}

impl ConstraintReport {
    pub fn is_compliant(&self) -> bool {
        self.hard.is_empty()
    }
}

/// Checks a plan against the constraints along its dense trajectory.
/// Problems are reported, never raised.
pub fn validate_plan(
    plan: &TrajectoryPlan,
    dynamics: &Dynamics,
    constraints: &Constraints,
    prop: &PropagationOptions,
) -> ConstraintReport {
    let sys = &dynamics.sys;
    let mut report = ConstraintReport {
        min_range_d1: f64::INFINITY,
        min_range_d2: f64::INFINITY,
        min_arc_hours: f64::INFINITY,
        ..Default::default()
    };

    let commanded: Vec<Epoch> = plan
        .nodes
        .iter()
        .filter(|n| n.commanded)
        .map(|n| n.epoch)
        .collect();
    for (k, w) in commanded.windows(2).enumerate() {
        let hours = (w[1] - w[0]) / HOUR;
        report.min_arc_hours = report.min_arc_hours.min(hours);
        if hours < constraints.min_arc_hours {
            report.hard.push(Violation {
                kind: ViolationKind::ShortArc,
                arc: Some(k),
                epoch_days: Some(w[0].days()),
                detail: format!(
                    "{hours:.2} h between maneuvers, minimum {:.2} h",
                    constraints.min_arc_hours
                ),
            });
        }
    }

    for (i, arc) in plan.arcs.iter().enumerate() {
        let start = plan.departure_state(i);
        let traj = match propagate_dense(
            &start,
            arc.end_epoch,
            dynamics,
            prop,
            constraints.sample_step,
        ) {
            Ok(t) => t,
            Err(e) => {
                report.hard.push(Violation {
                    kind: ViolationKind::Propagation,
                    arc: Some(i),
                    epoch_days: Some(arc.start.epoch.days()),
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let mut worst_phase: Option<(f64, Epoch)> = None;
        let mut closest = [(f64::INFINITY, Epoch::ZERO); 2];
        for s in &traj.samples {
            let (r1, r2) = asteroid_states(s.epoch, sys);
            for (slot, pos) in closest.iter_mut().zip([r1, r2]) {
                let d = (s.r - pos).norm();
                if d < slot.0 {
                    *slot = (d, s.epoch);
                }
            }
            if let Ok(phase) = phase_angle(&s.r, s.epoch, Body::Primary, sys) {
                report.max_phase_d1 = report.max_phase_d1.max(phase);
                if phase >= constraints.day_side_max_phase
                    && worst_phase.is_none_or(|(p, _)| phase > p)
                {
                    worst_phase = Some((phase, s.epoch));
                }
            }
        }
        if let Some((phase, t)) = worst_phase {
            report.hard.push(Violation {
                kind: ViolationKind::NightSide,
                arc: Some(i),
                epoch_days: Some(t.days()),
                detail: format!("phase angle to D1 reaches {phase:.2} deg"),
            });
        }
        report.min_range_d1 = report.min_range_d1.min(closest[0].0);
        report.min_range_d2 = report.min_range_d2.min(closest[1].0);
        for (body, (d, t)) in [Body::Primary, Body::Secondary].into_iter().zip(closest) {
            let radius = constraints.collision_radius(body);
            if d < radius {
                report.hard.push(Violation {
                    kind: ViolationKind::Collision,
                    arc: Some(i),
                    epoch_days: Some(t.days()),
                    detail: format!("{d:.1} m from {body}, inside the {radius:.0} m keep-out"),
                });
            }
        }
        if closest[0].0 < constraints.nir_saturation_range {
            report.soft.push(Violation {
                kind: ViolationKind::NirSaturation,
                arc: Some(i),
                epoch_days: Some(closest[0].1.days()),
                detail: format!(
                    "{:.1} m from D1, infrared camera saturates below {:.0} m",
                    closest[0].0, constraints.nir_saturation_range
                ),
            });
        }

        if let Some(kp) = &arc.keypoint {
            let flown = match propagate(&start, kp.epoch, dynamics, prop) {
                Ok(s) => s,
                Err(e) => {
                    report.hard.push(Violation {
                        kind: ViolationKind::Propagation,
                        arc: Some(i),
                        epoch_days: Some(kp.epoch.days()),
                        detail: e.to_string(),
                    });
                    continue;
                }
            };
            let distance = (flown.r - body_position(kp.target, kp.epoch, sys)).norm();
            let phase = phase_angle(&flown.r, kp.epoch, kp.target, sys).unwrap_or(f64::NAN);
            let check = KeypointCheck {
                arc: i,
                epoch_days: kp.epoch.days(),
                target: kp.target,
                distance,
                phase_angle: phase,
                distance_ok: constraints.distance_ok(distance),
                phase_ok: constraints.phase_ok(phase),
            };
            if !check.distance_ok {
                report.hard.push(Violation {
                    kind: ViolationKind::KeypointDistance,
                    arc: Some(i),
                    epoch_days: Some(check.epoch_days),
                    detail: format!("key point {distance:.1} m from {}", kp.target),
                });
            }
            if !check.phase_ok {
                report.hard.push(Violation {
                    kind: ViolationKind::KeypointPhase,
                    arc: Some(i),
                    epoch_days: Some(check.epoch_days),
                    detail: format!("key point phase angle {phase:.2} deg"),
                });
            }
            report.keypoints.push(check);
        }
    }
    report
}
