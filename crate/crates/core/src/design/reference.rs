//! Construction of the reference node sets for the two loop concepts.
//!
//! Far nodes are placed on the day side at a given range and direction in
//! the Sun-South frame of their epoch. An arc that carries a key point is
//! built in one of two ways:
//! - targeted: solved from its (far) start node to the key point, which
//!   sits a chosen lead time before the arc's end; the end node is where
//!   the ballistic continuation is at the end epoch. Optionally the
//!   key-point epoch is shifted back to the moment the secondary reaches a
//!   chosen angle around the primary.
//! - passed: the state at the key point is given, and both end nodes follow
//!   from propagating it backward and forward, so the arc flies through the
//!   key point with no impulse nearby.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::keypoint::make_keypoint;
use super::plan::{ArcGuess, KeypointSpec, NodeSet, NodeSpec, OptionLabel, SplitRule};
use super::shooting::{solve_arc, ShootingOptions};
use crate::dynamics::{
    asteroid_states, propagate, sun_south_rotation, Body, Dynamics, Epoch, StateVector, DAY, HOUR,
};
use crate::error::{Error, Result};

/// Day-side node given in the Sun-South frame of its epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarNode {
    pub range_m: f64,
    /// Angle from the Sun-South x axis [deg].
    pub off_axis_deg: f64,
    /// Angle around the x axis, from +y toward +z (south) [deg].
    pub clock_deg: f64,
}

/// Key point to be flown near the end of a maneuver arc.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeypointPlacement {
    pub arc: usize,
    /// Nominal time between key point and arc end [h].
    pub lead_hours: f64,
    pub target: Body,
    pub distance_m: f64,
    pub phase_deg: f64,
    pub azimuth_deg: f64,
    /// Sun-South azimuth of the secondary at the key point [deg]. When set,
    /// the key point moves back to the latest epoch with that geometry.
    pub secondary_angle_deg: Option<f64>,
    /// Fly through the key point ballistically instead of targeting it.
    #[serde(default)]
    pub pass: Option<KeypointPass>,
}

/// Velocity at a passed key point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeypointPass {
    /// Key-point epoch after the arc start [h].
    pub offset_hours: f64,
    pub speed_mps: f64,
    /// Direction across the barycentric radius, from the pole-normal axis
    /// toward the pole-facing one [deg].
    pub heading_deg: f64,
    /// Elevation of the velocity above the plane normal to the radius,
    /// outward positive [deg].
    pub flight_path_deg: f64,
}

impl KeypointPass {
    fn velocity(&self, position: &Vector3<f64>, pole: &Vector3<f64>) -> Result<Vector3<f64>> {
        let radial = position.normalize();
        let e1 = pole.cross(&radial);
        if e1.norm() < 1e-9 {
            return Err(Error::DegenerateFrame);
        }
        let e1 = e1.normalize();
        let e2 = radial.cross(&e1);
        let (sh, ch) = self.heading_deg.to_radians().sin_cos();
        let (sg, cg) = self.flight_path_deg.to_radians().sin_cos();
        Ok(((e1 * ch + e2 * sh) * cg + radial * sg) * self.speed_mps)
    }
}

/// Recipe for a reference node set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceDesign {
    pub label: OptionLabel,
    pub start_epoch_days: f64,
    pub pattern_days: Vec<f64>,
    pub split: Option<SplitRule>,
    /// One entry per node; `None` marks nodes set by a key-point arc.
    pub far_nodes: Vec<Option<FarNode>>,
    pub keypoints: Vec<KeypointPlacement>,
}

fn far(range_km: f64, off_axis_deg: f64, clock_deg: f64) -> Option<FarNode> {
    Some(FarNode {
        range_m: range_km * 1e3,
        off_axis_deg,
        clock_deg,
    })
}

impl ReferenceDesign {
    /// Eight-node loop of alternating three- and four-day arcs. Every
    /// three-day arc dives to a key point close to the secondary while the
    /// secondary is behind the primary.
    pub fn option_a() -> Self {
        let keypoint = |arc| KeypointPlacement {
            arc,
            lead_hours: 0.0,
            target: Body::Secondary,
            distance_m: 3600.0,
            phase_deg: 7.0,
            azimuth_deg: 0.0,
            secondary_angle_deg: None,
            pass: None,
        };
        Self {
            label: OptionLabel::A,
            start_epoch_days: 0.0,
            pattern_days: [3.0, 4.0].repeat(4),
            split: None,
            far_nodes: vec![
                far(11.0, 65.0, 0.0),
                None,
                far(11.0, 65.0, 180.0),
                None,
                far(11.0, 65.0, 90.0),
                None,
                far(11.0, 65.0, 270.0),
                None,
            ],
            keypoints: [0, 2, 4, 6].into_iter().map(keypoint).collect(),
        }
    }

    /// Six-node loop; the two key points end the seven-day arcs that lead
    /// into the four- and three-day arcs, so the mid-arc node offers a
    /// correction before each approach.
    pub fn option_b() -> Self {
        let keypoint = |arc| KeypointPlacement {
            arc,
            lead_hours: 0.0,
            target: Body::Secondary,
            distance_m: 4400.0,
            phase_deg: 7.0,
            azimuth_deg: 0.0,
            secondary_angle_deg: None,
            pass: None,
        };
        Self {
            label: OptionLabel::B,
            start_epoch_days: 0.0,
            pattern_days: vec![7.0, 4.0, 7.0, 7.0, 3.0, 7.0],
            split: Some(SplitRule {
                min_duration_days: 7.0,
                first_days: 3.0,
            }),
            far_nodes: vec![
                far(12.0, 60.0, 0.0),
                None,
                far(12.0, 60.0, 180.0),
                far(12.0, 60.0, 90.0),
                None,
                far(12.0, 60.0, 270.0),
            ],
            keypoints: [0, 3].into_iter().map(keypoint).collect(),
        }
    }

    pub fn for_option(label: OptionLabel) -> Result<Self> {
        match label {
            OptionLabel::A => Ok(Self::option_a()),
            OptionLabel::B => Ok(Self::option_b()),
            OptionLabel::Custom => Err(Error::Config(
                "custom plans are read from a node file, not constructed".into(),
            )),
        }
    }
}

/// Sun-South azimuth of the secondary [rad].
fn secondary_angle(t: Epoch, dynamics: &Dynamics) -> Result<f64> {
    let rot = sun_south_rotation(t, &dynamics.sys)?;
    let (_, r2) = asteroid_states(t, &dynamics.sys);
    let p = rot * r2;
    Ok(p.y.atan2(p.x))
}

/// Latest epoch not after `t` at which the secondary is at `angle_deg`.
fn align_secondary(t: Epoch, angle_deg: f64, dynamics: &Dynamics) -> Result<Epoch> {
    let rate = dynamics.sys.mutual_rate();
    let target = angle_deg.to_radians();
    let mut epoch = t;
    // The frame turns slowly, so a few fixed-point passes converge.
    for _ in 0..6 {
        let lag = (secondary_angle(epoch, dynamics)? - target).rem_euclid(std::f64::consts::TAU);
        epoch += -lag / rate;
        if lag < 1e-12 || (std::f64::consts::TAU - lag) < 1e-12 {
            break;
        }
        if epoch < t + -dynamics.sys.mutual_period() * 1.5 {
            epoch = t;
        }
    }
    Ok(epoch)
}

/// Builds the node set described by `design`.
pub fn construct(
    design: &ReferenceDesign,
    dynamics: &Dynamics,
    opts: &ShootingOptions,
) -> Result<NodeSet> {
    let n = design.pattern_days.len();
    if design.far_nodes.len() != n {
        return Err(Error::Config(format!(
            "reference design has {} node entries for {n} arcs",
            design.far_nodes.len()
        )));
    }
    let mut epochs = vec![Epoch::from_days(design.start_epoch_days)];
    for d in &design.pattern_days {
        let last = epochs[epochs.len() - 1];
        epochs.push(last + d * DAY);
    }
    let mut positions: Vec<Option<Vector3<f64>>> = vec![None; n];
    for (k, node) in design.far_nodes.iter().enumerate() {
        if let Some(f) = node {
            let (psi, chi) = (f.off_axis_deg.to_radians(), f.clock_deg.to_radians());
            let local =
                Vector3::new(psi.cos(), psi.sin() * chi.cos(), psi.sin() * chi.sin()) * f.range_m;
            positions[k] = Some(sun_south_rotation(epochs[k], &dynamics.sys)?.transpose() * local);
        }
    }

    let mut keypoints = Vec::new();
    let mut guesses = Vec::new();
    for kp in &design.keypoints {
        let k = kp.arc;
        if k >= n {
            return Err(Error::Config(format!("key point on missing arc {k}")));
        }
        let end_index = (k + 1) % n;
        if let Some(pass) = &kp.pass {
            if positions[k].is_some() || positions[end_index].is_some() {
                return Err(Error::Config(format!(
                    "passed key point on arc {k} needs two free nodes"
                )));
            }
            let t_kp = epochs[k] + pass.offset_hours * HOUR;
            if !(t_kp > epochs[k] && t_kp < epochs[k + 1]) {
                return Err(Error::Config(format!(
                    "passed key point on arc {k} lies outside the arc"
                )));
            }
            let point = make_keypoint(
                t_kp,
                kp.target,
                kp.distance_m,
                kp.phase_deg,
                kp.azimuth_deg,
                true,
                &dynamics.sys,
            )?;
            let state = StateVector::new(
                point.position,
                pass.velocity(&point.position, &dynamics.sys.pole)?,
                t_kp,
            );
            let start = propagate(&state, epochs[k], dynamics, &opts.propagation)
                .map_err(|e| e.in_arc(k))?;
            let end = propagate(&state, epochs[k + 1], dynamics, &opts.propagation)
                .map_err(|e| e.in_arc(k))?;
            positions[k] = Some(start.r);
            positions[end_index] = Some(end.r);
            guesses.push(ArcGuess {
                arc: k,
                v0_mps: start.v.into(),
            });
            keypoints.push(KeypointSpec {
                arc: k,
                epoch_days: t_kp.days(),
                target: kp.target,
                distance_m: kp.distance_m,
                phase_deg: kp.phase_deg,
                azimuth_deg: kp.azimuth_deg,
            });
            continue;
        }
        let Some(start) = positions[k] else {
            return Err(Error::Config(format!(
                "key-point arc {k} must start at a far node"
            )));
        };
        if positions[end_index].is_some() {
            return Err(Error::Config(format!(
                "key-point arc {k} must end at a free node"
            )));
        }
        let nominal = epochs[k + 1] + -kp.lead_hours * HOUR;
        let t_kp = match kp.secondary_angle_deg {
            Some(angle) => align_secondary(nominal, angle, dynamics)?,
            None => nominal,
        };
        let point = make_keypoint(
            t_kp,
            kp.target,
            kp.distance_m,
            kp.phase_deg,
            kp.azimuth_deg,
            true,
            &dynamics.sys,
        )?;
        let sol = solve_arc(
            &start,
            &point.position,
            epochs[k],
            t_kp,
            dynamics,
            opts,
            None,
        )
        .map_err(|e| e.in_arc(k))?;
        let end = propagate(
            &StateVector::new(point.position, sol.v1, t_kp),
            epochs[k + 1],
            dynamics,
            &opts.propagation,
        )
        .map_err(|e| e.in_arc(k))?;
        positions[end_index] = Some(end.r);
        guesses.push(ArcGuess {
            arc: k,
            v0_mps: sol.v0.into(),
        });
        keypoints.push(KeypointSpec {
            arc: k,
            epoch_days: t_kp.days(),
            target: kp.target,
            distance_m: kp.distance_m,
            phase_deg: kp.phase_deg,
            azimuth_deg: kp.azimuth_deg,
        });
    }

    let nodes = positions
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            p.map(|p| NodeSpec {
                position_m: p.into(),
            })
            .ok_or_else(|| {
                Error::Config(format!("node {k} is neither far nor a key-point arc end"))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NodeSet {
        label: design.label,
        closed: true,
        start_epoch_days: design.start_epoch_days,
        pattern_days: design.pattern_days.clone(),
        nodes,
        split: design.split.clone(),
        keypoints,
        guesses,
    })
}
