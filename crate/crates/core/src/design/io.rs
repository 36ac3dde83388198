use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::plan::{NodeSet, TrajectoryPlan};
use crate::dynamics::{
    asteroid_states, phase_angle, propagate_dense, to_sun_south_frame, Body, Dynamics, FrameId,
    PropagationOptions,
};
use crate::error::{Error, Result};

pub fn load_node_set(path: &Path) -> Result<NodeSet> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read node file {}: {e}", path.display())))?;
    let set: NodeSet = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("node file {}: {e}", path.display())))?;
    set.check()?;
    Ok(set)
}

pub fn save_node_set(path: &Path, set: &NodeSet, header: &str) -> Result<()> {
    let body = toml::to_string(set).map_err(|e| Error::Config(e.to_string()))?;
    let mut text = String::new();
    for line in header.lines() {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    text.push_str(&body);
    fs::write(path, text)?;
    Ok(())
}

pub fn write_plan_json(path: &Path, plan: &TrajectoryPlan) -> Result<()> {
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, plan)?;
    file.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    epoch_s: f64,
    arc: usize,
    frame: FrameId,
    x_m: f64,
    y_m: f64,
    z_m: f64,
    vx_mps: f64,
    vy_mps: f64,
    vz_mps: f64,
    range_d1_m: f64,
    range_d2_m: f64,
    phase_d1_deg: f64,
    phase_d2_deg: f64,
}

/// Writes dense samples of every arc, each arc starting just after its
/// node impulse.
pub fn write_trajectory_csv<W: Write>(
    out: W,
    plan: &TrajectoryPlan,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
    cadence: f64,
    frame: FrameId,
) -> Result<()> {
    let sys = &dynamics.sys;
    let mut w = csv::Writer::from_writer(out);
    for (i, arc) in plan.arcs.iter().enumerate() {
        let traj = propagate_dense(
            &plan.departure_state(i),
            arc.end_epoch,
            dynamics,
            prop,
            cadence,
        )
        .map_err(|e| e.in_arc(i))?;
        for s in &traj.samples {
            let (r1, r2) = asteroid_states(s.epoch, sys);
            let shown = match frame {
                FrameId::DidymosEclipJ2000 => s.clone(),
                FrameId::DidymosEquatorialSunSouth => to_sun_south_frame(s, sys)?,
            };
            w.serialize(TrajectoryRow {
                epoch_s: s.epoch.seconds(),
                arc: i,
                frame,
                x_m: shown.r.x,
                y_m: shown.r.y,
                z_m: shown.r.z,
                vx_mps: shown.v.x,
                vy_mps: shown.v.y,
                vz_mps: shown.v.z,
                range_d1_m: (s.r - r1).norm(),
                range_d2_m: (s.r - r2).norm(),
                phase_d1_deg: phase_angle(&s.r, s.epoch, Body::Primary, sys)?,
                phase_d2_deg: phase_angle(&s.r, s.epoch, Body::Secondary, sys)?,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
