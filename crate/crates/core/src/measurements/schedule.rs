use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::models::{IslModel, NavCamModel};
use super::observe::{isl_observe, navcam_observe, Measurement, MeasurementKind};
use crate::design::{OptionLabel, TrajectoryPlan};
use crate::dynamics::{propagate, Dynamics, Epoch, PropagationOptions, HOUR};
use crate::error::{Error, Result};

/// Where the link window of a leg closes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IslWindowEnd {
    /// A margin before the cut-off time.
    Cot,
    /// A margin before the next maneuver.
    LegEnd,
}

/// Per-leg measurement plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleRule {
    /// Delay from a maneuver to the last usable observable for the next one [h].
    pub cot_margin_h: f64,
    /// Link start after the leg's first maneuver [h].
    pub isl_start_h: f64,
    pub isl_end: IslWindowEnd,
    /// Link stop before the reference epoch of `isl_end` [h].
    pub isl_end_margin_h: f64,
    pub range_cadence_h: f64,
    pub rate_cadence_h: f64,
    pub optical_pre_cot: usize,
    pub optical_post_cot: usize,
}

impl ScheduleRule {
    pub fn option_a() -> Self {
        Self {
            cot_margin_h: 49.0,
            isl_start_h: 6.0,
            isl_end: IslWindowEnd::Cot,
            isl_end_margin_h: 3.0,
            range_cadence_h: 3.0,
            rate_cadence_h: 1.0,
            optical_pre_cot: 4,
            optical_post_cot: 3,
        }
    }

    pub fn option_b() -> Self {
        Self {
            isl_end: IslWindowEnd::LegEnd,
            optical_pre_cot: 7,
            optical_post_cot: 5,
            ..Self::option_a()
        }
    }

    /// Custom plans use the long-arc rule.
    pub fn for_option(label: OptionLabel) -> Self {
        match label {
            OptionLabel::A => Self::option_a(),
            OptionLabel::B | OptionLabel::Custom => Self::option_b(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hours = [self.cot_margin_h, self.isl_start_h, self.isl_end_margin_h];
        if hours.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
            return Err(Error::Config(
                "schedule offsets must be finite and non-negative".into(),
            ));
        }
        if !(self.range_cadence_h > 0.0 && self.rate_cadence_h > 0.0) {
            return Err(Error::Config("link cadences must be positive".into()));
        }
        if self.optical_pre_cot < 2 && self.optical_pre_cot != 0 {
            return Err(Error::Config(
                "a pre-cut-off optical window needs 0 or at least 2 images".into(),
            ));
        }
        Ok(())
    }
}

/// Observable placeholder: epoch and kind, no value yet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stub {
    pub epoch: Epoch,
    pub kind: MeasurementKind,
    pub post_cot: bool,
}

/// Observables of one leg, between two commanded maneuvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LegSchedule {
    pub leg: usize,
    pub start: Epoch,
    pub end: Epoch,
    pub cot: Epoch,
    /// Ordered by epoch, then kind.
    pub stubs: Vec<Stub>,
}

impl LegSchedule {
    pub fn count(&self, kind: MeasurementKind, post_cot: bool) -> usize {
        self.stubs
            .iter()
            .filter(|s| s.kind == kind && s.post_cot == post_cot)
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSchedule {
    pub rule: ScheduleRule,
    pub legs: Vec<LegSchedule>,
}

impl MeasurementSchedule {
    /// Schedule with the same legs and no observables.
    pub fn empty_like(&self) -> Self {
        let legs = self
            .legs
            .iter()
            .map(|l| LegSchedule {
                stubs: Vec::new(),
                ..l.clone()
            })
            .collect();
        Self {
            rule: self.rule.clone(),
            legs,
        }
    }
}

/// `a + k * step` for every `k` that keeps the epoch within `b`.
fn cadence(a: Epoch, b: Epoch, step: f64) -> Vec<Epoch> {
    let n = ((b - a) / step + 1e-9).floor();
    if n < 0.0 {
        return Vec::new();
    }
    (0..=n as usize).map(|k| a + k as f64 * step).collect()
}

/// `n` evenly spaced epochs including both ends of `[a, b]`.
fn spread(a: Epoch, b: Epoch, n: usize) -> Vec<Epoch> {
    match n {
        0 => Vec::new(),
        1 => vec![b],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Lays out the observables of every leg of `plan`.
pub fn build_schedule(plan: &TrajectoryPlan, rule: &ScheduleRule) -> Result<MeasurementSchedule> {
    rule.validate()?;
    let cmd = plan.commanded_nodes();
    let mut legs = Vec::new();
    for (leg, w) in cmd.windows(2).enumerate() {
        let (start, end) = (plan.nodes[w[0]].epoch, plan.nodes[w[1]].epoch);
        let cot = end + -rule.cot_margin_h * HOUR;
        let isl_start = start + rule.isl_start_h * HOUR;
        let isl_stop = match rule.isl_end {
            IslWindowEnd::Cot => cot,
            IslWindowEnd::LegEnd => end,
        } + -rule.isl_end_margin_h * HOUR;
        let needed = rule.cot_margin_h + rule.isl_start_h + rule.isl_end_margin_h;
        if cot + -rule.isl_end_margin_h * HOUR < isl_start {
            return Err(Error::InfeasibleSchedule(format!(
                "leg {leg} lasts {:.1} h, less than the {needed:.1} h needed",
                (end - start) / HOUR
            )));
        }

        let mut stubs = Vec::new();
        let mut push = |epoch: Epoch, kind| {
            stubs.push(Stub {
                epoch,
                kind,
                post_cot: epoch > cot,
            })
        };
        for t in cadence(isl_start, isl_stop, rule.range_cadence_h * HOUR) {
            push(t, MeasurementKind::IslRange);
        }
        for t in cadence(isl_start, isl_stop, rule.rate_cadence_h * HOUR) {
            push(t, MeasurementKind::IslRangeRate);
        }
        for t in spread(isl_start, cot, rule.optical_pre_cot) {
            push(t, MeasurementKind::NavCamRange);
            push(t, MeasurementKind::NavCamAngles);
        }
        let n_post = rule.optical_post_cot;
        for k in 1..=n_post {
            let t = cot + (end - cot) * k as f64 / n_post as f64;
            push(t, MeasurementKind::NavCamRange);
            push(t, MeasurementKind::NavCamAngles);
        }
        stubs.sort_by(|a, b| a.epoch.cmp(&b.epoch).then(a.kind.cmp(&b.kind)));
        legs.push(LegSchedule {
            leg,
            start,
            end,
            cot,
            stubs,
        });
    }
    Ok(MeasurementSchedule {
        rule: rule.clone(),
        legs,
    })
}

/// Simulates every scheduled observable along the nominal plan.
pub fn simulate_schedule<R: Rng>(
    plan: &TrajectoryPlan,
    schedule: &MeasurementSchedule,
    navcam: &NavCamModel,
    isl: &IslModel,
    dynamics: &Dynamics,
    prop: &PropagationOptions,
    rng: &mut R,
) -> Result<Vec<(usize, Measurement)>> {
    let cmd = plan.commanded_nodes();
    let mut out = Vec::new();
    for leg in &schedule.legs {
        let mut state = plan.departure_state(cmd[leg.leg]);
        for stub in &leg.stubs {
            state = propagate(&state, stub.epoch, dynamics, prop)?;
            let mut m = match stub.kind {
                MeasurementKind::NavCamRange => {
                    navcam_observe(&state, navcam, &dynamics.sys, rng)?.0
                }
                MeasurementKind::NavCamAngles => {
                    navcam_observe(&state, navcam, &dynamics.sys, rng)?.1
                }
                kind => isl_observe(&state, kind, isl, &dynamics.sys, rng)?,
            };
            m.post_cot = stub.post_cot;
            out.push((leg.leg, m));
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct MeasurementRow {
    epoch_s: f64,
    leg: usize,
    kind: MeasurementKind,
    value_1: f64,
    value_2: Option<f64>,
    sigma_1: f64,
    sigma_2: Option<f64>,
    post_cot: bool,
}

/// Writes simulated observables as CSV.
pub fn write_measurements_csv(path: &Path, measurements: &[(usize, Measurement)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (leg, m) in measurements {
        w.serialize(MeasurementRow {
            epoch_s: m.epoch.seconds(),
            leg: *leg,
            kind: m.kind,
            value_1: m.value[0],
            value_2: m.value.get(1).copied(),
            sigma_1: m.sigma[0],
            sigma_2: m.sigma.get(1).copied(),
            post_cot: m.post_cot,
        })?;
    }
    w.flush()?;
    Ok(())
}
