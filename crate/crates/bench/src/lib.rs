//! Fixtures shared by the benchmarks.

use binarynav::design::{build_plan, reference, OptionLabel, ShootingOptions, TrajectoryPlan};
use binarynav::dynamics::{Dynamics, SpacecraftModel, StateVector, SystemModel};
use binarynav::knowledge::{run_knowledge, KnowledgeConfig, KnowledgeTimeline, UncertaintyBudget};
use binarynav::measurements::{build_schedule, IslModel, NavCamModel, ScheduleRule};
use nalgebra::Vector3;

pub fn dynamics() -> Dynamics {
    Dynamics::new(SystemModel::default(), SpacecraftModel::default())
}

/// A bound state 10 km from the barycenter.
pub fn state() -> StateVector {
    StateVector::new(
        Vector3::new(10_000.0, 4_000.0, -800.0),
        Vector3::new(-0.03, 0.035, 0.004),
        binarynav::dynamics::Epoch::ZERO,
    )
}

pub fn plan(label: OptionLabel) -> TrajectoryPlan {
    let dynamics = dynamics();
    let opts = ShootingOptions::default();
    let design = reference::ReferenceDesign::for_option(label).unwrap();
    let set = reference::construct(&design, &dynamics, &opts).unwrap();
    build_plan(&set, &dynamics, &opts).unwrap()
}

pub fn knowledge(plan: &TrajectoryPlan) -> KnowledgeTimeline {
    let schedule = build_schedule(plan, &ScheduleRule::for_option(plan.option_label)).unwrap();
    run_knowledge(
        plan,
        &schedule,
        &NavCamModel::default(),
        &IslModel::default(),
        &UncertaintyBudget::default(),
        &KnowledgeConfig::default(),
        &dynamics(),
        &ShootingOptions::default().propagation,
    )
    .unwrap()
}
