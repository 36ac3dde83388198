#![allow(dead_code)]

use binarynav::design::{build_plan, reference, OptionLabel, ShootingOptions, TrajectoryPlan};
use binarynav::dynamics::{Dynamics, ForceFlags, SpacecraftModel, SystemModel};
use binarynav::knowledge::{run_knowledge, KnowledgeConfig, KnowledgeTimeline, UncertaintyBudget};
use binarynav::measurements::{build_schedule, IslModel, NavCamModel, ScheduleRule};

pub fn dynamics() -> Dynamics {
    Dynamics::new(SystemModel::default(), SpacecraftModel::default())
}

/// Primary point mass fixed at the origin and nothing else.
pub fn kepler() -> Dynamics {
    let mut sys = SystemModel::default();
    sys.mu1 += sys.mu2;
    sys.mu2 = 0.0;
    Dynamics::new(sys, SpacecraftModel::default()).with_flags(ForceFlags::two_body())
}

pub fn reference_plan(label: OptionLabel) -> TrajectoryPlan {
    let dynamics = dynamics();
    let opts = ShootingOptions::default();
    let design = reference::ReferenceDesign::for_option(label).unwrap();
    let set = reference::construct(&design, &dynamics, &opts).unwrap();
    build_plan(&set, &dynamics, &opts).unwrap()
}

pub fn knowledge(
    plan: &TrajectoryPlan,
    budget: &UncertaintyBudget,
    navcam: &NavCamModel,
    isl: &IslModel,
) -> KnowledgeTimeline {
    let dynamics = dynamics();
    let schedule = build_schedule(plan, &ScheduleRule::for_option(plan.option_label)).unwrap();
    let opts = ShootingOptions::default();
    run_knowledge(
        plan,
        &schedule,
        navcam,
        isl,
        budget,
        &KnowledgeConfig::default(),
        &dynamics,
        &opts.propagation,
    )
    .unwrap()
}

pub fn default_knowledge(plan: &TrajectoryPlan) -> KnowledgeTimeline {
    knowledge(
        plan,
        &UncertaintyBudget::default(),
        &NavCamModel::default(),
        &IslModel::default(),
    )
}

/// Root of the monotone `f` on `[lo, hi]` by bisection.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
