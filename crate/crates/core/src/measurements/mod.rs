//! Optical and inter-satellite link observables, their accuracy models,
//! partials and the per-leg measurement plans.

mod models;
mod observe;
mod schedule;

pub use models::{HeraReference, IslModel, NavCamModel, ReferenceSample};
pub use observe::{
    isl_geometry, isl_observe, measurement_partials, navcam_geometry, navcam_observe, wrap_angle,
    Measurement, MeasurementKind,
};
pub use schedule::{
    build_schedule, simulate_schedule, write_measurements_csv, IslWindowEnd, LegSchedule,
    MeasurementSchedule, ScheduleRule, Stub,
};
