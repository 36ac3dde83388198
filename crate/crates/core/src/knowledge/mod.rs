//! Linear covariance knowledge analysis with a Schmidt consider filter.
//!
//! Each leg between two commanded maneuvers is processed twice after its
//! cut-off time: the ground track stops using observables there, while the
//! a-posteriori track keeps the later images and is handed to the next leg.

mod budget;
mod filter;
mod run;

pub use budget::{GaussMarkov, InitialCovariance, UncertaintyBudget};
pub use filter::{
    apply_maneuver_knowledge, execution_covariance, observation_rows, schmidt_update, time_update,
    Bias, BiasTreatment, FilterState, Layout, ObservationRow,
};
pub use run::{
    run_knowledge, write_knowledge_csv, CutoffKnowledge, KnowledgeConfig, KnowledgeRecord,
    KnowledgeTimeline, ManeuverKnowledge,
};
