//! Trajectory design: key points, ballistic arcs between maneuver nodes,
//! plan assembly and constraint checks.

mod io;
mod keypoint;
pub mod lambert;
mod plan;
pub mod reference;
mod shooting;
mod validate;

pub use io::{load_node_set, save_node_set, write_plan_json, write_trajectory_csv};
pub use keypoint::{make_keypoint, KeyPoint};
pub use plan::{
    build_plan, plan_total_dv, Arc, ArcGuess, KeypointSpec, ManeuverNode, NodeSet, NodeSpec,
    OptionLabel, SplitRule, TrajectoryPlan,
};
pub use shooting::{solve_arc, ArcSolution, ShootingOptions};
pub use validate::{
    validate_plan, ConstraintReport, Constraints, KeypointCheck, Violation, ViolationKind,
};
