//! Batch front end: scenario loading, the design, validation, knowledge
//! and dispersion pipelines, and their file outputs.

pub mod commands;
pub mod error;
pub mod scenario;
pub mod schema;

use std::path::PathBuf;

pub use error::{CliError, CliResult, EXIT_CONFIG, EXIT_CONSTRAINT, EXIT_NUMERICAL, EXIT_OK};
pub use scenario::{Overrides, Scenario};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Design,
    /// Checks a stored plan file, or the scenario's plan.
    Validate {
        plan: Option<PathBuf>,
    },
    Knowledge,
    Dispersion,
    GenerateNodes,
}

/// Runs `command` on a pool of `workers` threads (all cores when `None`)
/// and returns a one-line summary.
pub fn execute(
    command: &Command,
    scenario: &Scenario,
    workers: Option<usize>,
) -> CliResult<String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()?;
    pool.install(|| match command {
        Command::Design => commands::design(scenario),
        Command::Validate { plan } => commands::validate(scenario, plan.as_deref()),
        Command::Knowledge => commands::knowledge(scenario),
        Command::Dispersion => commands::dispersion(scenario),
        Command::GenerateNodes => commands::generate_nodes(scenario),
    })
}
