use std::path::PathBuf;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] binarynav::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{count} hard constraint violation(s)")]
    Violations { count: usize },

    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONSTRAINT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

fn core_exit_code(err: &binarynav::Error) -> i32 {
    use binarynav::Error as E;
    match err {
        E::Arc { source, .. } => core_exit_code(source),
        E::Config(_) | E::InvalidModel(_) | E::InfeasibleSchedule(_) => EXIT_CONFIG,
        E::Io(_) | E::Csv(_) | E::Json(_) => EXIT_CONFIG,
        E::Constraint(_) => EXIT_CONSTRAINT,
        _ => EXIT_NUMERICAL,
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => core_exit_code(e),
            CliError::Config(_) | CliError::Io { .. } | CliError::Pool(_) => EXIT_CONFIG,
            CliError::Violations { .. } => EXIT_CONSTRAINT,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
