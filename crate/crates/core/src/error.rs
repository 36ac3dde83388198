use crate::dynamics::{Body, StateVector};

/// Errors raised by the simulation toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("Kepler solver did not converge (residual {residual:e} rad)")]
    KeplerNonConvergence { residual: f64 },

    #[error("spacecraft is inside the point mass of {body}")]
    Singularity { body: Body },

    #[error("propagation failed at t = {epoch:.3} s: {reason}")]
    Propagation {
        epoch: f64,
        reason: String,
        last_state: Option<Box<StateVector>>,
    },

    #[error("Sun direction is parallel to the pole; equatorial projection is undefined")]
    DegenerateFrame,

    #[error("singular geometry: {0}")]
    SingularGeometry(&'static str),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("boundary-value solve failed after {iterations} iterations (best residual {residual:.3e} m)")]
    BvpFailure { iterations: usize, residual: f64 },

    #[error("ill-conditioned position/velocity STM block (reciprocal condition {rcond:e})")]
    Conditioning { rcond: f64 },

    #[error("arc {index}: {source}")]
    Arc {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("constraint: {0}")]
    Constraint(String),

    #[error("observable unavailable: {0}")]
    Unavailable(String),

    #[error("configuration: {0}")]
    Config(String),

    #[error("infeasible measurement schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("numerical: {0}")]
    Numerical(String),

    #[error("guidance normal matrix is singular (reciprocal condition {rcond:e})")]
    Guidance { rcond: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Wraps an error with the index of the arc that produced it.
    pub fn in_arc(self, index: usize) -> Self {
        Error::Arc {
            index,
            source: Box::new(self),
        }
    }

    /// True for failures caused by bad input rather than numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::InvalidModel(_) => true,
            Error::Arc { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
