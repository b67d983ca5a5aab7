use thiserror::Error;

/// Everything that can go wrong while building or advancing a simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("inconsistent experiment: {0}")]
    InconsistentSpec(String),

    #[error("degenerate mesh: cell {cell} has volume {volume:e}")]
    DegenerateMesh { cell: usize, volume: f64 },

    #[error("singular cyclic system: pivot {pivot:e} at row {row}")]
    SingularSystem { row: usize, pivot: f64 },

    #[error("non-positive temperature {theta:e} in cell {cell} at t = {time}")]
    NegativeTemperature { cell: usize, theta: f64, time: f64 },

    #[error("volume fraction {alpha} left [0, 1] in cell {cell} at t = {time}")]
    VolumeFractionBlowup { cell: usize, alpha: f64, time: f64 },

    #[error("time step failed to converge after {halvings} halvings at t = {time}: {source}")]
    StepRejected {
        halvings: u32,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("mesh mismatch: torus lengths {left} and {right}")]
    MeshMismatch { left: f64, right: f64 },
}

impl Error {
    /// Errors that signal a too-large time step; the driver halves `dt` and retries.
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            Error::NegativeTemperature { .. }
                | Error::VolumeFractionBlowup { .. }
                | Error::DegenerateMesh { .. }
        )
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
