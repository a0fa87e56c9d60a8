use thiserror::Error;

/// Errors raised by the laboratory operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("index {index} out of range for depth {depth}")]
    OutOfRange { index: usize, depth: usize },

    #[error("insufficient depth: index {index} requires depth at least {needed}, have {depth}")]
    InsufficientDepth {
        index: usize,
        needed: usize,
        depth: usize,
    },

    #[error("horizon invariant violated: {iterates} iterates at radius {radius} need q_N*q_(N-1) > {needed}, have {available}")]
    Horizon {
        iterates: String,
        radius: String,
        needed: String,
        available: String,
    },

    #[error("degenerate ball: radius {0} must lie in (0, 1/2)")]
    DegenerateBall(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("estimation impossible: {0}")]
    Estimation(String),

    #[error("unsupported system: {0}")]
    Unsupported(String),

    #[error("orbit never enters the target: {0}")]
    NeverHits(String),

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("window not located: {0}")]
    Window(String),
}

impl Error {
    /// True for errors caused by exhausted budgets (bits, steps, depth).
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::Resource(_) | Error::InsufficientDepth { .. } | Error::Window(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
