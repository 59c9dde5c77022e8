use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("critical point has no local profile attached")]
    MissingProfile,

    #[error("no critical point found in the search box")]
    EmptyResult,

    #[error("sets are not connected on the lattice")]
    Disconnected,

    #[error("endpoints land in the same island; they are not separated at this threshold")]
    NotSeparated,

    #[error("removing the bridges does not disconnect the islands; saddle set does not charge capacity")]
    UnreachedSaddleSet,

    #[error("profile does not exceed the truncation level within the search window")]
    NotProper,

    #[error("level set touches the sampling box; enlarge the box")]
    BoxTooSmall,

    #[error("no root in the bracketing interval")]
    NoRoot,

    #[error("lattice would have {nodes} nodes, exceeding the budget of {budget}")]
    TooLarge { nodes: usize, budget: usize },

    #[error("local exponent {exponent:.1} exceeds the floating-point range; raise the shift or shrink the mask")]
    Overflow { exponent: f64 },

    #[error("iterative solver failed to converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("d and V carry incompatible exponent shifts ({0:+.6} vs {1:+.6})")]
    ShiftMismatch(f64, f64),

    #[error("capacity is zero; series reduction undefined")]
    ZeroCapacity,

    #[error("network topology is general (neither parallel nor series); refusing to reduce")]
    TopologyGeneral,

    #[error("Hessian spectrum has the wrong sign pattern for this formula")]
    SpectrumInvalid,

    #[error("time step too large: a single step moved {step:.3e}, more than the box diameter")]
    UnstableStep { step: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration ({field}): {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("missing data: {0}")]
    MissingData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
