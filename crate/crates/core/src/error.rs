use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot parse rational {input:?} at column {column}: {reason}")]
    ParseRational {
        input: String,
        column: usize,
        reason: String,
    },

    #[error("invalid potential description: {0}")]
    InvalidSpec(String),

    #[error("coefficient order {order} exceeds the configured cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("invalid coefficient request: {0}")]
    InvalidCoefficient(String),

    /// The energy does not belong to the resonance shell `S_p \ S_(p-1)`.
    #[error("energy {energy} is not a candidate of order exactly p: {detail}")]
    NotInResonanceShell { energy: String, detail: String },

    #[error("non-generic parameters: {0}")]
    NonGeneric(String),

    #[error("amplitude constraint infeasible: {0}")]
    Infeasible(String),

    #[error("step failure at x = {x}: {reason}")]
    StepFailure { x: f64, reason: String },

    #[error("phase did not settle: {0}")]
    NonConvergence(String),

    #[error("no bracket for the phase target: {0}")]
    BracketFailure(String),

    #[error("fit window too short: {0}")]
    WindowTooShort(String),

    #[error("no square-integrable eigensolution: {0}")]
    NotFound(String),

    #[error("malformed trajectory data: {0}")]
    Trajectory(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
