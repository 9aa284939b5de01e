use thiserror::Error;

use crate::iterate::ActiveIterate;

pub type Result<T, E = FwError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FwError {
    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("away step from the only atom of the active set (weight 1) is undefined")]
    AwayFromFullWeight,

    #[error("degenerate direction: FW atom equals away atom")]
    DegenerateDirection,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("atom id {0} is not active")]
    InactiveAtom(u64),

    #[error("enumeration infeasible: {count} atoms exceeds the cap of {cap}")]
    EnumerationInfeasible { count: usize, cap: usize },

    #[error("diameter unavailable for this polytope")]
    DiameterUnavailable,

    #[error("pyramidal width unavailable for this polytope")]
    WidthUnavailable,

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("correction stalled after {steps} inner steps")]
    CorrectionStall {
        steps: usize,
        partial: Box<ActiveIterate>,
    },

    #[error("degenerate active set: {0}")]
    DegenerateActiveSet(String),

    #[error("objective is not quadratic; {0} requires a quadratic objective")]
    NotQuadratic(&'static str),

    #[error("base point is not in the convex hull of the atoms")]
    OutsideHull,

    #[error("exact pyramidal directional width infeasible: {0}")]
    PdirwInfeasible(String),

    #[error("invalid polytope: {0}")]
    InvalidPolytope(String),

    #[error("invalid objective: {0}")]
    InvalidObjective(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
