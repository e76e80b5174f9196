use thiserror::Error;

use crate::model::Branch;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point lies strictly outside the reference cube")]
    OutsideCube,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model invariants violated: {}", .0.join("; "))]
    ModelInvariant(Vec<String>),

    #[error("point is outside the {what} of branch {branch:?}")]
    OutsideBranch { branch: Branch, what: &'static str },

    #[error("central value {0} lies outside the closed superposition interval")]
    OutsideSuperposition(f64),

    #[error("refused: {0}")]
    Refused(String),

    #[error("disk violates alpha-admissibility: {0}")]
    Inadmissible(String),

    #[error("apex outside superposition interval: {0}")]
    ApexOutside(f64),

    #[error("bisection failed: {0}")]
    Bisection(String),

    #[error("parameter intervals not nested at iteration {0}")]
    NonNested(usize),

    #[error("no admissible branch keeps the disk in between (step {0})")]
    NoAdmissibleBranch(usize),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
