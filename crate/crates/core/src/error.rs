use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Hypothesis,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Hypothesis => 3,
            ErrorClass::Numerical => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter hypotheses violated: {}", .0.join(", "))]
    InvalidParams(Vec<String>),

    #[error("admissible window for 1/r is empty: lower {lo} >= upper {hi}")]
    EmptyWindow { lo: f64, hi: f64 },

    #[error("r = {r} lies outside the admissible window (1/r must be in ({lo}, {hi}))")]
    WindowViolation { r: f64, lo: f64, hi: f64 },

    #[error("exponent q = {q} is inadmissible: {reason}")]
    Inadmissible { q: f64, reason: String },

    #[error("degenerate transform: 2 + sigma_bar = {0} vanishes")]
    DegenerateTransform(f64),

    #[error("insufficient resolution: {found} interior nodes, need at least {needed}")]
    InsufficientResolution { found: usize, needed: usize },

    #[error("linear solve failed at node {node}: pivot {pivot}")]
    StepFailure { node: usize, pivot: f64 },

    #[error("exponent condition violated: {0}")]
    ConditionViolation(String),

    #[error("iteration diverged: |u| = {value:e} exceeds overflow cap")]
    Overflow { value: f64 },

    #[error("Picard iteration not contracting: last ratios {ratios:?}")]
    NotContracting { ratios: Vec<f64> },

    #[error("no valid local existence time: R(T) > M/2 already at T = {t_floor:e}")]
    NoValidT { t_floor: f64 },

    #[error("scan produced no bracket: every outcome was {outcome}")]
    NoBracket { outcome: String },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("poor regression fit: R^2 = {r_squared:.5} < {threshold}")]
    PoorFit { r_squared: f64, threshold: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParams(_)
            | Error::EmptyWindow { .. }
            | Error::WindowViolation { .. }
            | Error::Inadmissible { .. }
            | Error::ConditionViolation(_)
            | Error::DegenerateTransform(_) => ErrorClass::Hypothesis,
            Error::Config(_) | Error::InvalidArgument(_) | Error::InvalidGrid(_) | Error::Io(_) => ErrorClass::Config,
            Error::InsufficientResolution { .. }
            | Error::StepFailure { .. }
            | Error::Overflow { .. }
            | Error::NotContracting { .. }
            | Error::NoValidT { .. }
            | Error::NoBracket { .. }
            | Error::QuadratureFailure(_)
            | Error::PoorFit { .. }
            | Error::Csv(_) => ErrorClass::Numerical,
        }
    }
}
