use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate system is singular or ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("half-space normal must be non-zero and finite")]
    DegenerateNormal,

    #[error("not a sub-diagonal basis: {0}")]
    NotSubDiagonal(String),

    #[error("empty input")]
    Empty,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate measure spec: {0}")]
    DegenerateSpec(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("no sign change found on [{lo}, {hi}] (g = {g_lo}, {g_hi}) after {expansions} expansions")]
    BracketNotFound {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
        expansions: usize,
    },

    #[error("bisection did not converge after {iterations} iterations (bracket [{lo}, {hi}])")]
    NonConvergence { iterations: usize, lo: f64, hi: f64 },

    #[error("residual function returned a non-finite value at t = {0}")]
    NonFinite(f64),

    #[error("prefix residual drifted: |T_{index}| = {value:e}")]
    PrefixDrift { index: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no region contains the point within tolerance")]
    NoContainingRegion,

    #[error("invalid partition document: {0}")]
    Schema(String),

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical solve (as opposed to bad input).
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::BracketNotFound { .. }
                | Error::NonConvergence { .. }
                | Error::NonFinite(_)
                | Error::PrefixDrift { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
