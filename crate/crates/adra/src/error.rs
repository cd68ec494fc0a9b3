use thiserror::Error;

/// Errors produced by the analytic model, the simulator, and the optimizer.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The fixed-point equation shows no sign change on the search interval,
    /// even after the fallback grid scan. Possible outside the guaranteed
    /// regime (N >= 3, p <= 2/N).
    #[error(
        "no sign change of g(q) on [{lo}, {hi}]; the fixed-point equation has no bracketable root"
    )]
    NoSignChange { lo: f64, hi: f64 },

    /// Every grid point of an optimization search failed to solve.
    #[error("all {0} grid points failed to solve")]
    AllPointsFailed(usize),

    /// The simulation recorded no transmission attempt, so the empirical
    /// success probability is undefined.
    #[error("no transmission attempts recorded; empirical success probability is undefined")]
    NoAttempts,

    /// The truncation cap of the exact coupled chain leaves too much
    /// probability mass above it.
    #[error("age cap {cap} too small: decoupled tail mass beyond it is {tail:.3e} (must be < {limit:.0e})")]
    AgeCapTooSmall { cap: u64, tail: f64, limit: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
