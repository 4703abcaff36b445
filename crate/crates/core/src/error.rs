use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// An environment, grid or experiment description violates one of its invariants.
    #[error("invalid input: {invariant}")]
    InvalidSpec { invariant: String },

    /// A profile family that cannot serve the requested role (e.g. a sharp
    /// checkerboard used as a stream function).
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),

    /// Drift requested outside the range of stability indices where the
    /// resolvent solution is known to be unique.
    #[error("regime error: {0}")]
    Regime(String),

    /// Argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Refusal to allocate an operator larger than the configured cap.
    #[error("resource limit: {what} needs {required_bytes} bytes, cap is {cap_bytes} bytes")]
    Resource {
        what: String,
        required_bytes: u64,
        cap_bytes: u64,
    },

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// Iterative linear solve hit its iteration cap.
    #[error("linear solver did not converge after {iterations} iterations (final relative residual {:e})", .residual_history.last().copied().unwrap_or(f64::NAN))]
    NonConvergence {
        iterations: usize,
        residual_history: Vec<f64>,
    },

    #[error("non-finite value encountered in {0}")]
    NotFinite(String),

    /// The viscosity/truncation schedule ran out of stages before the
    /// iterates stabilized.
    #[error("schedule did not stabilize within {stages} stages")]
    ScheduleFailure { stages: usize, increments: Vec<f64> },

    /// A computed solution violates one of the a-priori estimates.
    #[error("a-priori estimate '{estimate}' violated: lhs = {lhs:e}, rhs = {rhs:e}")]
    AprioriViolation {
        estimate: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(invariant: impl Into<String>) -> Error {
    Error::InvalidSpec {
        invariant: invariant.into(),
    }
}
