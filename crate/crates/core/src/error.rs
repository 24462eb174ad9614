use thiserror::Error;

/// Errors raised by the sampling library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmisError {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The proposal density vanished where the target does not.
    #[error("absolute continuity violated: q(x) = 0 but log pi(x) = {log_pi}")]
    AbsoluteContinuity { log_pi: f64 },

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Not enough weighted mass to fit a proposal.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Covariance repair exhausted its jitter retries.
    #[error("adaptation failure: {0}")]
    AdaptationFailure(String),

    /// A learning step failed; `iteration` is 1-based.
    #[error("iteration {iteration}: {source}")]
    Iteration {
        iteration: usize,
        #[source]
        source: Box<AmisError>,
    },

    /// All weights are zero, so nothing can be normalised.
    #[error("degenerate weights: every weight is zero")]
    DegenerateWeights,

    #[error("proposal mass escapes support: accepted {accepted} of {draws} draws")]
    SupportEscape { accepted: u64, draws: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl AmisError {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ AmisError::Iteration { .. } => e,
            e => AmisError::Iteration {
                iteration,
                source: Box::new(e),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, AmisError>;
