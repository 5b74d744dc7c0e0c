use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {dist} parameter: {reason}")]
    InvalidParameter { dist: &'static str, reason: String },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("length mismatch: {0}")]
    Dimension(String),

    #[error("prior weights are all zero or negative")]
    DegeneratePrior,

    #[error("posterior normalizer is zero ({0})")]
    Contradiction(String),

    #[error("matrix is not positive definite: leading minor of order {minor} is not positive")]
    NotPositiveDefinite { minor: usize },

    #[error("matrix is not symmetric: entry ({row}, {col}) differs from its transpose")]
    NotSymmetric { row: usize, col: usize },

    #[error("optimizer did not converge after {evaluations} evaluations (best iterate {best:?})")]
    NoConvergence { best: Vec<f64>, evaluations: usize },

    #[error("log density is not finite at {point:?} inside the finite-difference stencil")]
    Stencil { point: Vec<f64> },

    #[error("negated Hessian is not positive definite (eigenvalues {eigenvalues:?}): saddle or flat region")]
    NotAMaximum { eigenvalues: Vec<f64> },

    #[error("no beta distribution with shapes in (1e-3, 1e4) matches the assessment")]
    InfeasibleAssessment,

    #[error("weighted-average decomposition needs n >= 1 (prior mean is {prior_mean})")]
    DecompositionUndefined { prior_mean: f64 },

    #[error("draws for `{0}` have zero variance; autocorrelation is undefined")]
    DegenerateChain(String),

    #[error("need at least {needed} draws, got {got}")]
    InsufficientDraws { needed: usize, got: usize },
}

pub(crate) fn invalid(dist: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        dist,
        reason: reason.into(),
    }
}
