use thiserror::Error;

/// Exit code for malformed or infeasible input.
pub const EXIT_INPUT: i32 = 2;
/// Exit code when the server cannot bind its socket.
pub const EXIT_BIND: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Input { field: String, message: String },

    #[error(transparent)]
    Core(#[from] posteriorlab::Error),

    #[error("cannot read `{path}`: {source}")]
    Read { path: String, source: std::io::Error },

    #[error("cannot write output: {0}")]
    Write(#[source] std::io::Error),

    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
}

impl CliError {
    pub fn input(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Input {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        use posteriorlab::Error as E;
        match self {
            CliError::Input { .. } | CliError::Read { .. } => EXIT_INPUT,
            CliError::Core(
                E::InvalidParameter { .. }
                | E::Domain(_)
                | E::Dimension(_)
                | E::DegeneratePrior
                | E::Contradiction(_)
                | E::InfeasibleAssessment
                | E::InsufficientDraws { .. },
            ) => EXIT_INPUT,
            CliError::Bind { .. } => EXIT_BIND,
            _ => 1,
        }
    }
}

/// Tag core errors with the input field they came from.
pub(crate) trait Field<T> {
    fn field(self, name: &str) -> Result<T, CliError>;
}

impl<T> Field<T> for posteriorlab::Result<T> {
    fn field(self, name: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::input(name, e.to_string()))
    }
}

/// Stable machine-readable code for an API error payload.
pub fn error_code(e: &posteriorlab::Error) -> &'static str {
    use posteriorlab::Error as E;
    match e {
        E::InvalidParameter { .. } => "invalid_parameter",
        E::Domain(_) => "domain",
        E::Dimension(_) => "dimension",
        E::DegeneratePrior => "degenerate_prior",
        E::Contradiction(_) => "contradiction",
        E::NotPositiveDefinite { .. } => "not_positive_definite",
        E::NotSymmetric { .. } => "not_symmetric",
        E::NoConvergence { .. } => "no_convergence",
        E::Stencil { .. } => "stencil",
        E::NotAMaximum { .. } => "not_a_maximum",
        E::InfeasibleAssessment => "infeasible_assessment",
        E::DecompositionUndefined { .. } => "decomposition_undefined",
        E::DegenerateChain(_) => "degenerate_chain",
        E::InsufficientDraws { .. } => "insufficient_draws",
    }
}
