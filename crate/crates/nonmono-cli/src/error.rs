use thiserror::Error;

/// Failures mapped to process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input, unreadable files, bad flags.
    #[error("input: {0}")]
    Input(String),
    /// The requested stepsizes violate a window condition.
    #[error("invalid plan: {0}")]
    Plan(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => crate::EXIT_INPUT,
            CliError::Plan(_) => crate::EXIT_PLAN,
            CliError::Runtime(_) => crate::EXIT_RUNTIME,
        }
    }

    /// Input error with context.
    pub fn input(ctx: &str, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{ctx}: {e}"))
    }

    /// Classifies a library error raised while building a plan.
    pub fn from_plan(e: nonmono::Error) -> Self {
        use nonmono::Error as E;
        match e {
            E::RequestedOutOfWindow(_)
            | E::EmptyWindow(_)
            | E::ExistenceViolated(_)
            | E::RangeConditionViolated(_)
            | E::CaseViolated(_)
            | E::StepsizeOutOfRange
            | E::InvalidModuli(_) => CliError::Plan(e.to_string()),
            E::UnknownName(_) | E::DimensionMismatch(_) => CliError::Input(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
