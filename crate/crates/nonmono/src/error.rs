use alloc::string::String;

/// Errors produced by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("pair is not parallel summable")]
    NotParallelSummable,
    #[error("resolvent system is numerically singular")]
    SingularResolvent,
    #[error("operator has no matrix form")]
    NotLinear,
    #[error("invalid moduli: {0}")]
    InvalidModuli(String),
    #[error("LMI is infeasible")]
    Infeasible,
    #[error("range condition violated: {0}")]
    RangeConditionViolated(String),
    #[error("point is not in the operator graph")]
    NotInGraph,
    #[error("existence condition violated: {0}")]
    ExistenceViolated(String),
    #[error("requested value outside window: {0}")]
    RequestedOutOfWindow(String),
    #[error("stepsizes violate gamma*tau*|L|^2 <= 1")]
    StepsizeOutOfRange,
    #[error("empty window: {0}")]
    EmptyWindow(String),
    #[error("moduli case violated: {0}")]
    CaseViolated(String),
    #[error("shadow sequence requires the semidefinite branch")]
    WrongBranch,
    #[error("no relaxation parameter is stable")]
    NoStableLambda,
    #[error("operator is singular")]
    SingularOperator,
    #[error("unknown builtin problem: {0}")]
    UnknownName(String),
    #[error("series is not geometric")]
    NotGeometric,
}

pub type Result<T> = core::result::Result<T, Error>;
