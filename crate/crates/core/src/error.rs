use thiserror::Error;

/// Errors raised by the library. Variants split into input problems and
/// violated properties; see [`Error::is_property_violation`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid vertex: {0}")]
    InvalidVertex(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("budget exceeded: {needed} configurations requested, budget {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },
    #[error("not a tiling: {0}")]
    NotATiling(String),
    #[error("non-total interaction table: {0}")]
    NonTotalTable(String),
    #[error("interaction is not exchangeable for pair ({0}, {1})")]
    NotExchangeable(usize, usize),
    #[error("no path in window: {0}")]
    NoPathInWindow(String),
    #[error("form is not closed: closed path with integral {integral}")]
    NotClosed { integral: String },
    #[error("form is not shift-invariant: {0}")]
    NotInvariant(String),
    #[error("ill-defined pairing: {0}")]
    IllDefinedPairing(String),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("cocycle identity violated at {0}")]
    CocycleViolated(String),
    #[error("splitting infeasible: {0}")]
    SplittingInfeasible(String),
    #[error("support leaves window: {0}")]
    SupportLeavesWindow(String),
    #[error("inconsistent cocycle: {0}")]
    InconsistentCocycle(String),
    #[error("decomposition residual {0} on the interior")]
    DecompositionResidual(String),
    #[error("unsupported locale: {0}")]
    UnsupportedLocale(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True when the error reports a failed mathematical property rather
    /// than malformed input or an exhausted budget.
    pub fn is_property_violation(&self) -> bool {
        matches!(
            self,
            Error::NotExchangeable(..)
                | Error::NotClosed { .. }
                | Error::NotInvariant(_)
                | Error::IllDefinedPairing(_)
                | Error::CocycleViolated(_)
                | Error::SplittingInfeasible(_)
                | Error::InconsistentCocycle(_)
                | Error::DecompositionResidual(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
