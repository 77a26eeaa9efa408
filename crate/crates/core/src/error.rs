use thiserror::Error;

/// Every failure the library reports. Precision and depth refusals are
/// ordinary values here: the library never rounds silently.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("operation requires a Laurent series field")]
    WrongField,
    #[error("element is not a unit")]
    NotAUnit,
    #[error("matrix does not have determinant 1 at tracked precision")]
    NotUnimodular,
    #[error("radius {requested} exceeds the precision bound {max}")]
    RadiusTooLarge { requested: u32, max: u32 },
    #[error("portrait depth exhausted: {0}")]
    DepthExhausted(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("wrong arity: expected {expected}, got {got}")]
    WrongArity { expected: usize, got: usize },
    #[error("no elliptic first entry found within a budget of {budget} expanded nodes")]
    ReductionFailed { budget: usize },
    #[error("entries share the fixed vertex {vertex}")]
    CommonFixedVertex { vertex: String },
    #[error("no hyperbolic witness found within scan radius {radius}")]
    NoWitness { radius: u32 },
    #[error("budget exceeded: {required} tuples required, limit {limit} ({bytes} bytes of state)")]
    BudgetExceeded { required: u128, limit: u128, bytes: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("element does not act on a tree")]
    NotClassifiable,
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn precision(msg: impl Into<String>) -> Self {
        Error::PrecisionExhausted(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Errors that signal a resource limit (precision, depth, budget) rather
    /// than bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted(_)
                | Error::RadiusTooLarge { .. }
                | Error::DepthExhausted(_)
                | Error::BudgetExceeded { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
