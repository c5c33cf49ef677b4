use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("undefined arithmetic: {0}")]
    UndefinedArithmetic(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("symbol {symbol} has arity {expected} but tuple has {found} entries")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown relation symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown universe element `{0}`")]
    UnknownElement(String),
    #[error("role violation: {0}")]
    RoleViolation(String),
    #[error("structures are not similar (signatures differ)")]
    SignatureMismatch,
    #[error("budget exceeded: {what} needs {needed}, budget is {budget}")]
    BudgetExceeded {
        what: String,
        needed: u128,
        budget: u128,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance is disconnected")]
    Disconnected,
    #[error("instance too small: {0}")]
    TooSmall(String),
    #[error("malformed linear program: {0}")]
    MalformedProgram(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("malformed distribution: {0}")]
    MalformedDistribution(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("round {round} is beyond the schedule of {limit} rounds")]
    ScheduleExceeded { round: usize, limit: usize },
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
