use thiserror::Error;

/// Errors raised by the solver, the certificate machinery and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("transition row for state `{state}` at ({row}, {col}) sums to {sum}")]
    NonStochasticRow {
        state: String,
        row: usize,
        col: usize,
        sum: f64,
    },

    #[error("negative probability {value} in transition row for state `{state}` at ({row}, {col})")]
    NegativeProbability {
        state: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("non-finite entry: {0}")]
    NonFiniteEntry(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("duplicate state `{0}`")]
    DuplicateState(String),

    #[error("malformed game description: {0}")]
    Malformed(String),

    #[error("game has no active state and is not flagged trivial")]
    NoActiveState,

    #[error("discount factor {0} outside the admissible range")]
    InvalidDiscount(f64),

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("invalid discount grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("game is not recursive: active state `{0}` has a nonzero stage payoff")]
    NotRecursive(String),

    #[error("certificate is not valid: {0}")]
    CertificateNotValid(String),

    #[error("strategy does not match game: {0}")]
    StrategyMismatch(String),

    #[error("iteration cap of {cap} reached before the a priori bound of {bound} iterations")]
    IterationCap { cap: u64, bound: u64 },

    #[error("unknown game `{0}`")]
    UnknownGame(String),

    #[error("adversary list is empty")]
    EmptyAdversaryList,

    #[error("linear program reported {0}; the shifted matrix-game program is always feasible and bounded")]
    SolverDefect(&'static str),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
