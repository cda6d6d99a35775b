//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CraError {
    #[error("arithmetic overflow in semiring operation")]
    Overflow,

    #[error("value {0} is not valid for semiring {1}")]
    InvalidValue(String, String),

    #[error("unbound register `{0}`")]
    MissingBinding(String),

    #[error("symbol `{0}` is not in the alphabet")]
    AlphabetError(char),

    #[error("substitutions have mismatched domains")]
    DomainMismatch,

    #[error("expression is not copyless: register `{0}` occurs more than once")]
    CopylessViolation(String),

    #[error("expression mentions registers other than `{0}`")]
    NotUnivariate(String),

    #[error("automaton is not in normal form: {0}")]
    NotNormalForm(String),

    #[error("automaton is not strongly connected: state `{0}` cannot reach state `{1}`")]
    NotStronglyConnected(String, String),

    #[error("function is not non-zero: output is ZERO on word \"{0}\"")]
    NonZeroViolation(String),

    #[error("node is not a leaf")]
    NotALeaf,

    #[error("ambiguity witness: two runs on word \"{0}\" end in state `{1}`")]
    Ambiguity(String, String),

    #[error("word \"{0}\" has {1} accepting completions instead of exactly 1")]
    AcceptanceCount(String, usize),

    #[error("fresh register budget exhausted: needed more than {0} auxiliary registers")]
    RegisterBudget(usize),

    #[error("state budget exceeded: {explored} states explored, {frontier} still on the frontier (limit {limit})")]
    Explosion {
        explored: usize,
        frontier: usize,
        limit: usize,
    },

    #[error("run is stuck at position {0}: no lookahead language matches the suffix")]
    StuckRun(usize),

    #[error("lookahead languages `{0}` and `{1}` on state `{2}` are not disjoint")]
    DisjointnessViolation(String, String, String),

    #[error("run enumeration bound of {0} exceeded")]
    LimitExceeded(usize),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Semantic(String),
}

pub type Result<T> = std::result::Result<T, CraError>;
