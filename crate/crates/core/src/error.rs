use thiserror::Error;

pub type Result<T> = std::result::Result<T, QbfError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QbfError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("division by zero: {0}")]
    DivisionByZero(String),

    #[error("{what}: no convergence after {terms} terms")]
    NonConvergence { what: String, terms: usize },

    #[error("q-integral tail has not decayed at depth {depth} (last term {last_term:e}, sum {sum:e})")]
    TailNotConverged { depth: usize, last_term: f64, sum: f64 },

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("k = {k} is outside the asymptotic regime of the zero bounds")]
    OutOfRegime { k: usize },

    #[error("no sign change for zero {k} on [{lo}, {hi}]")]
    NoSignChange { k: usize, lo: f64, hi: f64 },

    #[error("precision limit of {0} bits reached")]
    PrecisionExhausted(u32),

    #[error("inconsistent results: {0}")]
    Inconsistent(String),

    #[error("missing value: {0}")]
    MissingValue(String),
}
