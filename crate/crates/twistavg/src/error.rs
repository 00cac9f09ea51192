use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{what} is outside its domain: {detail}")]
    Domain { what: String, detail: String },

    #[error("insufficient precision for {what}: need prec >= {needed}")]
    InsufficientPrec { what: String, needed: usize },

    #[error("tolerance {tol:e} unachievable for {what}: best bound {best:e}")]
    ToleranceUnachievable { what: String, tol: f64, best: f64 },

    #[error("unsatisfiable congruence for index (a={a}, d={d})")]
    UnsatisfiableCongruence { a: i64, d: u64 },

    #[error("local factor average failed to stabilize at p={p} (cap M={cap})")]
    StabilizationFailure { p: u64, cap: u32 },

    #[error("unknown probe '{0}'; available: {1}")]
    UnknownProbe(String, String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn domain(what: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Domain {
            what: what.into(),
            detail: detail.into(),
        }
    }
}
