use thiserror::Error;

/// Errors raised by the seminorm engines, the asymptotic harness and the CLI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("point {0:?} lies outside the field's domain")]
    OutOfDomain(Vec<f64>),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("budget exceeded: {needed} evaluations requested, cap is {cap}")]
    Budget { needed: u64, cap: u64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("unclassifiable schedule: {0}")]
    Unclassifiable(String),

    #[error("case {case_id}: {source}")]
    Case {
        case_id: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    /// Attach a case identifier, keeping the innermost cause.
    pub fn in_case(self, case_id: &str) -> Self {
        match self {
            e @ Error::Case { .. } => e,
            other => Error::Case {
                case_id: case_id.to_string(),
                source: Box::new(other),
            },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
