use thiserror::Error;

#[derive(Debug, Error)]
pub enum LelError {
    /// Input has the wrong shape or symmetry for the requested operation.
    #[error("structural error: {0}")]
    Structural(String),

    #[error("singular input: {what} (eigenvalue {eigenvalue:e})")]
    Singular { what: String, eigenvalue: f64 },

    /// A named generator or state condition failed; `index` points at the offending jump term.
    #[error("validation failed: {condition}{}: {detail}", index.map(|j| format!(" (term {j})")).unwrap_or_default())]
    Validation {
        condition: String,
        index: Option<usize>,
        detail: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl LelError {
    pub(crate) fn validation(condition: &str, index: Option<usize>, detail: impl Into<String>) -> Self {
        LelError::Validation {
            condition: condition.to_string(),
            index,
            detail: detail.into(),
        }
    }

    /// True for failures that the CLI maps to the "validation" exit status.
    pub fn is_validation(&self) -> bool {
        matches!(self, LelError::Validation { .. } | LelError::Structural(_))
    }
}

pub type Result<T> = std::result::Result<T, LelError>;
