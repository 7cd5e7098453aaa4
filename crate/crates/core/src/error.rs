use thiserror::Error;

/// Errors surfaced by the reconstruction toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands disagree on shape or a shape is inconsistent with a model.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    /// A parameter violates its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A value that must be finite is NaN or infinite.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// A dense solve met a (numerically) singular system.
    #[error("singular system in {context}: {detail}")]
    Singular { context: &'static str, detail: String },
}

impl Error {
    pub(crate) fn dims(
        context: &'static str,
        expected: impl Into<String>,
        actual: impl Into<String>,
    ) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.into(),
            actual: actual.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
