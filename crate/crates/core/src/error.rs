//! Crate-wide error type.

use crate::textsignals::TextFragment;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input violates a documented precondition (bad dimensions, bad alpha,
    /// empty score collections, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Threshold calibration could not be performed.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A rule file or rule definition is malformed. `rule_id` names the
    /// offending rule when one can be identified.
    #[error("rule configuration error{}: {message}", rule_id.as_deref().map(|id| format!(" in rule '{id}'")).unwrap_or_default())]
    RuleConfig {
        rule_id: Option<String>,
        message: String,
    },

    /// The text-extraction engine could not be reached at all. Callers that
    /// tolerate a missing engine should fall back to a visual-only decision.
    #[error("text extraction unavailable ({engine}): {message}")]
    ExtractionUnavailable { engine: String, message: String },

    /// The engine did not answer within its deadline. Fragments from any view
    /// that did complete are carried along so callers can still use them.
    #[error("text extraction timed out ({engine}): {message}")]
    ExtractionTimeout {
        engine: String,
        message: String,
        partial: Vec<TextFragment>,
    },

    /// Engine ran but produced an unusable response.
    #[error("text extraction failed ({engine}): {message}")]
    ExtractionFailed { engine: String, message: String },

    /// Corpus manifest problems, one entry per offending record.
    #[error("manifest ingestion failed:\n{}", problems.join("\n"))]
    Ingestion { problems: Vec<String> },

    #[error("image decode error for {path}: {source}")]
    ImageDecode {
        path: String,
        #[source]
        source: image::ImageError,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for the engine failures that `decide` downgrades to a
    /// visual-only verdict instead of propagating.
    pub fn is_extraction_failure(&self) -> bool {
        matches!(
            self,
            Error::ExtractionUnavailable { .. }
                | Error::ExtractionTimeout { .. }
                | Error::ExtractionFailed { .. }
        )
    }
}
