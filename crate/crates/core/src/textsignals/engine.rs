//! The text-extraction engine boundary.

use crate::error::{Error, Result};
use crate::imaging::Screenshot;

/// Raw engine output before view provenance is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineFragment {
    pub text: String,
    pub confidence: Option<f64>,
}

impl EngineFragment {
    pub fn new(text: impl Into<String>, confidence: Option<f64>) -> Self {
        Self {
            text: text.into(),
            confidence,
        }
    }
}

/// Anything that can turn a raster into text fragments: a local OCR process,
/// the built-in glyph matcher, or a remote vision endpoint. Implementations
/// must be safe to call concurrently.
pub trait TextExtractor: Send + Sync {
    /// Short engine identifier used in errors and reports.
    fn name(&self) -> &str;

    fn extract(&self, img: &Screenshot) -> Result<Vec<EngineFragment>>;
}

/// Stand-in for a disabled engine: always unavailable. Detection falls back
/// to the visual branch alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullExtractor;

impl TextExtractor for NullExtractor {
    fn name(&self) -> &str {
        "none"
    }

    fn extract(&self, _img: &Screenshot) -> Result<Vec<EngineFragment>> {
        Err(Error::ExtractionUnavailable {
            engine: "none".into(),
            message: "text extraction disabled".into(),
        })
    }
}
