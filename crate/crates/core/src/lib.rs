//! Screenshot-level prompt injection detection for vision-driven web agents.
//!
//! Injected pages betray themselves two ways: spatially diffuse overlays
//! suppress the variance of local gradient magnitudes, and injected
//! instructions carry action-oriented text that survives extraction even when
//! it is visually concealed. This crate scores both signals and fuses them:
//!
//! * [`imaging`] — grayscale, gradients, the stability score, noise
//!   perturbation.
//! * [`reversal`] — selective contrast inversion of near-white pixels, the
//!   preprocessing that surfaces concealed text for the second OCR view.
//! * [`textsignals`] — the pluggable extraction boundary (subprocess OCR,
//!   built-in glyph matcher), dual-view candidate union, and rule matching.
//! * [`detector`] — benign-quantile threshold calibration and OR-fusion into
//!   a [`detector::Verdict`].
//! * [`bench`] — manifest ingestion, metrics/ROC, robustness sweeps, latency
//!   profiling, and a synthetic corpus generator so everything runs with zero
//!   external data.
//!
//! The whole pipeline is CPU-only and built for a pre-action latency budget:
//! scoring is one pass over the pixels, and text extraction is the only stage
//! allowed to cost real time.

pub mod bench;
pub mod detector;
pub mod error;
pub mod font;
pub mod imaging;
pub mod reversal;
pub mod textsignals;

pub use error::{Error, Result};
