//! Subprocess wrapper for a Tesseract-compatible OCR executable.
//!
//! The raster is written to a temporary PNG and the engine is invoked across
//! a process boundary with a hard deadline; a hung engine is killed rather
//! than stalling the pre-action pipeline. Two shipped configurations differ
//! in engine mode and page segmentation, mirroring the usual "default" and
//! "sparse text" operating points.

use std::io::Read;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::imaging::Screenshot;

use super::engine::{EngineFragment, TextExtractor};

/// How to invoke the engine executable.
#[derive(Debug, Clone)]
pub struct TesseractConfig {
    /// Executable name or path (resolved via PATH when bare).
    pub executable: PathBuf,
    /// Language pack passed as `-l`.
    pub language: String,
    /// OCR engine mode (`--oem`).
    pub oem: u8,
    /// Page segmentation mode (`--psm`).
    pub psm: u8,
    /// Hard per-invocation deadline.
    pub timeout: Duration,
}

impl TesseractConfig {
    /// Default engine, automatic page segmentation.
    pub fn standard() -> Self {
        Self {
            executable: PathBuf::from("tesseract"),
            language: "eng".into(),
            oem: 3,
            psm: 3,
            timeout: Duration::from_secs(20),
        }
    }

    /// LSTM-only engine with uniform-block segmentation; tends to pick up
    /// text the automatic segmenter discards on busy pages.
    pub fn alternative() -> Self {
        Self {
            oem: 1,
            psm: 6,
            ..Self::standard()
        }
    }

    pub fn with_executable(mut self, path: impl Into<PathBuf>) -> Self {
        self.executable = path.into();
        self
    }

    pub fn with_language(mut self, lang: impl Into<String>) -> Self {
        self.language = lang.into();
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

/// Tesseract-compatible engine behind the extractor boundary.
pub struct TesseractExtractor {
    cfg: TesseractConfig,
    name: String,
}

impl TesseractExtractor {
    pub fn new(cfg: TesseractConfig) -> Self {
        let name = format!("tesseract(oem={},psm={})", cfg.oem, cfg.psm);
        Self { cfg, name }
    }

    pub fn standard() -> Self {
        Self::new(TesseractConfig::standard())
    }

    pub fn alternative() -> Self {
        Self::new(TesseractConfig::alternative())
    }

    fn write_png(&self, img: &Screenshot, path: &std::path::Path) -> Result<()> {
        let buffer = image::RgbImage::from_raw(
            img.width() as u32,
            img.height() as u32,
            img.pixels().to_vec(),
        )
        .expect("screenshot buffer length is validated at construction");
        buffer
            .save(path)
            .map_err(|e| Error::Serialization(format!("failed to encode temp png: {e}")))
    }
}

impl TextExtractor for TesseractExtractor {
    fn name(&self) -> &str {
        &self.name
    }

    fn extract(&self, img: &Screenshot) -> Result<Vec<EngineFragment>> {
        let dir = tempfile::tempdir()?;
        let input = dir.path().join("view.png");
        self.write_png(img, &input)?;

        let mut child = Command::new(&self.cfg.executable)
            .arg(&input)
            .arg("stdout")
            .arg("-l")
            .arg(&self.cfg.language)
            .arg("--oem")
            .arg(self.cfg.oem.to_string())
            .arg("--psm")
            .arg(self.cfg.psm.to_string())
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::ExtractionUnavailable {
                engine: self.name.clone(),
                message: format!("cannot launch {}: {e}", self.cfg.executable.display()),
            })?;

        // Drain the pipes on helper threads so a chatty engine can't block
        // on a full pipe while we poll for exit.
        let mut stdout_pipe = child.stdout.take().expect("stdout piped");
        let mut stderr_pipe = child.stderr.take().expect("stderr piped");
        let stdout_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stdout_pipe.read_to_end(&mut buf);
            buf
        });
        let stderr_reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            let _ = stderr_pipe.read_to_end(&mut buf);
            buf
        });

        let deadline = Instant::now() + self.cfg.timeout;
        let status = loop {
            match child.try_wait()? {
                Some(status) => break status,
                None => {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Err(Error::ExtractionTimeout {
                            engine: self.name.clone(),
                            message: format!("no result within {:?}", self.cfg.timeout),
                            partial: Vec::new(),
                        });
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
            }
        };

        let stdout = stdout_reader.join().unwrap_or_default();
        let stderr = stderr_reader.join().unwrap_or_default();
        if !status.success() {
            return Err(Error::ExtractionFailed {
                engine: self.name.clone(),
                message: format!(
                    "exit status {status}: {}",
                    String::from_utf8_lossy(&stderr).trim()
                ),
            });
        }

        let text = String::from_utf8_lossy(&stdout);
        Ok(text
            .lines()
            .filter_map(|line| {
                let trimmed = line.trim();
                (!trimmed.is_empty()).then(|| EngineFragment::new(trimmed, None))
            })
            .collect())
    }
}
