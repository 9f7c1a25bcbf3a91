//! Pixel-level primitives: grayscale conversion, spatial gradients, the
//! visual stability score, and Gaussian-noise perturbation.
//!
//! The stability score is the population variance of per-pixel gradient
//! magnitudes. Spatially diffuse malicious overlays suppress local structural
//! variation, so they score abnormally low compared to ordinary webpage
//! renders. Everything here is a pure function over immutable buffers and is
//! safe to call from many threads at once.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BT.601 luma weights. The grayscale formula is not pinned by the score
/// definition itself; BT.601 is the convention most OCR tooling assumes, and
/// threshold calibration absorbs the scale choice.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// An owned, decoded RGB raster. The sole detector input.
///
/// Row-major, three bytes per pixel. Images narrower or shorter than two
/// pixels are rejected at construction: gradients are undefined on them and
/// scoring such inputs as "perfectly stable" would silently classify
/// non-images.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Screenshot {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Screenshot {
    /// Minimum edge length for which gradients are defined.
    pub const MIN_DIMENSION: usize = 2;

    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width < Self::MIN_DIMENSION || height < Self::MIN_DIMENSION {
            return Err(Error::invalid_input(format!(
                "screenshot must be at least {0}x{0} pixels, got {width}x{height}",
                Self::MIN_DIMENSION
            )));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Error::invalid_input("screenshot dimensions overflow"))?;
        if pixels.len() != expected {
            return Err(Error::invalid_input(format!(
                "pixel buffer length {} does not match {width}x{height}x3 = {expected}",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Solid-color screenshot, mostly useful for tests and fixtures.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw row-major RGB bytes.
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn rgb(&self, row: usize, col: usize) -> [u8; 3] {
        let base = (row * self.width + col) * 3;
        [
            self.pixels[base],
            self.pixels[base + 1],
            self.pixels[base + 2],
        ]
    }

    pub fn set_rgb(&mut self, row: usize, col: usize, rgb: [u8; 3]) {
        let base = (row * self.width + col) * 3;
        self.pixels[base..base + 3].copy_from_slice(&rgb);
    }
}

/// Real-valued luminance raster produced by [`to_grayscale`].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    luminance: Vec<f64>,
}

impl GrayImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn luminance(&self) -> &[f64] {
        &self.luminance
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.luminance[row * self.width + col]
    }
}

/// Per-pixel gradient magnitudes ||∇x||₂ for a [`GrayImage`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    magnitudes: Vec<f64>,
}

impl GradientField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.magnitudes[row * self.width + col]
    }
}

/// Stability score plus the gradient statistics it derives from.
///
/// `score` is the population variance of gradient magnitudes over all
/// `pixel_count` locations: E[m²] − (E[m])².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VsiReport {
    pub score: f64,
    pub mean_magnitude: f64,
    pub mean_square_magnitude: f64,
    pub pixel_count: usize,
}

/// Zero-mean additive Gaussian noise, in intensity units, with a fixed RNG
/// seed so perturbation sweeps are reproducible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::invalid_input(format!(
                "noise sigma must be finite and nonnegative, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }
}

/// Weighted BT.601 luminance, kept real-valued (no rounding).
pub fn to_grayscale(img: &Screenshot) -> GrayImage {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    let luminance = img
        .pixels
        .chunks_exact(3)
        .map(|px| wr * px[0] as f64 + wg * px[1] as f64 + wb * px[2] as f64)
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        luminance,
    }
}

/// Luminance of a single RGB triple under the project-wide weights.
pub fn luminance_of(rgb: [u8; 3]) -> f64 {
    LUMA_WEIGHTS[0] * rgb[0] as f64 + LUMA_WEIGHTS[1] * rgb[1] as f64 + LUMA_WEIGHTS[2] * rgb[2] as f64
}

/// Spatial gradient magnitudes: central differences in the interior,
/// one-sided differences on the borders.
///
/// Central differences are the cheapest parameter-free stencil that keeps the
/// whole scoring path at one pass over the pixels.
pub fn gradient_field(gray: &GrayImage) -> Result<GradientField> {
    let (w, h) = (gray.width, gray.height);
    if w < 2 || h < 2 {
        return Err(Error::invalid_input(format!(
            "gradient field requires at least 2x2 pixels, got {w}x{h}"
        )));
    }
    let lum = &gray.luminance;
    let mut magnitudes = Vec::with_capacity(w * h);
    for i in 0..h {
        let row = i * w;
        let row_up = i.saturating_sub(1) * w;
        let row_down = (i + 1).min(h - 1) * w;
        let dy_scale = if i == 0 || i == h - 1 { 1.0 } else { 0.5 };
        for j in 0..w {
            let left = lum[row + j.saturating_sub(1)];
            let right = lum[row + (j + 1).min(w - 1)];
            let dx_scale = if j == 0 || j == w - 1 { 1.0 } else { 0.5 };
            let gx = (right - left) * dx_scale;
            let gy = (lum[row_down + j] - lum[row_up + j]) * dy_scale;
            magnitudes.push((gx * gx + gy * gy).sqrt());
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        magnitudes,
    })
}

/// Variance of gradient magnitudes over every spatial location, computed in
/// a single pass with O(1) state beyond the gradient field itself.
pub fn vsi_score(img: &Screenshot) -> Result<VsiReport> {
    let gray = to_grayscale(img);
    let field = gradient_field(&gray)?;
    Ok(vsi_from_field(&field))
}

/// Scoring half of [`vsi_score`], split out so callers that already hold a
/// gradient field can reuse it.
pub fn vsi_from_field(field: &GradientField) -> VsiReport {
    let n = field.magnitudes.len();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &m in &field.magnitudes {
        sum += m;
        sum_sq += m * m;
    }
    let mean = sum / n as f64;
    let mean_sq = sum_sq / n as f64;
    VsiReport {
        // Variance is nonnegative by definition; clamp the float residue.
        score: (mean_sq - mean * mean).max(0.0),
        mean_magnitude: mean,
        mean_square_magnitude: mean_sq,
        pixel_count: n,
    }
}

/// Perturb every channel independently with N(0, σ²), round to nearest and
/// clamp to [0, 255]. σ = 0 returns the input unchanged; a fixed seed gives a
/// byte-identical result on every run.
pub fn add_gaussian_noise(img: &Screenshot, spec: &NoiseSpec) -> Screenshot {
    if spec.sigma == 0.0 {
        return img.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let normal = Normal::new(0.0, spec.sigma).expect("sigma validated at NoiseSpec construction");
    let pixels = img
        .pixels
        .iter()
        .map(|&c| (c as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Screenshot {
        width: img.width,
        height: img.height,
        pixels,
    }
}
