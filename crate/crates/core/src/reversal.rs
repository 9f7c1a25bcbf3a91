//! Contrast-polarity reversal preprocessing.
//!
//! Builds a binary mask of near-white pixels (luminance strictly above γ) and
//! channel-wise inverts exactly the masked pixels. Text hidden as near-white
//! strokes on a lighter-than-γ surround becomes dark on light, where ordinary
//! text extraction can see it.
//!
//! The operation is not an involution: reversing changes which pixels are
//! near-white, so applying it twice does not restore the input. It is applied
//! exactly once, to produce the second OCR view.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, GrayImage, Screenshot};

/// Default near-white luminance threshold.
pub const DEFAULT_GAMMA: f64 = 240.0;

/// Near-white threshold configuration. γ is configurable so the reversal can
/// be retuned per OCR engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReversalConfig {
    pub gamma: f64,
}

impl Default for ReversalConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
        }
    }
}

impl ReversalConfig {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..=255.0).contains(&gamma) {
            return Err(Error::invalid_input(format!(
                "gamma must lie in [0, 255], got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }
}

/// Per-pixel binary mask: 1 where luminance strictly exceeds γ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NearWhiteMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl NearWhiteMask {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn at(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Mask of pixels with real-valued luminance strictly above γ.
pub fn near_white_mask(gray: &GrayImage, cfg: &ReversalConfig) -> NearWhiteMask {
    NearWhiteMask {
        width: gray.width(),
        height: gray.height(),
        bits: gray.luminance().iter().map(|&y| y > cfg.gamma).collect(),
    }
}

/// Selectively invert near-white pixels: masked pixels become 255 − c on every
/// channel, unmasked pixels pass through untouched.
pub fn reverse_contrast(img: &Screenshot, cfg: &ReversalConfig) -> Screenshot {
    let gray = to_grayscale(img);
    let mask = near_white_mask(&gray, cfg);
    let mut pixels = Vec::with_capacity(img.pixels().len());
    for (px, &masked) in img.pixels().chunks_exact(3).zip(mask.bits.iter()) {
        if masked {
            pixels.extend_from_slice(&[255 - px[0], 255 - px[1], 255 - px[2]]);
        } else {
            pixels.extend_from_slice(px);
        }
    }
    Screenshot::new(img.width(), img.height(), pixels)
        .expect("dimensions unchanged from a valid screenshot")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::luminance_of;
    use proptest::prelude::*;

    #[test]
    fn gamma_bounds_checked() {
        assert!(ReversalConfig::new(-0.1).is_err());
        assert!(ReversalConfig::new(255.1).is_err());
        assert!(ReversalConfig::new(0.0).is_ok());
        assert!(ReversalConfig::new(255.0).is_ok());
    }

    #[test]
    fn mask_strict_inequality_at_gamma() {
        let cfg = ReversalConfig::default();
        // Y = 255, Y = 240 exactly, and Y = 241.
        let mut img = Screenshot::filled(3, 2, [255, 255, 255]).unwrap();
        for row in 0..2 {
            img.set_rgb(row, 1, [240, 240, 240]);
            img.set_rgb(row, 2, [241, 241, 241]);
        }
        let mask = near_white_mask(&to_grayscale(&img), &cfg);
        for row in 0..2 {
            assert!(mask.at(row, 0), "Y=255 must be masked");
            assert!(!mask.at(row, 1), "Y=240 must not be masked (strict >)");
            assert!(mask.at(row, 2), "Y=241 must be masked");
        }
    }

    #[test]
    fn reversal_of_near_white_pixel() {
        let cfg = ReversalConfig::default();
        let img = Screenshot::filled(2, 2, [250, 250, 250]).unwrap();
        let out = reverse_contrast(&img, &cfg);
        assert_eq!(out.rgb(0, 0), [5, 5, 5]);
    }

    #[test]
    fn dark_pixels_pass_through() {
        let cfg = ReversalConfig::default();
        let img = Screenshot::filled(2, 2, [10, 10, 10]).unwrap();
        assert_eq!(reverse_contrast(&img, &cfg), img);
    }

    #[test]
    fn mixed_channels_invert_channelwise() {
        // (255, 255, 230): Y ≈ 252.1 > 240, so every channel flips.
        let cfg = ReversalConfig::default();
        let rgb = [255, 255, 230];
        assert!(luminance_of(rgb) > 240.0);
        let img = Screenshot::filled(2, 2, rgb).unwrap();
        assert_eq!(reverse_contrast(&img, &cfg).rgb(1, 1), [0, 0, 25]);
    }

    #[test]
    fn mask_recomputation_is_deterministic() {
        let img = Screenshot::filled(5, 4, [243, 10, 250]).unwrap();
        let gray = to_grayscale(&img);
        let cfg = ReversalConfig::default();
        assert_eq!(near_white_mask(&gray, &cfg), near_white_mask(&gray, &cfg));
    }

    proptest! {
        /// Every pixel is either passed through or channel-inverted; no third case.
        #[test]
        fn partition_property(pixels in proptest::collection::vec(any::<u8>(), 48), gamma in 0.0f64..=255.0) {
            let img = Screenshot::new(4, 4, pixels).unwrap();
            let cfg = ReversalConfig::new(gamma).unwrap();
            let out = reverse_contrast(&img, &cfg);
            prop_assert_eq!(out.width(), img.width());
            prop_assert_eq!(out.height(), img.height());
            for i in 0..4 {
                for j in 0..4 {
                    let a = img.rgb(i, j);
                    let b = out.rgb(i, j);
                    let inverted = [255 - a[0], 255 - a[1], 255 - a[2]];
                    let masked = luminance_of(a) > gamma;
                    if masked {
                        prop_assert_eq!(b, inverted);
                    } else {
                        prop_assert_eq!(b, a);
                    }
                }
            }
        }

        /// Images whose max luminance stays at or below γ are untouched.
        #[test]
        fn identity_on_dark_images(pixels in proptest::collection::vec(0u8..=200, 48)) {
            let img = Screenshot::new(4, 4, pixels).unwrap();
            let cfg = ReversalConfig::default();
            prop_assert_eq!(reverse_contrast(&img, &cfg), img);
        }
    }
}
