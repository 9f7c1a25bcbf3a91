//! Built-in template-matching extractor for the embedded bitmap font.
//!
//! A deliberately small OCR model: binarize at a fixed ink threshold (dark
//! strokes on a light surround), slide an 8x8 window, and match cells against
//! the font templates by Hamming distance. It reads exactly the kind of text
//! the fixture renderer produces, which makes the whole pipeline testable and
//! benchmarkable with no external OCR install. It is also the fallback engine
//! on hosts without one.

use crate::error::Result;
use crate::font::{GLYPHS, GLYPH_SIZE};
use crate::imaging::{to_grayscale, Screenshot};

use super::engine::{EngineFragment, TextExtractor};

/// Missing template ink tolerated per match (capped harder for sparse
/// glyphs so a couple of stray pixels cannot impersonate punctuation).
const MISSING_CAP: u32 = 2;
/// Stray ink pixels tolerated inside a matched cell.
const EXTRA_CAP: u32 = 3;

/// Glyph matcher over the embedded font.
#[derive(Debug, Clone)]
pub struct GlyphExtractor {
    /// Luminance below this is ink.
    ink_threshold: f64,
}

impl Default for GlyphExtractor {
    fn default() -> Self {
        Self {
            ink_threshold: 128.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    row: usize,
    col: usize,
    ch: char,
    dist: u32,
    /// Template popcount; on equal distance the denser template is the
    /// fuller explanation of the ink (a ':' outranks the '.' its top half
    /// imitates in a shifted window).
    pop: u32,
}

impl GlyphExtractor {
    pub fn new(ink_threshold: f64) -> Self {
        Self { ink_threshold }
    }

    fn scan(&self, ink: &[u8], w: usize, h: usize) -> Vec<Hit> {
        // Integral image of ink counts for a cheap per-cell prefilter.
        let mut integral = vec![0u32; (w + 1) * (h + 1)];
        for r in 0..h {
            let mut row_sum = 0u32;
            for c in 0..w {
                row_sum += ink[r * w + c] as u32;
                integral[(r + 1) * (w + 1) + (c + 1)] = integral[r * (w + 1) + (c + 1)] + row_sum;
            }
        }
        let cell_count = |r: usize, c: usize| -> u32 {
            integral[(r + GLYPH_SIZE) * (w + 1) + (c + GLYPH_SIZE)] + integral[r * (w + 1) + c]
                - integral[r * (w + 1) + (c + GLYPH_SIZE)]
                - integral[(r + GLYPH_SIZE) * (w + 1) + c]
        };

        let max_ink = GLYPHS.iter().map(|g| g.popcount).max().unwrap_or(64) + EXTRA_CAP;

        let mut hits = Vec::new();
        for r in 0..=h.saturating_sub(GLYPH_SIZE) {
            for c in 0..=w.saturating_sub(GLYPH_SIZE) {
                let count = cell_count(r, c);
                if count == 0 || count > max_ink {
                    continue;
                }
                let mut cell = 0u64;
                for dr in 0..GLYPH_SIZE {
                    let base = (r + dr) * w + c;
                    for dc in 0..GLYPH_SIZE {
                        cell |= (ink[base + dc] as u64) << (dr * GLYPH_SIZE + dc);
                    }
                }
                let mut best: Option<(u32, u32, char)> = None;
                for glyph in GLYPHS.iter() {
                    if count.abs_diff(glyph.popcount) > MISSING_CAP + EXTRA_CAP {
                        continue;
                    }
                    let missing = (glyph.bits & !cell).count_ones();
                    if missing > MISSING_CAP.min(glyph.popcount.saturating_sub(2)) {
                        continue;
                    }
                    let extra = (cell & !glyph.bits).count_ones();
                    if extra > EXTRA_CAP {
                        continue;
                    }
                    let dist = missing + extra;
                    let better = best.is_none_or(|(bd, bp, bc)| {
                        (dist, std::cmp::Reverse(glyph.popcount), glyph.ch)
                            < (bd, std::cmp::Reverse(bp), bc)
                    });
                    if better {
                        best = Some((dist, glyph.popcount, glyph.ch));
                    }
                }
                if let Some((dist, pop, ch)) = best {
                    hits.push(Hit {
                        row: r,
                        col: c,
                        ch,
                        dist,
                        pop,
                    });
                }
            }
        }
        hits
    }

    /// Keep the best hit per cell-sized neighborhood. The same stroke pattern
    /// often matches at off-by-one offsets with a worse distance; true
    /// baseline hits win because they match more exactly.
    fn suppress_overlaps(mut hits: Vec<Hit>) -> Vec<Hit> {
        hits.sort_by_key(|h| (h.dist, std::cmp::Reverse(h.pop), h.row, h.col));
        let mut kept: Vec<Hit> = Vec::new();
        'next: for hit in hits {
            for k in &kept {
                if hit.row.abs_diff(k.row) < GLYPH_SIZE && hit.col.abs_diff(k.col) < GLYPH_SIZE {
                    continue 'next;
                }
            }
            kept.push(hit);
        }
        kept
    }

    /// Group hits into text lines and emit one fragment per run. A one-cell
    /// gap reads as a space; anything wider starts a new fragment.
    fn assemble(hits: Vec<Hit>) -> Vec<EngineFragment> {
        let mut hits = hits;
        hits.sort_by_key(|h| (h.row, h.col));

        let mut fragments = Vec::new();
        let mut text = String::new();
        let mut dist_sum = 0u32;
        let mut glyph_count = 0u32;
        let mut prev: Option<Hit> = None;

        let flush =
            |text: &mut String, dist_sum: &mut u32, glyph_count: &mut u32, out: &mut Vec<EngineFragment>| {
                if !text.is_empty() {
                    let mean_dist = *dist_sum as f64 / *glyph_count as f64;
                    out.push(EngineFragment::new(
                        text.clone(),
                        Some(1.0 - mean_dist / 64.0),
                    ));
                    text.clear();
                    *dist_sum = 0;
                    *glyph_count = 0;
                }
            };

        for hit in hits {
            if let Some(p) = prev {
                if hit.row != p.row {
                    flush(&mut text, &mut dist_sum, &mut glyph_count, &mut fragments);
                } else {
                    let gap = hit.col - p.col;
                    if gap > GLYPH_SIZE + 3 && gap <= 2 * GLYPH_SIZE + 3 {
                        text.push(' ');
                    } else if gap > 2 * GLYPH_SIZE + 3 {
                        flush(&mut text, &mut dist_sum, &mut glyph_count, &mut fragments);
                    }
                }
            }
            text.push(hit.ch);
            dist_sum += hit.dist;
            glyph_count += 1;
            prev = Some(hit);
        }
        flush(&mut text, &mut dist_sum, &mut glyph_count, &mut fragments);
        fragments
    }
}

impl TextExtractor for GlyphExtractor {
    fn name(&self) -> &str {
        "builtin"
    }

    fn extract(&self, img: &Screenshot) -> Result<Vec<EngineFragment>> {
        let gray = to_grayscale(img);
        let (w, h) = (gray.width(), gray.height());
        if w < GLYPH_SIZE || h < GLYPH_SIZE {
            return Ok(Vec::new());
        }
        let ink: Vec<u8> = gray
            .luminance()
            .iter()
            .map(|&y| (y < self.ink_threshold) as u8)
            .collect();
        let hits = self.scan(&ink, w, h);
        let kept = Self::suppress_overlaps(hits);
        Ok(Self::assemble(kept))
    }
}
