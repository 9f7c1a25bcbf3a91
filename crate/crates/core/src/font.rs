//! Embedded 8x8 bitmap font used by the fixture renderer and the built-in
//! glyph extractor.
//!
//! Glyphs occupy a 5x7 box inside the 8x8 cell (columns 0-4, rows 0-6); the
//! remaining row and columns stay blank so adjacent glyphs never touch.
//! Lowercase input renders with the uppercase shapes, which is all the rule
//! matcher needs since matching happens on case-folded text.

use std::sync::LazyLock;

/// Cell edge in pixels. Text advances one cell per character.
pub const GLYPH_SIZE: usize = 8;

/// A glyph bitmap packed row-major into a u64: bit (row * 8 + col) is ink.
#[derive(Debug, Clone, Copy)]
pub struct Glyph {
    pub ch: char,
    pub bits: u64,
    pub popcount: u32,
}

/// `#` = ink, anything else = background. Row 7 is implicitly blank.
type GlyphArt = (char, [&'static str; 7]);

#[rustfmt::skip]
const GLYPH_ART: &[GlyphArt] = &[
    ('A', [".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('B', ["####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."]),
    ('C', [".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."]),
    ('D', ["###..", "#..#.", "#...#", "#...#", "#...#", "#..#.", "###.."]),
    ('E', ["#####", "#....", "#....", "####.", "#....", "#....", "#####"]),
    ('F', ["#####", "#....", "#....", "####.", "#....", "#....", "#...."]),
    ('G', [".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."]),
    ('H', ["#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"]),
    ('I', [".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('J', ["..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."]),
    ('K', ["#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"]),
    ('L', ["#....", "#....", "#....", "#....", "#....", "#....", "#####"]),
    ('M', ["#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"]),
    ('N', ["#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"]),
    ('O', [".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('P', ["####.", "#...#", "#...#", "####.", "#....", "#....", "#...."]),
    ('Q', [".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"]),
    ('R', ["####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"]),
    ('S', [".####", "#....", "#....", ".###.", "....#", "....#", "####."]),
    ('T', ["#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."]),
    ('U', ["#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."]),
    ('V', ["#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."]),
    ('W', ["#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"]),
    ('X', ["#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"]),
    ('Y', ["#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."]),
    ('Z', ["#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"]),
    ('0', [".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."]),
    ('1', ["..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."]),
    ('2', [".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"]),
    ('3', [".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."]),
    ('4', ["...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."]),
    ('5', ["#####", "#....", "####.", "....#", "....#", "#...#", ".###."]),
    ('6', [".###.", "#....", "#....", "####.", "#...#", "#...#", ".###."]),
    ('7', ["#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."]),
    ('8', [".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."]),
    ('9', [".###.", "#...#", "#...#", ".####", "....#", "....#", ".###."]),
    ('.', [".....", ".....", ".....", ".....", ".....", ".##..", ".##.."]),
    (',', [".....", ".....", ".....", ".....", ".##..", "..#..", ".#..."]),
    (':', [".....", ".##..", ".##..", ".....", ".##..", ".##..", "....."]),
    (';', [".....", ".##..", ".##..", ".....", ".###.", "..#..", ".#..."]),
    ('!', ["..#..", "..#..", "..#..", "..#..", "..#..", ".....", "..#.."]),
    ('?', [".###.", "#...#", "....#", "...#.", "..#..", ".....", "..#.."]),
    ('\'', ["..#..", "..#..", ".#...", ".....", ".....", ".....", "....."]),
    ('"', [".#.#.", ".#.#.", ".....", ".....", ".....", ".....", "....."]),
    ('(', ["...#.", "..#..", ".#...", ".#...", ".#...", "..#..", "...#."]),
    (')', [".#...", "..#..", "...#.", "...#.", "...#.", "..#..", ".#..."]),
    ('-', [".....", ".....", ".....", ".###.", ".....", ".....", "....."]),
    ('_', [".....", ".....", ".....", ".....", ".....", ".....", "#####"]),
    ('/', ["....#", "...#.", "...#.", "..#..", ".#...", ".#...", "#...."]),
    ('$', ["..#..", ".####", "#.#..", ".###.", "..#.#", "####.", "..#.."]),
    ('%', ["##..#", "##.#.", "...#.", "..#..", ".#...", ".#.##", "#..##"]),
    ('&', [".##..", "#..#.", "#..#.", ".##..", "#.#.#", "#..#.", ".##.#"]),
    ('*', ["..#..", "#.#.#", ".###.", "..#..", ".###.", "#.#.#", "..#.."]),
    ('+', [".....", "..#..", "..#..", "#####", "..#..", "..#..", "....."]),
    ('=', [".....", ".....", "#####", ".....", "#####", ".....", "....."]),
    ('<', ["....#", "...#.", "..#..", ".#...", "..#..", "...#.", "....#"]),
    ('>', ["#....", ".#...", "..#..", "...#.", "..#..", ".#...", "#...."]),
    ('@', [".###.", "#...#", "#.###", "#.#.#", "#.##.", "#....", ".####"]),
    ('#', [".#.#.", ".#.#.", "#####", ".#.#.", "#####", ".#.#.", ".#.#."]),
];

fn pack(rows: &[&str; 7]) -> u64 {
    let mut bits = 0u64;
    for (r, row) in rows.iter().enumerate() {
        for (c, ch) in row.chars().enumerate() {
            if ch == '#' {
                bits |= 1u64 << (r * GLYPH_SIZE + c);
            }
        }
    }
    bits
}

/// All glyph templates, in declaration order.
pub static GLYPHS: LazyLock<Vec<Glyph>> = LazyLock::new(|| {
    GLYPH_ART
        .iter()
        .map(|(ch, rows)| {
            let bits = pack(rows);
            Glyph {
                ch: *ch,
                bits,
                popcount: bits.count_ones(),
            }
        })
        .collect()
});

/// Template for one character, mapping lowercase letters onto the uppercase
/// shapes. Returns None for unsupported characters (including space, which is
/// rendered as an empty advance).
pub fn glyph_for(ch: char) -> Option<&'static Glyph> {
    let ch = ch.to_ascii_uppercase();
    GLYPHS.iter().find(|g| g.ch == ch)
}

/// True when every non-space character of `text` has a glyph.
pub fn renderable(text: &str) -> bool {
    text.chars().all(|c| c == ' ' || glyph_for(c).is_some())
}

/// Pixel width of a rendered string.
pub fn text_width(text: &str) -> usize {
    text.chars().count() * GLYPH_SIZE
}

/// Stamp `text` onto an RGB pixel buffer with the given ink color. Pixels
/// outside the buffer are clipped. Background pixels inside each cell are
/// left untouched.
pub fn draw_text(
    pixels: &mut [u8],
    width: usize,
    height: usize,
    top: usize,
    left: usize,
    text: &str,
    ink: [u8; 3],
) {
    let mut col0 = left;
    for ch in text.chars() {
        if ch != ' ' {
            if let Some(glyph) = glyph_for(ch) {
                for r in 0..GLYPH_SIZE {
                    for c in 0..GLYPH_SIZE {
                        if glyph.bits >> (r * GLYPH_SIZE + c) & 1 == 1 {
                            let (y, x) = (top + r, col0 + c);
                            if y < height && x < width {
                                let base = (y * width + x) * 3;
                                pixels[base..base + 3].copy_from_slice(&ink);
                            }
                        }
                    }
                }
            }
        }
        col0 += GLYPH_SIZE;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyphs_fit_the_5x7_box() {
        for g in GLYPHS.iter() {
            for r in 0..GLYPH_SIZE {
                for c in 0..GLYPH_SIZE {
                    if g.bits >> (r * GLYPH_SIZE + c) & 1 == 1 {
                        assert!(r < 7 && c < 5, "glyph '{}' has ink at ({r},{c})", g.ch);
                    }
                }
            }
            assert!(g.popcount >= 3, "glyph '{}' too sparse to match reliably", g.ch);
        }
    }

    #[test]
    fn glyph_identifiers_are_unique() {
        for (i, a) in GLYPHS.iter().enumerate() {
            for b in GLYPHS.iter().skip(i + 1) {
                assert_ne!(a.ch, b.ch);
            }
        }
    }

    #[test]
    fn pairwise_distance_floor() {
        // The matcher disambiguates by nearest template; templates that sit
        // too close together would misread under small amounts of noise.
        let mut min = u32::MAX;
        let mut pair = ('?', '?');
        for (i, a) in GLYPHS.iter().enumerate() {
            for b in GLYPHS.iter().skip(i + 1) {
                let d = (a.bits ^ b.bits).count_ones();
                if d < min {
                    min = d;
                    pair = (a.ch, b.ch);
                }
            }
        }
        assert!(min >= 3, "closest glyph pair {pair:?} at distance {min}");
    }

    #[test]
    fn lowercase_maps_to_uppercase_shapes() {
        assert_eq!(glyph_for('a').unwrap().bits, glyph_for('A').unwrap().bits);
        assert!(glyph_for(' ').is_none());
        assert!(renderable("Click the link below!"));
        assert!(!renderable("日本語"));
    }
}
