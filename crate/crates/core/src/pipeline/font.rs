//! A 3×5 bitmap font for overlay labels. Letters are case-insensitive;
//! characters outside the table draw as a filled cell.

pub const GLYPH_W: usize = 3;
pub const GLYPH_H: usize = 5;
/// Horizontal advance per character, px.
pub const ADVANCE: usize = GLYPH_W + 1;

/// Rows top to bottom, three columns each, `1` = ink.
const GLYPHS: &[(char, &str)] = &[
    ('a', "010101111101101"),
    ('b', "110101110101110"),
    ('c', "011100100100011"),
    ('d', "110101101101110"),
    ('e', "111100110100111"),
    ('f', "111100110100100"),
    ('g', "011100101101011"),
    ('h', "101101111101101"),
    ('i', "111010010010111"),
    ('j', "001001001101010"),
    ('k', "101101110101101"),
    ('l', "100100100100111"),
    ('m', "101111111101101"),
    ('n', "110101101101101"),
    ('o', "010101101101010"),
    ('p', "110101110100100"),
    ('q', "010101101110011"),
    ('r', "110101110101101"),
    ('s', "011100010001110"),
    ('t', "111010010010010"),
    ('u', "101101101101111"),
    ('v', "101101101101010"),
    ('w', "101101111111101"),
    ('x', "101101010101101"),
    ('y', "101101010010010"),
    ('z', "111001010100111"),
    ('0', "111101101101111"),
    ('1', "010110010010111"),
    ('2', "110001010100111"),
    ('3', "110001010001110"),
    ('4', "101101111001001"),
    ('5', "111100110001110"),
    ('6', "011100111101111"),
    ('7', "111001010010010"),
    ('8', "111101111101111"),
    ('9', "111101111001110"),
    ('-', "000000111000000"),
    ('.', "000000000000010"),
    ('_', "000000000000111"),
    (' ', "000000000000000"),
];

const UNKNOWN: &str = "111111111111111";

/// Ink pixels `(dx, dy)` of `text` laid out from the origin.
pub fn ink(text: &str) -> impl Iterator<Item = (usize, usize)> + '_ {
    text.chars().enumerate().flat_map(|(i, ch)| {
        let lower = ch.to_ascii_lowercase();
        let bits = GLYPHS.iter().find(|(c, _)| *c == lower).map_or(UNKNOWN, |(_, b)| *b);
        bits.bytes()
            .enumerate()
            .filter(|&(_, b)| b == b'1')
            .map(move |(k, _)| (i * ADVANCE + k % GLYPH_W, k / GLYPH_W))
    })
}
