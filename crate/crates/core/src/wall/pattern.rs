//! Text format for orthogonal brick bonds.
//!
//! One line per course of grid cells, tokens separated by whitespace:
//!
//! ```text
//! # 44-c style band
//! L L L L L
//! V H V H V H V H V H V H
//! . H . H . H . H . H . H
//! ```
//!
//! `H`/`L` (stretcher / long stretcher) extend rightward, `V` (soldier)
//! extends downward, `.` is an empty cell or the continuation of a soldier
//! from a line above. A token may carry an explicit span in grid cells
//! (`H4`, `V3`); a bare letter takes the kind's natural span from
//! [`PatternConfig`]. Lines starting with `#` and blank lines are ignored.

use serde::{Deserialize, Serialize};

use super::{BrickKind, WallError};
use crate::scalar::Real;

/// Grid geometry and the spans used for bare tokens.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatternConfig<T> {
    /// Grid pitch in mm; must equal brick face height plus joint.
    pub cell_unit: T,
    pub joint: T,
    pub recess: T,
    pub h_span: u32,
    pub v_span: u32,
    pub l_span: u32,
}

impl<T: Real> Default for PatternConfig<T> {
    fn default() -> Self {
        Self {
            cell_unit: T::lit(60.0),
            joint: T::lit(15.0),
            recess: T::lit(12.0),
            h_span: 4,
            v_span: 4,
            l_span: 6,
        }
    }
}

impl<T: Real> PatternConfig<T> {
    /// Natural spans for a brick of the given face length.
    pub fn for_brick(face_length: T, face_height: T, long_length: T, joint: T, recess: T) -> Self {
        let cell_unit = face_height + joint;
        let span = |len: T| ((len + joint) / cell_unit).ceil().to_u32().unwrap_or(1).max(1);
        Self {
            cell_unit,
            joint,
            recess,
            h_span: span(face_length),
            v_span: span(face_length),
            l_span: span(long_length),
        }
    }

    fn natural_span(&self, kind: BrickKind) -> u32 {
        match kind {
            BrickKind::H => self.h_span,
            BrickKind::V => self.v_span,
            BrickKind::L => self.l_span,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub row: u32,
    pub col: u32,
    pub kind: BrickKind,
    pub span: u32,
}

impl Placement {
    /// Cells covered, as `(row, col)`.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.span).map(move |k| match self.kind {
            BrickKind::V => (self.row + k, self.col),
            BrickKind::H | BrickKind::L => (self.row, self.col + k),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    Empty,
    /// Covered by the placement with this index.
    Brick(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallPattern<T> {
    pub rows: u32,
    pub cols: u32,
    /// Row-major placement origins, in the order bricks are numbered.
    pub placements: Vec<Placement>,
    pub cell_unit: T,
    pub joint: T,
    pub recess: T,
}

impl<T: Real> WallPattern<T> {
    /// Occupancy grid, row-major.
    pub fn cells(&self) -> Vec<Cell> {
        let mut grid = vec![Cell::Empty; (self.rows * self.cols) as usize];
        for (i, p) in self.placements.iter().enumerate() {
            for (r, c) in p.cells() {
                grid[(r * self.cols + c) as usize] = Cell::Brick(i);
            }
        }
        grid
    }

    pub fn width_mm(&self) -> T {
        T::lit(self.cols as f64) * self.cell_unit
    }

    pub fn height_mm(&self) -> T {
        T::lit(self.rows as f64) * self.cell_unit
    }

    pub fn count(&self, kind: BrickKind) -> usize {
        self.placements.iter().filter(|p| p.kind == kind).count()
    }
}

/// Parses with the default [`PatternConfig`].
pub fn parse_pattern<T: Real>(text: &str) -> Result<WallPattern<T>, WallError> {
    parse_pattern_with(text, &PatternConfig::default())
}

pub fn parse_pattern_with<T: Real>(
    text: &str,
    config: &PatternConfig<T>,
) -> Result<WallPattern<T>, WallError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(WallError::PatternShape("pattern has no rows".into()));
    }

    // Tokenize first so the grid width is known before placing soldiers.
    let mut rows: Vec<Vec<Option<(BrickKind, u32)>>> = Vec::with_capacity(lines.len());
    for &(line_no, line) in &lines {
        let mut row = Vec::new();
        for token in line.split_whitespace() {
            row.push(parse_token(token, line_no, config)?);
        }
        rows.push(row);
    }

    let widths: Vec<u32> = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|t| match t {
                    Some((BrickKind::H | BrickKind::L, span)) => *span,
                    _ => 1,
                })
                .sum()
        })
        .collect();
    let cols = widths[0];
    if let Some(bad) = widths.iter().position(|&w| w != cols) {
        return Err(WallError::PatternShape(format!(
            "line {} spans {} cells, expected {}",
            lines[bad].0, widths[bad], cols
        )));
    }
    let n_rows = rows.len() as u32;

    let mut occupied = vec![false; (n_rows * cols) as usize];
    let mut placements = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let r = r as u32;
        let mut c = 0u32;
        for token in row {
            match *token {
                None => c += 1,
                Some((kind, span)) => {
                    let p = Placement { row: r, col: c, kind, span };
                    for (pr, pc) in p.cells() {
                        if pr >= n_rows {
                            return Err(WallError::PatternShape(format!(
                                "V{} at line {} runs past the last row",
                                span, lines[r as usize].0
                            )));
                        }
                        let idx = (pr * cols + pc) as usize;
                        if occupied[idx] {
                            return Err(WallError::PatternOverlap { row: pr, col: pc });
                        }
                        occupied[idx] = true;
                    }
                    placements.push(p);
                    c += if kind == BrickKind::V { 1 } else { span };
                }
            }
        }
    }

    Ok(WallPattern {
        rows: n_rows,
        cols,
        placements,
        cell_unit: config.cell_unit,
        joint: config.joint,
        recess: config.recess,
    })
}

fn parse_token<T: Real>(
    token: &str,
    line: usize,
    config: &PatternConfig<T>,
) -> Result<Option<(BrickKind, u32)>, WallError> {
    if token == "." {
        return Ok(None);
    }
    let bad = || WallError::PatternToken { line, token: token.to_string() };
    let mut chars = token.chars();
    let kind = match chars.next() {
        Some('H') => BrickKind::H,
        Some('V') => BrickKind::V,
        Some('L') => BrickKind::L,
        _ => return Err(bad()),
    };
    let rest = chars.as_str();
    let span = if rest.is_empty() {
        config.natural_span(kind)
    } else {
        if !rest.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        rest.parse::<u32>().map_err(|_| bad())?
    };
    if span == 0 {
        return Err(bad());
    }
    Ok(Some((kind, span)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bare_tokens_take_natural_span() {
        let p: WallPattern<f64> = parse_pattern("H H H").unwrap();
        assert_eq!((p.rows, p.cols), (1, 12));
        assert_eq!(p.placements.len(), 3);
        assert!(p.placements.iter().all(|pl| pl.kind == BrickKind::H && pl.span == 4));
        assert_eq!(p.placements[2].col, 8);
    }

    #[test]
    fn explicit_spans_and_soldiers() {
        let p: WallPattern<f64> = parse_pattern("V2 H3\n. H1 . .").unwrap();
        assert_eq!((p.rows, p.cols), (2, 4));
        assert_eq!(p.placements.len(), 3);
        assert_eq!(p.placements[0], Placement { row: 0, col: 0, kind: BrickKind::V, span: 2 });
        assert_eq!(p.placements[2], Placement { row: 1, col: 1, kind: BrickKind::H, span: 1 });
        let cells = p.cells();
        assert_eq!(cells[4], Cell::Brick(0));
        assert_eq!(cells[6], Cell::Empty);
    }

    #[test]
    fn overlap_with_soldier_from_above() {
        let err = parse_pattern::<f64>(". V2 .\nH2 .").unwrap_err();
        assert_eq!(err, WallError::PatternOverlap { row: 1, col: 1 });
    }

    #[test]
    fn ragged_rows_and_unknown_tokens() {
        assert!(matches!(parse_pattern::<f64>("H1 H1\nH1"), Err(WallError::PatternShape(_))));
        assert!(matches!(
            parse_pattern::<f64>("H1 X"),
            Err(WallError::PatternToken { line: 1, .. })
        ));
        assert!(matches!(parse_pattern::<f64>("H0"), Err(WallError::PatternToken { .. })));
        assert!(matches!(parse_pattern::<f64>("Hx"), Err(WallError::PatternToken { .. })));
        assert!(matches!(parse_pattern::<f64>("V3\n."), Err(WallError::PatternShape(_))));
        assert!(matches!(parse_pattern::<f64>("# only a comment\n\n"), Err(WallError::PatternShape(_))));
    }

    #[test]
    fn comments_are_skipped() {
        let p: WallPattern<f64> = parse_pattern("# header\n\nH1 . # trailing\n. .\n").unwrap();
        assert_eq!((p.rows, p.cols), (2, 2));
        assert_eq!(p.placements.len(), 1);
    }
}
