//! ASCII diagrams: up to 21 rows of up to 21 whitespace-separated tokens.
//!
//! A token is a gate letter followed by an orientation (`>`, `^`, `<`, `v`),
//! `.` for an empty tile, or `#` for a tile covered by the 2x2 gate whose
//! token sits up and to the left. `X` alone is an unrotated crossover.
//! Lines starting with `//` are comments. Column `i` of row `j` is the tile
//! anchored at half-tile `(2i, 2j)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::circuit::library::Orientation;
use crate::life::Cell;

pub const GRID: usize = 21;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Placement {
    pub letter: char,
    pub orientation: Orientation,
    pub anchor: Cell,
    /// Side length in tiles: 1 or 2.
    pub size: i64,
}

impl Placement {
    pub fn covers(&self, a: Cell) -> bool {
        let s = 2 * self.size;
        (self.anchor.x..self.anchor.x + s).contains(&a.x) && (self.anchor.y..self.anchor.y + s).contains(&a.y)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagram {
    pub placements: Vec<Placement>,
}

impl Diagram {
    /// The placement covering tile anchor `a`.
    pub fn at(&self, a: Cell) -> Option<&Placement> {
        self.placements.iter().find(|p| p.covers(a))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("line {line}, column {col}: unknown token {token:?}")]
    UnknownToken { line: usize, col: usize, token: String },
    #[error("line {line}: more than {GRID} tokens")]
    TooWide { line: usize },
    #[error("more than {GRID} rows")]
    TooTall,
    #[error("line {line}, column {col}: `#` not covered by a 2x2 gate")]
    StrayContinuation { line: usize, col: usize },
    #[error("line {line}, column {col}: 2x2 gate is missing its `#` cells or overlaps another gate")]
    Overlap { line: usize, col: usize },
}

enum Tok {
    Empty,
    Cont,
    Gate(char, Orientation),
}

fn token(t: &str) -> Option<Tok> {
    let mut cs = t.chars();
    match (cs.next()?, cs.next(), cs.next()) {
        ('.', None, _) => Some(Tok::Empty),
        ('#', None, _) => Some(Tok::Cont),
        ('X', None, _) => Some(Tok::Gate('X', Orientation(0))),
        (l, Some(o), None) if l.is_ascii_alphabetic() => Some(Tok::Gate(l, Orientation::from_char(o)?)),
        _ => None,
    }
}

pub fn parse_diagram(text: &str) -> Result<Diagram, DiagramError> {
    let mut grid: BTreeMap<(usize, usize), (Tok, usize)> = BTreeMap::new();
    let mut row = 0;
    for (n, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with("//") {
            continue;
        }
        if row == GRID {
            return Err(DiagramError::TooTall);
        }
        for (col, tok) in t.split_whitespace().enumerate() {
            if col == GRID {
                return Err(DiagramError::TooWide { line: n + 1 });
            }
            let k = token(tok).ok_or_else(|| DiagramError::UnknownToken { line: n + 1, col: col + 1, token: tok.to_string() })?;
            grid.insert((col, row), (k, n + 1));
        }
        row += 1;
    }
    let is_cont = |c: usize, r: usize| matches!(grid.get(&(c, r)), Some((Tok::Cont, _)));
    let mut d = Diagram::default();
    let mut covered = std::collections::BTreeSet::new();
    for (&(col, row), (tok, line)) in &grid {
        if let Tok::Gate(letter, orientation) = *tok {
            let size = if is_cont(col + 1, row) || is_cont(col, row + 1) { 2 } else { 1 };
            if size == 2 {
                if !(is_cont(col + 1, row) && is_cont(col, row + 1) && is_cont(col + 1, row + 1)) {
                    return Err(DiagramError::Overlap { line: *line, col: col + 1 });
                }
                for cell in [(col + 1, row), (col, row + 1), (col + 1, row + 1)] {
                    if !covered.insert(cell) {
                        return Err(DiagramError::Overlap { line: *line, col: col + 1 });
                    }
                }
            }
            let anchor = Cell::new(2 * col as i64, 2 * row as i64);
            d.placements.push(Placement { letter, orientation, anchor, size });
        }
    }
    for (&(col, row), (tok, line)) in &grid {
        if matches!(tok, Tok::Cont) && !covered.contains(&(col, row)) {
            return Err(DiagramError::StrayContinuation { line: *line, col: col + 1 });
        }
    }
    d.placements.sort_by_key(|p| (p.anchor.y, p.anchor.x));
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_wire() {
        let d = parse_diagram(". W>").unwrap();
        assert_eq!(d.placements, vec![Placement { letter: 'W', orientation: Orientation(0), anchor: Cell::new(2, 0), size: 1 }]);
        assert!(d.at(Cell::new(2, 0)).is_some());
        assert!(d.at(Cell::new(0, 0)).is_none());
    }

    #[test]
    fn half_adder_block_and_crossovers() {
        let d = parse_diagram("// comment\nH> # X\n# # Xv\n").unwrap();
        assert_eq!(d.placements.len(), 3);
        let h = &d.placements[0];
        assert_eq!((h.letter, h.size), ('H', 2));
        assert!(h.covers(Cell::new(2, 2)));
        assert_eq!(d.at(Cell::new(4, 2)).unwrap().orientation, Orientation(3));
        // unconnected gates parse fine; wiring is the driver's business
        assert!(parse_diagram("A>").is_ok());
    }

    #[test]
    fn errors_have_locations() {
        assert_eq!(
            parse_diagram(". Q?").unwrap_err(),
            DiagramError::UnknownToken { line: 1, col: 2, token: "Q?".into() }
        );
        assert!(matches!(parse_diagram("# .").unwrap_err(), DiagramError::StrayContinuation { line: 1, col: 1 }));
        assert!(matches!(parse_diagram("H> #\n. .").unwrap_err(), DiagramError::Overlap { .. }));
        assert_eq!(parse_diagram(&". ".repeat(22)).unwrap_err(), DiagramError::TooWide { line: 1 });
        assert_eq!(parse_diagram(&".\n".repeat(22)).unwrap_err(), DiagramError::TooTall);
    }
}
