//! Run-length encoded patterns, B3/S23 only.
//!
//! Header `x = <w>, y = <h>, rule = B3/S23`, body tokens `<n>b`, `<n>o`,
//! `<n>$` and a terminating `!`. `#` lines before the header are skipped.
//! Decoded cells are anchored at the top-left corner of the declared box,
//! unless a `#CXRLE Pos=<x>,<y>` line places that corner elsewhere.

use super::{Cell, WorldState};
use thiserror::Error;

const MAX_LINE: usize = 70;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("rle parse error at line {line}, column {column}: {kind}")]
pub struct RleError {
    pub line: usize,
    pub column: usize,
    pub kind: RleErrorKind,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleErrorKind {
    #[error("missing header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported rule {0:?}")]
    UnsupportedRule(String),
    #[error("illegal symbol {0:?}")]
    IllegalSymbol(char),
    #[error("run extends past the declared {0}")]
    OutOfBounds(&'static str),
    #[error("missing terminating '!'")]
    Unterminated,
    #[error("bad run count")]
    BadCount,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub width: u64,
    pub height: u64,
    /// Top-left corner, from `#CXRLE Pos=`; `(0,0)` when absent.
    pub origin: Cell,
    pub state: WorldState,
}

fn parse_pos(l: &str) -> Option<Cell> {
    let rest = l.strip_prefix("#CXRLE")?;
    let pos = rest.split_whitespace().find_map(|t| t.strip_prefix("Pos="))?;
    let (x, y) = pos.split_once(',')?;
    Some(Cell::new(x.trim().parse().ok()?, y.trim().parse().ok()?))
}

fn err(line: usize, column: usize, kind: RleErrorKind) -> RleError {
    RleError { line, column, kind }
}

fn parse_header(text: &str, line: usize) -> Result<(u64, u64), RleError> {
    let bad = |m: &str| err(line, 1, RleErrorKind::BadHeader(m.to_string()));
    let mut w = None;
    let mut h = None;
    for part in text.split(',') {
        let Some((k, v)) = part.split_once('=') else {
            return Err(bad(part.trim()));
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "x" => w = Some(v.parse::<u64>().map_err(|_| bad(v))?),
            "y" => h = Some(v.parse::<u64>().map_err(|_| bad(v))?),
            "rule" => {
                if !v.eq_ignore_ascii_case("B3/S23") {
                    return Err(err(line, 1, RleErrorKind::UnsupportedRule(v.to_string())));
                }
            }
            other => return Err(bad(other)),
        }
    }
    match (w, h) {
        (Some(w), Some(h)) => Ok((w, h)),
        _ => Err(bad("x and y are required")),
    }
}

pub fn decode(text: &[u8]) -> Result<Decoded, RleError> {
    let text = String::from_utf8_lossy(text);
    let mut lines = text.lines().enumerate().peekable();
    let mut origin = Cell::new(0, 0);
    let (header_line, header) = loop {
        match lines.next() {
            None => return Err(err(1, 1, RleErrorKind::MissingHeader)),
            Some((_, l)) if l.starts_with('#') || l.trim().is_empty() => {
                if let Some(p) = parse_pos(l) {
                    origin = p;
                }
            }
            Some((i, l)) => break (i + 1, l),
        }
    };
    let (width, height) = parse_header(header, header_line)?;

    let mut state = WorldState::new();
    let (mut x, mut y) = (0u64, 0u64);
    let mut count: Option<u64> = None;
    for (i, l) in lines {
        for (j, ch) in l.char_indices() {
            let (line, column) = (i + 1, j + 1);
            match ch {
                '0'..='9' => {
                    let d = ch as u64 - '0' as u64;
                    let next = count.unwrap_or(0).checked_mul(10).and_then(|c| c.checked_add(d));
                    count = Some(next.ok_or_else(|| err(line, column, RleErrorKind::BadCount))?);
                }
                'b' | 'o' => {
                    let n = count.take().unwrap_or(1);
                    if x + n > width {
                        return Err(err(line, column, RleErrorKind::OutOfBounds("width")));
                    }
                    if ch == 'o' && n > 0 && y >= height {
                        return Err(err(line, column, RleErrorKind::OutOfBounds("height")));
                    }
                    if ch == 'o' {
                        for k in 0..n {
                            state.insert(Cell::new((x + k) as i64, y as i64));
                        }
                    }
                    x += n;
                }
                '$' => {
                    let n = count.take().unwrap_or(1);
                    y += n;
                    x = 0;
                    if y > height {
                        return Err(err(line, column, RleErrorKind::OutOfBounds("height")));
                    }
                }
                '!' => {
                    if count.is_some() {
                        return Err(err(line, column, RleErrorKind::BadCount));
                    }
                    let state = if origin == Cell::new(0, 0) { state } else { state.translate(origin) };
                    return Ok(Decoded { width, height, origin, state });
                }
                c if c.is_whitespace() => {}
                c => return Err(err(line, column, RleErrorKind::IllegalSymbol(c))),
            }
        }
    }
    let last = text.lines().count().max(1);
    Err(err(last, 1, RleErrorKind::Unterminated))
}

struct Emitter {
    lines: Vec<String>,
    cur: String,
}

impl Emitter {
    fn push(&mut self, n: u64, tag: char) {
        if n == 0 {
            return;
        }
        let tok = if n == 1 { tag.to_string() } else { format!("{n}{tag}") };
        if self.cur.len() + tok.len() > MAX_LINE {
            self.lines.push(std::mem::take(&mut self.cur));
        }
        self.cur.push_str(&tok);
    }
}

/// Canonical encoding of `s` over its bounding box.
pub fn encode(s: &WorldState) -> String {
    let Some(b) = s.bbox() else {
        return "x = 0, y = 0, rule = B3/S23\n!".to_string();
    };
    let header = format!("x = {}, y = {}, rule = B3/S23", b.width(), b.height());
    let mut rows: Vec<Vec<i64>> = vec![Vec::new(); b.height() as usize];
    for c in s.iter() {
        rows[(c.y - b.min.y) as usize].push(c.x - b.min.x);
    }
    let mut em = Emitter { lines: Vec::new(), cur: String::new() };
    let mut pending_rows = 0u64;
    for row in rows.iter_mut() {
        row.sort_unstable();
        if row.is_empty() {
            pending_rows += 1;
            continue;
        }
        em.push(pending_rows, '$');
        pending_rows = 1;
        let mut x = 0i64;
        let mut i = 0;
        while i < row.len() {
            let start = row[i];
            let mut end = start;
            while i + 1 < row.len() && row[i + 1] == end + 1 {
                i += 1;
                end += 1;
            }
            em.push((start - x) as u64, 'b');
            em.push((end - start + 1) as u64, 'o');
            x = end + 1;
            i += 1;
        }
    }
    if em.cur.len() + 1 > MAX_LINE {
        em.lines.push(std::mem::take(&mut em.cur));
    }
    em.cur.push('!');
    em.lines.push(em.cur);
    format!("{header}\n{}", em.lines.join("\n"))
}

/// Like [`encode`], but keeps the pattern's position with a `#CXRLE` line.
pub fn encode_positioned(s: &WorldState) -> String {
    match s.bbox() {
        Some(b) if b.min != Cell::new(0, 0) => format!("#CXRLE Pos={},{}\n{}", b.min.x, b.min.y, encode(s)),
        _ => encode(s),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::life::patterns;
    use proptest::prelude::*;

    #[test]
    fn decode_examples() {
        let d = decode(b"x = 1, y = 1, rule = B3/S23\no!").unwrap();
        assert_eq!(d.state, WorldState::from_coords(&[(0, 0)]));
        let d = decode(b"x = 3, y = 1, rule = B3/S23\n3o!").unwrap();
        assert_eq!(d.state, WorldState::from_coords(&[(0, 0), (1, 0), (2, 0)]));
        assert_eq!((d.width, d.height), (3, 1));
    }

    #[test]
    fn comments_are_skipped() {
        let d = decode(b"#N blinker\n#C a comment\nx = 3, y = 1, rule = B3/S23\n3o!\n").unwrap();
        assert_eq!(d.state.len(), 3);
    }

    #[test]
    fn empty_encoding() {
        assert_eq!(encode(&WorldState::new()), "x = 0, y = 0, rule = B3/S23\n!");
        assert!(decode(encode(&WorldState::new()).as_bytes()).unwrap().state.is_empty());
    }

    #[test]
    fn glider_encodes_to_three_by_three() {
        let text = encode(&patterns::glider());
        assert!(text.starts_with("x = 3, y = 3, rule = B3/S23\n"));
        assert_eq!(text, "x = 3, y = 3, rule = B3/S23\nbo$2bo$3o!");
    }

    #[test]
    fn errors_carry_locations() {
        let e = decode(b"x = 2, y = 1, rule = B3/S23\n3o!").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));
        assert!(matches!(e.kind, RleErrorKind::OutOfBounds(_)));
        let e = decode(b"x = 2, y = 1, rule = B3/S23\noq!").unwrap_err();
        assert_eq!(e.kind, RleErrorKind::IllegalSymbol('q'));
        assert_eq!((e.line, e.column), (2, 2));
        let e = decode(b"x = 2 y = 1\no!").unwrap_err();
        assert!(matches!(e.kind, RleErrorKind::BadHeader(_)));
        let e = decode(b"x = 2, y = 1, rule = B36/S23\no!").unwrap_err();
        assert!(matches!(e.kind, RleErrorKind::UnsupportedRule(_)));
        let e = decode(b"x = 2, y = 1\no").unwrap_err();
        assert_eq!(e.kind, RleErrorKind::Unterminated);
        let e = decode(b"x = 2, y = 1\no$o!").unwrap_err();
        assert!(matches!(e.kind, RleErrorKind::OutOfBounds(_)));
    }

    #[test]
    fn gun_round_trips_with_short_lines() {
        let g = patterns::gosper_gun();
        let text = encode(&g);
        assert!(text.lines().all(|l| l.len() <= MAX_LINE));
        assert_eq!(decode(text.as_bytes()).unwrap().state, g);
    }

    #[test]
    fn positions_survive() {
        let g = patterns::glider().translate(Cell::new(-80, 7));
        let text = encode_positioned(&g);
        assert!(text.starts_with("#CXRLE Pos=-80,7\n"));
        let d = decode(text.as_bytes()).unwrap();
        assert_eq!(d.state, g);
        assert_eq!(d.origin, Cell::new(-80, 7));
        assert_eq!(encode_positioned(&patterns::glider()), encode(&patterns::glider()));
    }

    proptest! {
        #[test]
        fn round_trip(cells in proptest::collection::hash_set((0i64..90, 0i64..12), 0..200)) {
            let s: WorldState = cells.into_iter().map(Cell::from).collect();
            let text = encode(&s);
            prop_assert!(text.lines().all(|l| l.len() <= MAX_LINE));
            let d = decode(text.as_bytes()).unwrap();
            prop_assert_eq!(d.state, s.normalized());
        }
    }
}
