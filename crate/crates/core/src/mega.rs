//! Mega-cells: stamping gate patterns into a 3150x3150 layout, tiling the
//! plane with it according to an input state, and reading the result back.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use thiserror::Error;

use crate::circuit::library::Library;
use crate::circuit::{steps_per_mega_generation, SCALE};
use crate::floodfill::{Diagram, FFState};
use crate::life::torus::{TorusArena, TorusError};
use crate::life::{rle, Cell, WorldState, NEIGHBOUR_OFFSETS};
use crate::values::Value;

pub const STRIDE: i64 = SCALE.cells_per_megacell;
/// The cell of a mega-cell that mirrors the simulated cell's state.
pub const SAMPLE: Cell = Cell { x: 1726, y: 599 };

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MegaCellLayout {
    /// Mega-cell for a dead cell.
    pub variant0: WorldState,
    /// Mega-cell for a live cell.
    pub variant1: WorldState,
    /// Anchor of the tile holding the latch, if known.
    pub latch: Option<Cell>,
}

#[derive(Debug, Error)]
pub enum MegaError {
    #[error("gate library is incomplete, missing: {}", .0.join(", "))]
    MissingGates(Vec<String>),
    #[error("gates at {a} and {b} both stamp cell {cell}")]
    Collision { a: Cell, b: Cell, cell: Cell },
    #[error("variants differ outside the latch tile at {0}")]
    VariantsDiffer(Cell),
    #[error("{0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}: {1}")]
    Rle(String, rle::RleError),
    #[error("layout meta: {0}")]
    Meta(String),
    #[error("torus: {0}")]
    Torus(#[from] TorusError),
}

fn wrap(c: Cell) -> Cell {
    Cell::new(c.x.rem_euclid(STRIDE), c.y.rem_euclid(STRIDE))
}

/// Cells of the tile anchored at `a`, wrapped into the mega-cell.
pub fn in_tile(a: Cell, c: Cell) -> bool {
    let u = SCALE.cells_per_unit;
    let d = wrap(c - Cell::new(u * a.x - u, u * a.y - u));
    d.x < 2 * u && d.y < 2 * u
}

/// Anchor of the gate whose input carries `this@-15`.
pub fn latch_anchor(st: &FFState) -> Option<Cell> {
    st.ins.iter().find(|i| i.val == Value::this(-15)).map(|i| i.pos + i.dir.vec())
}

/// Stamps every gate of the diagram at `75 * anchor` cells. The latch gate
/// uses its alternative pattern in `variant1`.
pub fn assemble_layout(d: &Diagram, lib: &Library, ff: Option<&FFState>) -> Result<MegaCellLayout, MegaError> {
    let mut missing = BTreeSet::new();
    for pl in &d.placements {
        match lib.by_letter(pl.letter) {
            None => {
                missing.insert(format!("letter {}", pl.letter));
            }
            Some(g) if !g.has_pattern => {
                missing.insert(g.name.clone());
            }
            Some(_) => {}
        }
    }
    if !missing.is_empty() {
        return Err(MegaError::MissingGates(missing.into_iter().collect()));
    }
    let latch = ff.and_then(latch_anchor);
    let u = SCALE.cells_per_unit;
    let mut owner: HashMap<Cell, Cell> = HashMap::new();
    let (mut v0, mut v1) = (WorldState::new(), WorldState::new());
    for pl in &d.placements {
        let og = lib.by_letter(pl.letter).expect("checked above").get(pl.orientation);
        let shift = Cell::new(u * pl.anchor.x, u * pl.anchor.y);
        let base = og.spec.init.translate(shift);
        for c in base.iter() {
            let c = wrap(c);
            if let Some(&a) = owner.get(&c) {
                return Err(MegaError::Collision { a, b: pl.anchor, cell: c });
            }
            owner.insert(c, pl.anchor);
            v0.insert(c);
        }
        let alt = match (&og.alt, latch == Some(pl.anchor)) {
            (Some(alt), true) => alt.translate(shift),
            _ => base,
        };
        for c in alt.iter() {
            v1.insert(wrap(c));
        }
    }
    let layout = MegaCellLayout { variant0: v0, variant1: v1, latch };
    layout.check()?;
    Ok(layout)
}

impl MegaCellLayout {
    pub fn empty() -> Self {
        MegaCellLayout { variant0: WorldState::new(), variant1: WorldState::new(), latch: None }
    }

    /// The two variants may differ only inside the latch tile.
    pub fn check(&self) -> Result<(), MegaError> {
        let diff = self.variant0.difference(self.variant1.cells()).union(&self.variant1.difference(self.variant0.cells()));
        let mut cells = diff.sorted();
        cells.sort();
        for c in cells {
            if !self.latch.is_some_and(|a| in_tile(a, c)) {
                return Err(MegaError::VariantsDiffer(c));
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<(), MegaError> {
        let io = |p: &Path| {
            let p = p.display().to_string();
            move |e| MegaError::Io(p, e)
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        for (name, s) in [("variant0.rle", &self.variant0), ("variant1.rle", &self.variant1)] {
            let p = dir.join(name);
            std::fs::write(&p, rle::encode_positioned(s) + "\n").map_err(io(&p))?;
        }
        let mut meta = format!("sample {} {}\nstride {}\n", SAMPLE.x, SAMPLE.y, STRIDE);
        if let Some(a) = self.latch {
            meta += &format!("latch {} {}\n", a.x, a.y);
        }
        let p = dir.join("meta");
        std::fs::write(&p, meta).map_err(io(&p))
    }

    pub fn load(dir: &Path) -> Result<Self, MegaError> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read(&p).map_err(|e| MegaError::Io(p.display().to_string(), e))
        };
        let decode = |name: &str| -> Result<WorldState, MegaError> {
            let bytes = read(name)?;
            Ok(rle::decode(&bytes).map_err(|e| MegaError::Rle(name.to_string(), e))?.state)
        };
        let meta = String::from_utf8_lossy(&read("meta")?).into_owned();
        let mut latch = None;
        for line in meta.lines() {
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |i: usize| f.get(i).and_then(|s| s.parse::<i64>().ok()).ok_or_else(|| MegaError::Meta(line.to_string()));
            match f.first() {
                Some(&"sample") if Cell::new(num(1)?, num(2)?) != SAMPLE => return Err(MegaError::Meta(line.to_string())),
                Some(&"stride") if num(1)? != STRIDE => return Err(MegaError::Meta(line.to_string())),
                Some(&"latch") => latch = Some(Cell::new(num(1)?, num(2)?)),
                _ => {}
            }
        }
        let l = MegaCellLayout { variant0: decode("variant0.rle")?, variant1: decode("variant1.rle")?, latch };
        l.check()?;
        Ok(l)
    }
}

/// Tiles a `p x q` torus of mega-cells, variant1 where `s` is alive.
/// Cells of `s` are taken modulo `(p, q)`.
pub fn build_mega_cells(s: &WorldState, p: usize, q: usize, layout: &MegaCellLayout) -> Result<TorusArena, MegaError> {
    let mut t = TorusArena::new(p * STRIDE as usize, q * STRIDE as usize)?;
    let live: BTreeSet<Cell> = s.iter().map(|c| Cell::new(c.x.rem_euclid(p as i64), c.y.rem_euclid(q as i64))).collect();
    for i in 0..p as i64 {
        for j in 0..q as i64 {
            let v = if live.contains(&Cell::new(i, j)) { &layout.variant1 } else { &layout.variant0 };
            let off = Cell::new(STRIDE * i, STRIDE * j);
            for c in v.iter() {
                t.set(c + off, true);
            }
        }
    }
    Ok(t)
}

/// `{p | 3150 p + (1726, 599) alive}` over the mega grid of a torus.
pub fn read_mega_cells(t: &TorusArena) -> WorldState {
    let (p, q) = (t.width() as i64 / STRIDE, t.height() as i64 / STRIDE);
    let mut s = WorldState::new();
    for i in 0..p {
        for j in 0..q {
            if t.get(Cell::new(STRIDE * i, STRIDE * j) + SAMPLE) {
                s.insert(Cell::new(i, j));
            }
        }
    }
    s
}

/// The same sampling on an unbounded state.
pub fn read_mega_cells_plane(s: &WorldState) -> WorldState {
    s.iter()
        .filter_map(|c| {
            let d = c - SAMPLE;
            (d.x.rem_euclid(STRIDE) == 0 && d.y.rem_euclid(STRIDE) == 0).then(|| Cell::new(d.x / STRIDE, d.y / STRIDE))
        })
        .collect()
}

/// One generation on a `p x q` torus of any size, cells given modulo `(p, q)`.
pub fn small_torus_step(s: &WorldState, p: i64, q: i64) -> WorldState {
    let live: BTreeSet<Cell> = s.iter().map(|c| Cell::new(c.x.rem_euclid(p), c.y.rem_euclid(q))).collect();
    let mut next = WorldState::new();
    for x in 0..p {
        for y in 0..q {
            let n = NEIGHBOUR_OFFSETS
                .iter()
                .filter(|d| live.contains(&Cell::new((x + d.x).rem_euclid(p), (y + d.y).rem_euclid(q))))
                .count();
            let alive = live.contains(&Cell::new(x, y));
            if n == 3 || (alive && n == 2) {
                next.insert(Cell::new(x, y));
            }
        }
    }
    next
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RoundtripError {
    #[error("mega generation {generation}: cell {cell} should be {expected}")]
    Mismatch { generation: u64, cell: Cell, expected: bool },
    #[error("torus: {0}")]
    Torus(String),
}

/// Runs the mega torus for `n` mega generations and compares each sampled
/// generation against the small torus.
pub fn roundtrip_check(s: &WorldState, p: usize, q: usize, layout: &MegaCellLayout, n: u64) -> Result<(), RoundtripError> {
    let mut big = build_mega_cells(s, p, q, layout).map_err(|e| RoundtripError::Torus(e.to_string()))?;
    let mut small: WorldState = s.iter().map(|c| Cell::new(c.x.rem_euclid(p as i64), c.y.rem_euclid(q as i64))).collect();
    for generation in 0..=n {
        if generation > 0 {
            big.step_n(steps_per_mega_generation());
            small = small_torus_step(&small, p as i64, q as i64);
        }
        let got = read_mega_cells(&big);
        let mut cells: Vec<Cell> = got.difference(small.cells()).union(&small.difference(got.cells())).sorted();
        cells.sort();
        if let Some(&cell) = cells.first() {
            return Err(RoundtripError::Mismatch { generation, cell, expected: small.contains(cell) });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::library::{parse_spec_file, Gate};
    use crate::floodfill::parse_diagram;
    use crate::life::patterns;

    fn lib_with(pattern: WorldState, alt: Option<WorldState>) -> Library {
        let f = parse_spec_file("w", "letter: W\narea: (0,0)\nin: (-1,0) E a\nout: (1,0) E a@5\n").unwrap();
        let mut g = Gate::from_spec_file("wire", &f, Some(pattern), false).unwrap();
        if let Some(a) = alt {
            g = g.with_alt(a);
        }
        let mut l = Library::new();
        l.insert(g).unwrap();
        l
    }

    #[test]
    fn assemble_empty_and_wire() {
        let l = lib_with(WorldState::new(), None);
        let e = assemble_layout(&Diagram::default(), &l, None).unwrap();
        assert!(e.variant0.is_empty() && e.variant1.is_empty());
        let d = parse_diagram(". W>").unwrap();
        let w = assemble_layout(&d, &l, None).unwrap();
        assert!(w.variant0.is_empty());
    }

    #[test]
    fn stamps_land_at_75_cells_per_unit() {
        let l = lib_with(WorldState::from_coords(&[(0, 0)]), None);
        let d = parse_diagram(". W>").unwrap();
        assert_eq!(assemble_layout(&d, &l, None).unwrap().variant0, WorldState::from_coords(&[(150, 0)]));
        // the tile at anchor 0 wraps to the far edge
        let l = lib_with(WorldState::from_coords(&[(-75, -1)]), None);
        let d = parse_diagram("W>").unwrap();
        assert_eq!(assemble_layout(&d, &l, None).unwrap().variant0, WorldState::from_coords(&[(3075, 3149)]));
    }

    #[test]
    fn missing_and_colliding_gates() {
        let l = lib_with(WorldState::from_coords(&[(70, 0)]), None);
        let d = parse_diagram("A>").unwrap();
        assert!(matches!(assemble_layout(&d, &l, None), Err(MegaError::MissingGates(v)) if v == vec!["letter A"]));
        let l = lib_with(WorldState::from_coords(&[(0, 0), (150, 0)]), None);
        let d = parse_diagram("W> W>").unwrap();
        assert!(matches!(assemble_layout(&d, &l, None), Err(MegaError::Collision { .. })));
    }

    #[test]
    fn latch_variant_uses_alternative() {
        let l = lib_with(WorldState::new(), Some(WorldState::from_coords(&[(3, 4)])));
        let d = parse_diagram(". W>").unwrap();
        let mut st = FFState::new();
        st.ins.push(crate::floodfill::FFPort { pos: Cell::new(1, 0), dir: crate::circuit::Dir::E, val: Value::this(-15) });
        let lay = assemble_layout(&d, &l, Some(&st)).unwrap();
        assert_eq!(lay.latch, Some(Cell::new(2, 0)));
        assert_eq!(lay.variant1, WorldState::from_coords(&[(153, 4)]));
        let bad = MegaCellLayout { latch: Some(Cell::new(10, 10)), ..lay.clone() };
        assert!(matches!(bad.check(), Err(MegaError::VariantsDiffer(_))));
        let dir = tempfile::tempdir().unwrap();
        lay.save(dir.path()).unwrap();
        assert_eq!(MegaCellLayout::load(dir.path()).unwrap(), lay);
    }

    fn marker_layout() -> MegaCellLayout {
        MegaCellLayout { variant0: WorldState::new(), variant1: WorldState::from_coords(&[(1726, 599)]), latch: Some(Cell::new(23, 8)) }
    }

    #[test]
    fn build_and_read() {
        let empty = build_mega_cells(&WorldState::new(), 2, 2, &MegaCellLayout::empty()).unwrap();
        assert_eq!((empty.width(), empty.height()), (6300, 6300));
        assert!(empty.is_empty());
        let lay = MegaCellLayout { variant0: WorldState::from_coords(&[(5, 5), (6, 5)]), ..marker_layout() };
        let lay = MegaCellLayout { variant1: lay.variant0.union(&lay.variant1), ..lay };
        let s = WorldState::from_coords(&[(0, 0)]);
        let t = build_mega_cells(&s, 2, 2, &lay).unwrap();
        assert_eq!(t.population(), 3 + 3 * 2);
        assert_eq!(read_mega_cells(&t), s);
        assert!(read_mega_cells_plane(&WorldState::new()).is_empty());
        assert_eq!(read_mega_cells_plane(&WorldState::from_coords(&[(1726, 599)])), s);
        assert_eq!(read_mega_cells_plane(&WorldState::from_coords(&[(3150 + 1726, 599)])), WorldState::from_coords(&[(1, 0)]));
    }

    #[test]
    fn roundtrip_at_generation_zero() {
        let s = WorldState::from_coords(&[(1, 0), (0, 1)]);
        assert_eq!(roundtrip_check(&s, 2, 2, &marker_layout(), 0), Ok(()));
        let swapped = MegaCellLayout { variant0: marker_layout().variant1, variant1: WorldState::new(), ..marker_layout() };
        assert_eq!(
            roundtrip_check(&s, 2, 2, &swapped, 0),
            Err(RoundtripError::Mismatch { generation: 0, cell: Cell::new(0, 0), expected: false })
        );
    }

    #[test]
    fn small_torus_matches_packed_torus() {
        let s = patterns::glider();
        let mut a = s.clone();
        let mut t = TorusArena::from_world(7, 5, &s).unwrap();
        for _ in 0..30 {
            a = small_torus_step(&a, 7, 5);
            t = t.torus_step();
        }
        assert_eq!(a, t.to_world());
        // the blinker on a 4x4 torus flips each generation
        let b = WorldState::from_coords(&[(0, 1), (1, 1), (2, 1)]);
        assert_eq!(small_torus_step(&b, 4, 4), WorldState::from_coords(&[(1, 0), (1, 1), (1, 2)]));
    }
}
