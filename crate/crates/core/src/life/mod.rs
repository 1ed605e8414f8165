//! Concrete B3/S23 semantics on the integer lattice.
//!
//! `WorldState` is the reference representation: a finite set of live cells
//! stepped with a hash-map neighbour count. It is deliberately simple and is
//! the oracle every faster backend is checked against.

pub mod rle;
pub mod torus;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::{Add, Neg, Sub};

pub use torus::{TorusArena, TorusError};

/// A lattice cell. `x` grows east, `y` grows south (screen order).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const fn new(x: i64, y: i64) -> Self {
        Cell { x, y }
    }

    pub fn chebyshev(self, other: Cell) -> i64 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

impl Add for Cell {
    type Output = Cell;
    fn add(self, o: Cell) -> Cell {
        Cell::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Cell {
    type Output = Cell;
    fn sub(self, o: Cell) -> Cell {
        Cell::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Cell {
    type Output = Cell;
    fn neg(self) -> Cell {
        Cell::new(-self.x, -self.y)
    }
}

impl From<(i64, i64)> for Cell {
    fn from((x, y): (i64, i64)) -> Self {
        Cell::new(x, y)
    }
}

/// Plain set of cells, used for areas and deletion masks.
pub type CellSet = HashSet<Cell>;

/// Offsets of the eight Chebyshev-distance-1 neighbours, row-major.
pub const NEIGHBOUR_OFFSETS: [Cell; 8] = [
    Cell::new(-1, -1),
    Cell::new(0, -1),
    Cell::new(1, -1),
    Cell::new(-1, 0),
    Cell::new(1, 0),
    Cell::new(-1, 1),
    Cell::new(0, 1),
    Cell::new(1, 1),
];

/// The eight neighbours of `c`.
pub fn adjacents(c: Cell) -> [Cell; 8] {
    NEIGHBOUR_OFFSETS.map(|d| c + d)
}

/// The GOL rule on a single cell: alive next iff 3 live neighbours, or
/// currently alive with 2.
#[inline]
pub fn rule(alive: bool, live_neighbours: u32) -> bool {
    live_neighbours == 3 || (alive && live_neighbours == 2)
}

/// Axis-aligned inclusive bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BBox {
    pub min: Cell,
    pub max: Cell,
}

impl BBox {
    pub fn width(&self) -> i64 {
        self.max.x - self.min.x + 1
    }

    pub fn height(&self) -> i64 {
        self.max.y - self.min.y + 1
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.min.x && c.x <= self.max.x && c.y >= self.min.y && c.y <= self.max.y
    }

    pub fn grow(&self, by: i64) -> BBox {
        BBox {
            min: Cell::new(self.min.x - by, self.min.y - by),
            max: Cell::new(self.max.x + by, self.max.y + by),
        }
    }

    pub fn intersects(&self, o: &BBox) -> bool {
        self.min.x <= o.max.x && o.min.x <= self.max.x && self.min.y <= o.max.y && o.min.y <= self.max.y
    }

    pub fn union(&self, o: &BBox) -> BBox {
        BBox {
            min: Cell::new(self.min.x.min(o.min.x), self.min.y.min(o.min.y)),
            max: Cell::new(self.max.x.max(o.max.x), self.max.y.max(o.max.y)),
        }
    }

    pub fn of<I: IntoIterator<Item = Cell>>(cells: I) -> Option<BBox> {
        let mut it = cells.into_iter();
        let first = it.next()?;
        let mut b = BBox { min: first, max: first };
        for c in it {
            b.min.x = b.min.x.min(c.x);
            b.min.y = b.min.y.min(c.y);
            b.max.x = b.max.x.max(c.x);
            b.max.y = b.max.y.max(c.y);
        }
        Some(b)
    }
}

/// A finite GOL state: the set of live cells.
#[derive(Clone, Default, PartialEq, Eq)]
pub struct WorldState {
    live: HashSet<Cell>,
}

impl fmt::Debug for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.sorted()).finish()
    }
}

impl FromIterator<Cell> for WorldState {
    fn from_iter<I: IntoIterator<Item = Cell>>(iter: I) -> Self {
        WorldState { live: iter.into_iter().collect() }
    }
}

impl<'a> IntoIterator for &'a WorldState {
    type Item = &'a Cell;
    type IntoIter = std::collections::hash_set::Iter<'a, Cell>;
    fn into_iter(self) -> Self::IntoIter {
        self.live.iter()
    }
}

impl WorldState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_coords(coords: &[(i64, i64)]) -> Self {
        coords.iter().map(|&c| Cell::from(c)).collect()
    }

    pub fn contains(&self, c: Cell) -> bool {
        self.live.contains(&c)
    }

    pub fn insert(&mut self, c: Cell) -> bool {
        self.live.insert(c)
    }

    pub fn remove(&mut self, c: Cell) -> bool {
        self.live.remove(&c)
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.live.iter().copied()
    }

    pub fn cells(&self) -> &HashSet<Cell> {
        &self.live
    }

    /// Live cells in (y, x) row-major order.
    pub fn sorted(&self) -> Vec<Cell> {
        let mut v: Vec<Cell> = self.live.iter().copied().collect();
        v.sort_by_key(|c| (c.y, c.x));
        v
    }

    pub fn bbox(&self) -> Option<BBox> {
        BBox::of(self.live.iter().copied())
    }

    pub fn translate(&self, by: Cell) -> WorldState {
        self.live.iter().map(|&c| c + by).collect()
    }

    pub fn union(&self, o: &WorldState) -> WorldState {
        self.live.union(&o.live).copied().collect()
    }

    pub fn difference(&self, cells: &CellSet) -> WorldState {
        self.live.iter().filter(|c| !cells.contains(c)).copied().collect()
    }

    pub fn restrict(&self, cells: &CellSet) -> WorldState {
        self.live.iter().filter(|c| cells.contains(c)).copied().collect()
    }

    pub fn is_subset(&self, o: &WorldState) -> bool {
        self.live.is_subset(&o.live)
    }

    /// Moves the state so its bounding box starts at the origin.
    pub fn normalized(&self) -> WorldState {
        match self.bbox() {
            Some(b) => self.translate(-b.min),
            None => WorldState::new(),
        }
    }

    /// Coarse text rendering, `#` live and `.` dead, over the bounding box.
    pub fn render(&self) -> String {
        let Some(b) = self.bbox() else {
            return String::new();
        };
        let mut out = String::new();
        for y in b.min.y..=b.max.y {
            for x in b.min.x..=b.max.x {
                out.push(if self.contains(Cell::new(x, y)) { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }
}

/// Number of live neighbours of `c` in `s`.
pub fn live_adj(s: &WorldState, c: Cell) -> u32 {
    adjacents(c).iter().filter(|&&n| s.contains(n)).count() as u32
}

/// One generation of the reference stepper.
pub fn step(s: &WorldState) -> WorldState {
    let mut counts: HashMap<Cell, u32> = HashMap::with_capacity(s.len() * 8);
    for c in s.iter() {
        for n in adjacents(c) {
            *counts.entry(n).or_insert(0) += 1;
        }
    }
    counts
        .into_iter()
        .filter(|&(c, k)| rule(s.contains(c), k))
        .map(|(c, _)| c)
        .collect()
}

pub fn step_n(s: &WorldState, n: usize) -> WorldState {
    let mut cur = s.clone();
    for _ in 0..n {
        cur = step(&cur);
    }
    cur
}

/// Cells at Chebyshev distance at most 1 from a live cell.
pub fn infl(s: &WorldState) -> CellSet {
    let mut out = CellSet::with_capacity(s.len() * 9);
    for c in s.iter() {
        for dy in -1..=1 {
            for dx in -1..=1 {
                out.insert(Cell::new(c.x + dx, c.y + dy));
            }
        }
    }
    out
}

/// True iff the influence areas of `a` and `b` are disjoint.
pub fn influence_disjoint(a: &WorldState, b: &WorldState) -> bool {
    let (Some(ba), Some(bb)) = (a.bbox(), b.bbox()) else {
        return true;
    };
    if !ba.grow(1).intersects(&bb.grow(1)) {
        return true;
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let ia = infl(small);
    let ib = infl(large);
    ia.is_disjoint(&ib)
}

/// Well-known patterns in a fixed phase, anchored at the origin.
pub mod patterns {
    use super::WorldState;

    /// Glider heading south-east.
    pub fn glider() -> WorldState {
        WorldState::from_coords(&[(1, 0), (2, 1), (0, 2), (1, 2), (2, 2)])
    }

    pub fn block() -> WorldState {
        WorldState::from_coords(&[(0, 0), (1, 0), (0, 1), (1, 1)])
    }

    /// Horizontal blinker.
    pub fn blinker() -> WorldState {
        WorldState::from_coords(&[(0, 0), (1, 0), (2, 0)])
    }

    /// Lightweight spaceship heading east.
    pub fn lwss_east() -> WorldState {
        WorldState::from_coords(&[
            (0, 0),
            (3, 0),
            (4, 1),
            (0, 2),
            (4, 2),
            (1, 3),
            (2, 3),
            (3, 3),
            (4, 3),
        ])
    }

    pub const GOSPER_GUN_RLE: &str = "x = 36, y = 9, rule = B3/S23
24bo$22bobo$12b2o6b2o12b2o$11bo3bo4b2o12b2o$2o8bo5bo3b2o$2o8bo3bob2o4b
obo$10bo5bo7bo$11bo3bo$12b2o!";

    pub fn gosper_gun() -> WorldState {
        super::rle::decode(GOSPER_GUN_RLE.as_bytes())
            .expect("built-in gun parses")
            .state
    }
}
