//! Dense rectangular grids of symbolic cells.

use std::collections::HashMap;

use rayon::prelude::*;

use super::bexp::{next_cell_expr, simplify, BExp, Stream, SymError, VarId, FALSE};
use crate::life::{BBox, Cell, WorldState, NEIGHBOUR_OFFSETS};

/// Cells outside the rectangle are `False`.
#[derive(Clone, PartialEq, Eq)]
pub struct SymGrid {
    origin: Cell,
    width: i64,
    height: i64,
    cells: Vec<BExp>,
}

impl std::fmt::Debug for SymGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SymGrid {}x{} @ {}\n{}", self.width, self.height, self.origin, self.dump())
    }
}

impl SymGrid {
    pub fn new(origin: Cell, width: i64, height: i64) -> Self {
        let n = (width.max(0) * height.max(0)) as usize;
        SymGrid { origin, width: width.max(0), height: height.max(0), cells: vec![BExp::False; n] }
    }

    pub fn empty() -> Self {
        Self::new(Cell::default(), 0, 0)
    }

    /// Constant grid holding exactly the live cells of `s`.
    pub fn from_world(s: &WorldState) -> Self {
        let Some(b) = s.bbox() else {
            return Self::empty();
        };
        let mut g = Self::new(b.min, b.width(), b.height());
        for c in s.iter() {
            g.set(c, BExp::True);
        }
        g
    }

    pub fn origin(&self) -> Cell {
        self.origin
    }

    pub fn width(&self) -> i64 {
        self.width
    }

    pub fn height(&self) -> i64 {
        self.height
    }

    fn index(&self, c: Cell) -> Option<usize> {
        let d = c - self.origin;
        if d.x >= 0 && d.y >= 0 && d.x < self.width && d.y < self.height {
            Some((d.y * self.width + d.x) as usize)
        } else {
            None
        }
    }

    pub fn get(&self, c: Cell) -> &BExp {
        match self.index(c) {
            Some(i) => &self.cells[i],
            None => &FALSE,
        }
    }

    /// Writes a cell, growing the rectangle if needed.
    pub fn set(&mut self, c: Cell, e: BExp) {
        if self.index(c).is_none() {
            if e.is_false() {
                return;
            }
            let b = BBox { min: c, max: c };
            self.ensure(match self.bbox_rect() {
                Some(r) => r.union(&b),
                None => b,
            });
        }
        let i = self.index(c).expect("grown to contain cell");
        self.cells[i] = e;
    }

    fn bbox_rect(&self) -> Option<BBox> {
        (self.width > 0 && self.height > 0).then(|| BBox {
            min: self.origin,
            max: Cell::new(self.origin.x + self.width - 1, self.origin.y + self.height - 1),
        })
    }

    fn ensure(&mut self, r: BBox) {
        let mut g = SymGrid::new(r.min, r.width(), r.height());
        for (c, e) in self.iter() {
            let i = g.index(c).expect("new rect covers old");
            g.cells[i] = e.clone();
        }
        *self = g;
    }

    /// All cells of the rectangle with their expressions.
    pub fn iter(&self) -> impl Iterator<Item = (Cell, &BExp)> + '_ {
        self.cells.iter().enumerate().map(move |(i, e)| {
            let i = i as i64;
            (Cell::new(self.origin.x + i % self.width, self.origin.y + i / self.width), e)
        })
    }

    /// Cells that are not syntactically `False`.
    pub fn support(&self) -> impl Iterator<Item = (Cell, &BExp)> + '_ {
        self.iter().filter(|(_, e)| !e.is_false())
    }

    pub fn support_bbox(&self) -> Option<BBox> {
        BBox::of(self.support().map(|(c, _)| c))
    }

    /// Shrinks the rectangle to the bounding box of the support.
    pub fn trim(&self) -> SymGrid {
        let Some(b) = self.support_bbox() else {
            return SymGrid::empty();
        };
        let mut g = SymGrid::new(b.min, b.width(), b.height());
        for (c, e) in self.support() {
            let i = g.index(c).expect("inside support bbox");
            g.cells[i] = e.clone();
        }
        g
    }

    pub fn vars(&self) -> std::collections::BTreeSet<VarId> {
        let mut out = std::collections::BTreeSet::new();
        for e in &self.cells {
            e.collect_vars(&mut out);
        }
        out
    }

    pub fn map(&self, f: impl Fn(&BExp) -> BExp + Sync + Send) -> SymGrid {
        SymGrid {
            origin: self.origin,
            width: self.width,
            height: self.height,
            cells: self.cells.par_iter().map(f).collect(),
        }
    }

    /// True iff the two grids are cell-wise equivalent over the union of
    /// their rectangles.
    pub fn equiv(&self, o: &SymGrid) -> Result<bool, SymError> {
        Ok(self.first_difference(o)?.is_none())
    }

    /// First cell (row-major) where the grids disagree semantically.
    pub fn first_difference(&self, o: &SymGrid) -> Result<Option<Cell>, SymError> {
        let r = match (self.bbox_rect(), o.bbox_rect()) {
            (Some(a), Some(b)) => a.union(&b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => return Ok(None),
        };
        for y in r.min.y..=r.max.y {
            for x in r.min.x..=r.max.x {
                let c = Cell::new(x, y);
                if !super::bexp::equiv(self.get(c), o.get(c)).map_err(|e| with_cell(e, c))? {
                    return Ok(Some(c));
                }
            }
        }
        Ok(None)
    }

    /// Text rendering over the rectangle: `.` false, `#` true, `A`/`B` a
    /// bare positive variable, `a`/`b` other single-stream expressions and
    /// `*` expressions mixing both streams.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(glyph(&self.cells[(y * self.width + x) as usize]));
            }
            out.push('\n');
        }
        out
    }

    /// Rebuilds every cell through the truth-table simplifier.
    pub fn simplified(&self) -> Result<SymGrid, SymError> {
        let cells: Result<Vec<BExp>, SymError> = self.cells.par_iter().map(simplify).collect();
        Ok(SymGrid { cells: cells?, ..self.clone() })
    }
}

fn glyph(e: &BExp) -> char {
    match e {
        BExp::False => '.',
        BExp::True => '#',
        BExp::Var(v) => v.stream.letter(),
        e => {
            let vs = e.vars();
            let a = vs.iter().any(|v| v.stream == Stream::A);
            let b = vs.iter().any(|v| v.stream == Stream::B);
            match (a, b) {
                (true, false) => 'a',
                (false, true) => 'b',
                (false, false) => '?',
                (true, true) => '*',
            }
        }
    }
}

fn with_cell(e: SymError, c: Cell) -> SymError {
    match e {
        SymError::TooManyVariables { count, cap, .. } => SymError::TooManyVariables { cell: Some(c), count, cap },
        e => e,
    }
}

/// One symbolic generation; the result is one cell larger on every side.
pub fn sym_step(g: &SymGrid) -> Result<SymGrid, SymError> {
    if g.width == 0 || g.height == 0 {
        return Ok(SymGrid::empty());
    }
    let origin = g.origin - Cell::new(1, 1);
    let (w, h) = (g.width + 2, g.height + 2);
    let rows: Result<Vec<Vec<BExp>>, SymError> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut row = Vec::with_capacity(w as usize);
            for x in 0..w {
                let c = origin + Cell::new(x, y);
                let center = g.get(c);
                let nbrs = NEIGHBOUR_OFFSETS.map(|d| g.get(c + d));
                let quiet = center.is_false() && nbrs.iter().all(|n| n.is_false());
                row.push(if quiet {
                    BExp::False
                } else {
                    next_cell_expr(center, nbrs).map_err(|e| with_cell(e, c))?
                });
            }
            Ok(row)
        })
        .collect();
    Ok(SymGrid { origin, width: w, height: h, cells: rows?.into_iter().flatten().collect() })
}

pub fn concretize(g: &SymGrid, env: &HashMap<VarId, bool>) -> Result<WorldState, SymError> {
    let mut s = WorldState::new();
    for (c, e) in g.support() {
        if e.eval(env)? {
            s.insert(c);
        }
    }
    Ok(s)
}

/// Every variable's age increased by one.
pub fn age_grid(g: &SymGrid) -> SymGrid {
    g.map(|e| e.aged(1))
}
