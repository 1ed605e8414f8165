//! Stepping under an IO environment: per-step areas, insertions, deletions
//! and assertions.

use thiserror::Error;

use crate::life::{adjacents, step, BBox, Cell, CellSet, WorldState};

/// Region a step is allowed to influence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Area {
    Unbounded,
    Cells(CellSet),
    /// Union of `include` minus the union of `exclude`.
    Rects { include: Vec<BBox>, exclude: Vec<BBox> },
}

impl Area {
    pub fn contains(&self, c: Cell) -> bool {
        match self {
            Area::Unbounded => true,
            Area::Cells(s) => s.contains(&c),
            Area::Rects { include, exclude } => {
                include.iter().any(|r| r.contains(c)) && !exclude.iter().any(|r| r.contains(c))
            }
        }
    }

    /// First cell of `infl(s)` outside the area, scanning in row-major order.
    pub fn influence_escape(&self, s: &WorldState) -> Option<Cell> {
        if matches!(self, Area::Unbounded) {
            return None;
        }
        let mut bad: Option<Cell> = None;
        for c in s.iter() {
            for n in std::iter::once(c).chain(adjacents(c)) {
                if !self.contains(n) && bad.is_none_or(|b| (n.y, n.x) < (b.y, b.x)) {
                    bad = Some(n);
                }
            }
        }
        bad
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Modifier {
    pub area: Area,
    pub insertions: WorldState,
    pub deletions: CellSet,
    pub assert_area: CellSet,
    pub assert_content: WorldState,
}

impl Default for Modifier {
    fn default() -> Self {
        Self::trivial()
    }
}

impl Modifier {
    /// Unbounded area and no edits: `io_step` collapses to `step`.
    pub fn trivial() -> Self {
        Modifier {
            area: Area::Unbounded,
            insertions: WorldState::new(),
            deletions: CellSet::new(),
            assert_area: CellSet::new(),
            assert_content: WorldState::new(),
        }
    }

    pub fn with_area(area: Area) -> Self {
        Modifier { area, ..Self::trivial() }
    }

    pub fn is_well_formed(&self) -> bool {
        self.assert_content.iter().all(|c| self.assert_area.contains(&c))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("influence escapes the area at {witness}")]
    BoundaryEscape { witness: Cell },
    #[error("assertion failed: {} missing, {} unexpected cells", missing.len(), unexpected.len())]
    AssertionFailure { missing: Vec<Cell>, unexpected: Vec<Cell> },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("io step {index} failed: {error}")]
pub struct IoStepsError {
    pub index: u64,
    pub error: IoError,
}

pub fn io_step(c: &Modifier, s1: &WorldState) -> Result<WorldState, IoError> {
    if let Some(witness) = c.area.influence_escape(s1) {
        return Err(IoError::BoundaryEscape { witness });
    }
    let s2 = step(s1);
    check_assertion(c, &s2)?;
    Ok(c.insertions.union(&s2.difference(&c.deletions)))
}

fn check_assertion(c: &Modifier, s2: &WorldState) -> Result<(), IoError> {
    if c.assert_area.is_empty() {
        return Ok(());
    }
    let mut missing: Vec<Cell> = c.assert_content.iter().filter(|x| !s2.contains(*x)).collect();
    let mut unexpected: Vec<Cell> =
        c.assert_area.iter().copied().filter(|x| s2.contains(*x) && !c.assert_content.contains(*x)).collect();
    if missing.is_empty() && unexpected.is_empty() {
        return Ok(());
    }
    missing.sort_by_key(|c| (c.y, c.x));
    unexpected.sort_by_key(|c| (c.y, c.x));
    Err(IoError::AssertionFailure { missing, unexpected })
}

/// Inputs cancel outputs exactly.
pub fn cancel_check(c: &Modifier) -> bool {
    c.assert_content == c.insertions && c.assert_area == c.deletions
}

/// Eventually periodic sequence of modifiers.
#[derive(Clone, Debug)]
pub struct ModifierSequence {
    pub prefix: Vec<Modifier>,
    pub cycle: Vec<Modifier>,
}

impl ModifierSequence {
    pub fn new(prefix: Vec<Modifier>, cycle: Vec<Modifier>) -> Self {
        assert!(!cycle.is_empty(), "modifier cycle must be nonempty");
        ModifierSequence { prefix, cycle }
    }

    pub fn trivial() -> Self {
        Self::new(Vec::new(), vec![Modifier::trivial()])
    }

    pub fn get(&self, n: u64) -> &Modifier {
        let p = self.prefix.len() as u64;
        if n < p {
            &self.prefix[n as usize]
        } else {
            &self.cycle[((n - p) % self.cycle.len() as u64) as usize]
        }
    }
}

/// Something that yields the modifier for a global step index.
pub trait ModifierSource {
    fn modifier(&self, n: u64) -> std::borrow::Cow<'_, Modifier>;
}

impl ModifierSource for ModifierSequence {
    fn modifier(&self, n: u64) -> std::borrow::Cow<'_, Modifier> {
        std::borrow::Cow::Borrowed(self.get(n))
    }
}

/// `k` io steps using the modifiers at indices `n..n+k`.
pub fn io_steps<M: ModifierSource + ?Sized>(
    k: u64,
    cs: &M,
    n: u64,
    s: &WorldState,
) -> Result<WorldState, IoStepsError> {
    let mut cur = s.clone();
    for i in n..n + k {
        cur = io_step(&cs.modifier(i), &cur).map_err(|error| IoStepsError { index: i, error })?;
    }
    Ok(cur)
}

/// Bounded stand-in for an unbounded run: `horizon` steps from index 0.
pub fn run_bounded<M: ModifierSource + ?Sized>(cs: &M, s: &WorldState, horizon: u64) -> Result<WorldState, IoStepsError> {
    io_steps(horizon, cs, 0, s)
}
