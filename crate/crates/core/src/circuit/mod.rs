//! Circuit specifications over half-tile coordinates and tick delays, and
//! their composition algebra.

pub mod library;
pub mod protocol;
pub mod signal;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::life::{Cell, WorldState};
pub use signal::{input, SignalExpr, SignalParseError};

/// Scale of the circuit layer relative to raw cells and generations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScaleConstants {
    pub cells_per_unit: i64,
    pub cells_per_tile: i64,
    pub steps_per_tick: u64,
    pub halftiles_per_megacell: i64,
    pub cells_per_megacell: i64,
    pub ticks_per_period: u64,
    pub pulse_width: u64,
}

pub const SCALE: ScaleConstants = ScaleConstants {
    cells_per_unit: 75,
    cells_per_tile: 150,
    steps_per_tick: 60,
    halftiles_per_megacell: 42,
    cells_per_megacell: 3150,
    ticks_per_period: 586,
    pulse_width: 22,
};

pub fn scale_constants() -> ScaleConstants {
    SCALE
}

/// Generations per simulated generation of the mega grid.
pub fn steps_per_mega_generation() -> u64 {
    SCALE.steps_per_tick * SCALE.ticks_per_period
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    N,
    E,
    S,
    W,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::N, Dir::E, Dir::S, Dir::W];

    /// Unit vector; y grows south.
    pub fn vec(self) -> Cell {
        match self {
            Dir::N => Cell::new(0, -1),
            Dir::E => Cell::new(1, 0),
            Dir::S => Cell::new(0, 1),
            Dir::W => Cell::new(-1, 0),
        }
    }

    /// Quarter turn counter-clockwise on screen.
    pub fn ccw(self) -> Dir {
        match self {
            Dir::E => Dir::N,
            Dir::N => Dir::W,
            Dir::W => Dir::S,
            Dir::S => Dir::E,
        }
    }

    pub fn is_vertical(self) -> bool {
        matches!(self, Dir::N | Dir::S)
    }

    pub fn letter(self) -> char {
        match self {
            Dir::N => 'N',
            Dir::E => 'E',
            Dir::S => 'S',
            Dir::W => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Dir> {
        match c {
            'N' => Some(Dir::N),
            'E' => Some(Dir::E),
            'S' => Some(Dir::S),
            'W' => Some(Dir::W),
            _ => None,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

pub fn is_port_pos(p: Cell) -> bool {
    (p.x.rem_euclid(2) == 1) != (p.y.rem_euclid(2) == 1)
}

pub fn is_anchor(p: Cell) -> bool {
    p.x.rem_euclid(2) == 0 && p.y.rem_euclid(2) == 0
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PortSpec {
    pub pos: Cell,
    pub dir: Dir,
    pub sig: SignalExpr,
}

impl PortSpec {
    pub fn new(pos: (i64, i64), dir: Dir, sig: SignalExpr) -> Self {
        PortSpec { pos: Cell::from(pos), dir, sig }
    }

    pub fn key(&self) -> (Cell, Dir) {
        (self.pos, self.dir)
    }
}

impl fmt::Display for PortSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) {} {}", self.pos.x, self.pos.y, self.dir, self.sig)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CircuitSpec {
    pub area: BTreeSet<Cell>,
    pub ins: BTreeSet<PortSpec>,
    pub outs: BTreeSet<PortSpec>,
    pub init: WorldState,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("tile anchor {0} is not double-even")]
    BadAnchor(Cell),
    #[error("port position {0} is not on a tile edge")]
    BadPort(Cell),
    #[error("input {pos} {dir} does not lead into the area")]
    DanglingInput { pos: Cell, dir: Dir },
    #[error("output {pos} {dir} does not leave the area")]
    DanglingOutput { pos: Cell, dir: Dir },
    #[error("two {side} share {pos} {dir}")]
    DuplicatePort { side: &'static str, pos: Cell, dir: Dir },
    #[error("translation vector {0} is not even")]
    OddVector(Cell),
    #[error("areas overlap at {0}")]
    AreaOverlap(Cell),
    #[error("unmatched {side} port {pos} {dir}")]
    UnmatchedPort { side: &'static str, pos: Cell, dir: Dir },
    #[error("signals differ at {pos} {dir}: {left} vs {right}")]
    SignalMismatch { pos: Cell, dir: Dir, left: SignalExpr, right: SignalExpr },
    #[error("port {0} is not among both the inputs and the outputs")]
    NotInternal(String),
    #[error("area anchor {0} is outside the fundamental domain")]
    OutsideDomain(Cell),
}

impl CircuitSpec {
    pub fn new(
        area: impl IntoIterator<Item = (i64, i64)>,
        ins: impl IntoIterator<Item = PortSpec>,
        outs: impl IntoIterator<Item = PortSpec>,
        init: WorldState,
    ) -> Self {
        CircuitSpec {
            area: area.into_iter().map(Cell::from).collect(),
            ins: ins.into_iter().collect(),
            outs: outs.into_iter().collect(),
            init,
        }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn check(&self) -> Result<(), SpecError> {
        for &a in &self.area {
            if !is_anchor(a) {
                return Err(SpecError::BadAnchor(a));
            }
        }
        for (side, ports) in [("inputs", &self.ins), ("outputs", &self.outs)] {
            let mut seen = BTreeSet::new();
            for p in ports {
                if !is_port_pos(p.pos) {
                    return Err(SpecError::BadPort(p.pos));
                }
                if !seen.insert(p.key()) {
                    return Err(SpecError::DuplicatePort { side, pos: p.pos, dir: p.dir });
                }
            }
        }
        for p in &self.ins {
            if !self.area.contains(&(p.pos + p.dir.vec())) {
                return Err(SpecError::DanglingInput { pos: p.pos, dir: p.dir });
            }
        }
        for p in &self.outs {
            if !self.area.contains(&(p.pos - p.dir.vec())) {
                return Err(SpecError::DanglingOutput { pos: p.pos, dir: p.dir });
            }
        }
        Ok(())
    }

    /// Input names in sorted order.
    pub fn input_names(&self) -> Vec<String> {
        let mut names = BTreeSet::new();
        for p in &self.ins {
            names.extend(p.sig.names());
        }
        names.into_iter().collect()
    }

    pub fn max_output_delay(&self) -> u32 {
        self.outs.iter().map(|p| p.sig.max_delay()).max().unwrap_or(0)
    }

    /// Text form: `area:`, `in:` and `out:` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::from("area:");
        for a in &self.area {
            s += &format!(" ({},{})", a.x, a.y);
        }
        s.push('\n');
        for p in &self.ins {
            s += &format!("in: {p}\n");
        }
        for p in &self.outs {
            s += &format!("out: {p}\n");
        }
        s
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

pub fn translate(s: &CircuitSpec, v: Cell) -> Result<CircuitSpec, SpecError> {
    if !is_anchor(v) {
        return Err(SpecError::OddVector(v));
    }
    let mv = |p: &PortSpec| PortSpec { pos: p.pos + v, ..p.clone() };
    Ok(CircuitSpec {
        area: s.area.iter().map(|&a| a + v).collect(),
        ins: s.ins.iter().map(mv).collect(),
        outs: s.outs.iter().map(mv).collect(),
        init: s.init.translate(Cell::new(v.x * SCALE.cells_per_unit, v.y * SCALE.cells_per_unit)),
    })
}

pub fn substitute(s: &CircuitSpec, binding: &BTreeMap<String, SignalExpr>) -> CircuitSpec {
    let sub = |p: &PortSpec| PortSpec { sig: p.sig.substitute(binding), ..p.clone() };
    CircuitSpec {
        area: s.area.clone(),
        ins: s.ins.iter().map(sub).collect(),
        outs: s.outs.iter().map(sub).collect(),
        init: s.init.clone(),
    }
}

// Every port of `from` pointing into `area` must appear verbatim in `to`.
fn check_matching(
    from: &BTreeSet<PortSpec>,
    is_input: bool,
    area: &BTreeSet<Cell>,
    to: &BTreeSet<PortSpec>,
) -> Result<(), SpecError> {
    for p in from {
        let other_tile = if is_input { p.pos - p.dir.vec() } else { p.pos + p.dir.vec() };
        if !area.contains(&other_tile) || to.contains(p) {
            continue;
        }
        if let Some(q) = to.iter().find(|q| q.key() == p.key()) {
            return Err(SpecError::SignalMismatch { pos: p.pos, dir: p.dir, left: p.sig.clone(), right: q.sig.clone() });
        }
        let side = if is_input { "input" } else { "output" };
        return Err(SpecError::UnmatchedPort { side, pos: p.pos, dir: p.dir });
    }
    Ok(())
}

/// Union of two specs whose areas are disjoint and whose facing ports match.
pub fn compose(s1: &CircuitSpec, s2: &CircuitSpec) -> Result<CircuitSpec, SpecError> {
    if let Some(&c) = s1.area.intersection(&s2.area).next() {
        return Err(SpecError::AreaOverlap(c));
    }
    check_matching(&s1.ins, true, &s2.area, &s2.outs)?;
    check_matching(&s1.outs, false, &s2.area, &s2.ins)?;
    check_matching(&s2.ins, true, &s1.area, &s1.outs)?;
    check_matching(&s2.outs, false, &s1.area, &s1.ins)?;
    Ok(CircuitSpec {
        area: s1.area.union(&s2.area).copied().collect(),
        ins: s1.ins.union(&s2.ins).cloned().collect(),
        outs: s1.outs.union(&s2.outs).cloned().collect(),
        init: s1.init.union(&s2.init),
    })
}

/// Removes ports present on both sides.
pub fn internalize(s: &CircuitSpec, m: &BTreeSet<PortSpec>) -> Result<CircuitSpec, SpecError> {
    for p in m {
        if !s.ins.contains(p) || !s.outs.contains(p) {
            return Err(SpecError::NotInternal(p.to_string()));
        }
    }
    Ok(CircuitSpec {
        area: s.area.clone(),
        ins: s.ins.difference(m).cloned().collect(),
        outs: s.outs.difference(m).cloned().collect(),
        init: s.init.clone(),
    })
}

/// All ports of `s` that appear among both inputs and outputs.
pub fn matched_ports(s: &CircuitSpec) -> BTreeSet<PortSpec> {
    s.ins.intersection(&s.outs).cloned().collect()
}

/// A spec repeated over the lattice `42 Z^2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TiledSpec {
    pub base: CircuitSpec,
}

fn lattice_offset(pos: Cell, base: Cell) -> Option<Cell> {
    let n = SCALE.halftiles_per_megacell;
    let d = pos - base;
    (d.x.rem_euclid(n) == 0 && d.y.rem_euclid(n) == 0).then(|| Cell::new(d.x / n, d.y / n))
}

/// Representative of a position modulo the lattice.
pub fn quotient(p: Cell) -> Cell {
    let n = SCALE.halftiles_per_megacell;
    Cell::new(p.x.rem_euclid(n), p.y.rem_euclid(n))
}

pub fn tile(s: &CircuitSpec) -> Result<TiledSpec, SpecError> {
    let n = SCALE.halftiles_per_megacell;
    for &a in &s.area {
        if a.x < 0 || a.y < 0 || a.x >= n || a.y >= n {
            return Err(SpecError::OutsideDomain(a));
        }
    }
    Ok(TiledSpec { base: s.clone() })
}

impl TiledSpec {
    pub fn area_contains(&self, p: Cell) -> bool {
        self.base.area.contains(&quotient(p))
    }

    fn find(ports: &BTreeSet<PortSpec>, pos: Cell, dir: Dir) -> Option<(PortSpec, Cell)> {
        ports.iter().filter(|p| p.dir == dir).find_map(|p| {
            lattice_offset(pos, p.pos).map(|z| (PortSpec { pos, ..p.clone() }, z))
        })
    }

    pub fn input_at(&self, pos: Cell, dir: Dir) -> Option<(PortSpec, Cell)> {
        Self::find(&self.base.ins, pos, dir)
    }

    pub fn output_at(&self, pos: Cell, dir: Dir) -> Option<(PortSpec, Cell)> {
        Self::find(&self.base.outs, pos, dir)
    }

    /// First pair of ports on one side sharing a quotient key.
    pub fn duplicate(&self) -> Option<(Cell, Dir)> {
        for ports in [&self.base.ins, &self.base.outs] {
            let mut seen = BTreeSet::new();
            for p in ports {
                let k = (quotient(p.pos), p.dir);
                if !seen.insert(k) {
                    return Some(k);
                }
            }
        }
        None
    }
}

fn render_ports(ports: &BTreeSet<PortSpec>) -> String {
    let v: Vec<String> = ports.iter().map(|p| format!("(({},{}),{},{})", p.pos.x, p.pos.y, p.dir, p.sig)).collect();
    format!("{{{}}}", v.join(", "))
}

/// One-line `circuit_run` form of a spec; `init` names the initial pattern.
pub fn render_run(s: &CircuitSpec, init: &str) -> String {
    let area: Vec<String> = s.area.iter().map(|a| format!("({},{})", a.x, a.y)).collect();
    format!("circuit_run {{{}}} {} {} {}", area.join(", "), render_ports(&s.ins), render_ports(&s.outs), init)
}

/// The AND-then-wire derivation, one rendered line per step.
pub fn and_wire_derivation(and_spec: &CircuitSpec, wire_spec: &CircuitSpec) -> Result<(Vec<String>, CircuitSpec), SpecError> {
    let label = |s: &CircuitSpec| if s.init.is_empty() { "empty" } else { "and_gate_pattern" };
    let s3 = translate(wire_spec, Cell::new(2, 0))?;
    let and_out = and_spec.outs.iter().next().map(|p| p.sig.clone()).unwrap_or_else(|| input("a"));
    let s4 = substitute(&s3, &[("a".to_string(), and_out)].into());
    let s5 = compose(and_spec, &s4)?;
    let s6 = internalize(&s5, &matched_ports(&s5))?;
    let steps = [
        (and_spec, "AND gate spec"),
        (wire_spec, "wire spec"),
        (&s3, "translate (2)"),
        (&s4, "substitute (3)"),
        (&s5, "compose (1,4)"),
        (&s6, "internalize (5)"),
    ];
    let lines = steps.iter().enumerate().map(|(i, (s, why))| format!("{}. {}  [{}]", i + 1, render_run(s, label(s)), why)).collect();
    Ok((lines, s6))
}
