//! The per-tick port protocol as a modifier source, concrete observation of
//! output streams, and symbolic gate verification.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{CircuitSpec, Dir, PortSpec, SignalExpr, SpecError, SCALE};
use crate::io::{io_step, Area, IoError, Modifier, ModifierSource};
use crate::life::{adjacents, patterns, rle, step, BBox, Cell, CellSet, WorldState};
use crate::symbolic::{age_grid, equiv, sym_step, BExp, Stream, SymError, SymGrid};

/// Half side of a port square in cells.
pub const PORT_HALF: i64 = 7;

const STEPS: u64 = SCALE.steps_per_tick;
const HALF: u64 = STEPS / 2;

/// Cell box of the tile anchored at half-tile `a`.
pub fn tile_box(a: Cell) -> BBox {
    let u = SCALE.cells_per_unit;
    BBox { min: Cell::new(u * a.x - u, u * a.y - u), max: Cell::new(u * a.x + u - 1, u * a.y + u - 1) }
}

pub fn port_point(pos: Cell) -> Cell {
    Cell::new(pos.x * SCALE.cells_per_unit, pos.y * SCALE.cells_per_unit)
}

pub fn port_square(pos: Cell) -> BBox {
    let p = port_point(pos);
    BBox { min: Cell::new(p.x - PORT_HALF, p.y - PORT_HALF), max: Cell::new(p.x + PORT_HALF - 1, p.y + PORT_HALF - 1) }
}

pub fn port_square_cells(pos: Cell) -> CellSet {
    let b = port_square(pos);
    (b.min.y..=b.max.y).flat_map(|y| (b.min.x..=b.max.x).map(move |x| Cell::new(x, y))).collect()
}

/// Quarter turn of a cell about the corner point shared by four cells.
pub fn rot_cell(c: Cell) -> Cell {
    Cell::new(c.y, -1 - c.x)
}

/// LWSS stamp relative to the port point, travelling in `dir` and sitting
/// just behind the edge.
pub fn lwss_stamp(dir: Dir) -> WorldState {
    let mut s = patterns::lwss_east().translate(Cell::new(-5, -2));
    let turns = match dir {
        Dir::E => 0,
        Dir::N => 1,
        Dir::W => 2,
        Dir::S => 3,
    };
    for _ in 0..turns {
        s = s.iter().map(rot_cell).collect();
    }
    s
}

pub fn port_stamp(pos: Cell, dir: Dir) -> WorldState {
    lwss_stamp(dir).translate(port_point(pos))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("ports share position {0}")]
    OverlappingPorts(Cell),
    #[error(transparent)]
    Spec(#[from] SpecError),
}

#[derive(Clone, Debug)]
struct Port {
    spec: PortSpec,
    square: CellSet,
    stamp: WorldState,
}

/// Geometry of a spec's protocol, independent of stream values.
#[derive(Clone, Debug)]
pub struct Layout {
    pub spec: CircuitSpec,
    area_a: Area,
    area_b: Area,
    ins: Vec<Port>,
    outs: Vec<Port>,
}

impl Layout {
    pub fn new(spec: &CircuitSpec) -> Result<Layout, ProtocolError> {
        spec.check()?;
        let mut seen = BTreeSet::new();
        for p in spec.ins.iter().chain(&spec.outs) {
            if !seen.insert(p.pos) {
                return Err(ProtocolError::OverlappingPorts(p.pos));
            }
        }
        let port = |p: &PortSpec| Port { spec: p.clone(), square: port_square_cells(p.pos), stamp: port_stamp(p.pos, p.dir) };
        let ins: Vec<Port> = spec.ins.iter().map(port).collect();
        let outs: Vec<Port> = spec.outs.iter().map(port).collect();
        let tiles: Vec<BBox> = spec.area.iter().map(|&a| tile_box(a)).collect();
        // First half: E/W inputs are leaving their squares, N/S outputs arriving.
        let (mut inc_a, mut exc_a, mut inc_b, mut exc_b) = (tiles.clone(), vec![], tiles, vec![]);
        for p in &ins {
            let sq = port_square(p.spec.pos);
            if p.spec.dir.is_vertical() {
                exc_a.push(sq);
                inc_b.push(sq);
            } else {
                inc_a.push(sq);
                exc_b.push(sq);
            }
        }
        for p in &outs {
            let sq = port_square(p.spec.pos);
            if p.spec.dir.is_vertical() {
                inc_a.push(sq);
                exc_b.push(sq);
            } else {
                exc_a.push(sq);
                inc_b.push(sq);
            }
        }
        Ok(Layout {
            spec: spec.clone(),
            area_a: Area::Rects { include: inc_a, exclude: exc_a },
            area_b: Area::Rects { include: inc_b, exclude: exc_b },
            ins,
            outs,
        })
    }

    /// Area in force for step index `i` of a tick.
    pub fn area(&self, i: u64) -> &Area {
        if i < HALF {
            &self.area_a
        } else {
            &self.area_b
        }
    }

    fn acting(&self, i: u64) -> Option<bool> {
        if i == HALF - 1 {
            Some(true)
        } else if i == STEPS - 1 {
            Some(false)
        } else {
            None
        }
    }

    /// Builds the modifier for step `i` of `tick` given port values.
    fn modifier(&self, tick: u64, i: u64, value: &dyn Fn(&SignalExpr, u64) -> bool) -> Modifier {
        let mut m = Modifier::with_area(self.area(i).clone());
        let Some(vertical) = self.acting(i) else {
            return m;
        };
        for p in self.outs.iter().filter(|p| p.spec.dir.is_vertical() == vertical) {
            m.deletions.extend(p.square.iter().copied());
            m.assert_area.extend(p.square.iter().copied());
            if value(&p.spec.sig, tick) {
                m.assert_content = m.assert_content.union(&p.stamp);
            }
        }
        for p in self.ins.iter().filter(|p| p.spec.dir.is_vertical() == vertical) {
            if value(&p.spec.sig, tick) {
                m.insertions = m.insertions.union(&p.stamp);
            }
        }
        m
    }
}

/// Concrete input streams by name; missing names and ticks read false.
pub type Streams = BTreeMap<String, Vec<bool>>;

fn stream_value(streams: &Streams, name: &str, t: u64) -> bool {
    streams.get(name).and_then(|v| v.get(t as usize)).copied().unwrap_or(false)
}

/// The protocol of a spec under concrete input streams.
pub struct Protocol {
    pub layout: Layout,
    pub streams: Streams,
    idle: [Modifier; 2],
}

impl Protocol {
    pub fn new(spec: &CircuitSpec, streams: Streams) -> Result<Protocol, ProtocolError> {
        let layout = Layout::new(spec)?;
        let idle = [Modifier::with_area(layout.area_a.clone()), Modifier::with_area(layout.area_b.clone())];
        Ok(Protocol { layout, streams, idle })
    }

    pub fn value(&self, sig: &SignalExpr, t: u64) -> bool {
        sig.eval(t, &|n, k| stream_value(&self.streams, n, k))
    }
}

impl ModifierSource for Protocol {
    fn modifier(&self, n: u64) -> Cow<'_, Modifier> {
        let (tick, i) = (n / STEPS, n % STEPS);
        if self.layout.acting(i).is_none() {
            return Cow::Borrowed(&self.idle[(i >= HALF) as usize]);
        }
        Cow::Owned(self.layout.modifier(tick, i, &|s, t| self.value(s, t)))
    }
}

/// The 60 modifiers of one tick.
pub fn make_protocol(spec: &CircuitSpec, tick: u64, streams: &Streams) -> Result<Vec<Modifier>, ProtocolError> {
    let p = Protocol::new(spec, streams.clone())?;
    Ok((0..STEPS).map(|i| p.modifier(tick * STEPS + i).into_owned()).collect())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ObserveError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("tick {tick} step {step}: {error}")]
    Io { tick: u64, step: u64, error: IoError },
    #[error("output {pos} {dir} at tick {tick} holds neither a spaceship nor nothing")]
    Garbled { pos: Cell, dir: Dir, tick: u64 },
}

/// Runs the protocol without output assertions and reads each output port
/// per tick: `true` for the stamp, `false` for an empty square.
pub fn observe_outputs(
    spec: &CircuitSpec,
    pattern: &WorldState,
    streams: &Streams,
    ticks: u64,
) -> Result<BTreeMap<(Cell, Dir), Vec<bool>>, ObserveError> {
    let proto = Protocol::new(spec, streams.clone())?;
    let mut seen: BTreeMap<(Cell, Dir), Vec<bool>> = spec.outs.iter().map(|p| (p.key(), Vec::new())).collect();
    let mut s = pattern.clone();
    for tick in 0..ticks {
        for i in 0..STEPS {
            let mut m = proto.modifier(tick * STEPS + i).into_owned();
            if let Some(vertical) = proto.layout.acting(i) {
                let after = step(&s);
                for p in proto.layout.outs.iter().filter(|p| p.spec.dir.is_vertical() == vertical) {
                    let got = after.restrict(&p.square);
                    let bit = if got == p.stamp {
                        true
                    } else if got.is_empty() {
                        false
                    } else {
                        return Err(ObserveError::Garbled { pos: p.spec.pos, dir: p.spec.dir, tick });
                    };
                    seen.get_mut(&p.spec.key()).expect("output registered").push(bit);
                }
                m.assert_area.clear();
                m.assert_content = WorldState::new();
            }
            s = io_step(&m, &s).map_err(|error| ObserveError::Io { tick, step: i, error })?;
        }
    }
    Ok(seen)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("tick {tick} step {step}: influence escapes the area at {cell}")]
    BoundaryEscape { tick: u64, step: u64, cell: Cell },
    #[error("output {port} at tick {tick}: cell {cell} does not match the specification")]
    AssertionMismatch { port: String, tick: u64, cell: Cell },
    #[error("no symbolic fixed point within {0} ticks")]
    NonConvergence(u64),
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("bad gate specification: {0}")]
    BadSpec(String),
}

impl From<ProtocolError> for VerifyError {
    fn from(e: ProtocolError) -> Self {
        VerifyError::BadSpec(e.to_string())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub max_warmup: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { max_warmup: 32 }
    }
}

#[derive(Clone, Debug)]
pub struct GateCertificate {
    pub spec: CircuitSpec,
    pub pattern: WorldState,
    pub verified: bool,
    pub fixpoint: SymGrid,
    pub fixpoint_tick: u64,
    pub pattern_sha256: String,
    pub spec_sha256: String,
    pub fixpoint_sha256: String,
}

fn sha_hex(data: &[u8]) -> String {
    hex::encode(Sha256::digest(data))
}

impl GateCertificate {
    /// Delay of the slowest output.
    pub fn delay(&self) -> u32 {
        self.spec.max_output_delay()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("gate-certificate 1\n");
        let _ = writeln!(s, "verified: {}", self.verified);
        let _ = writeln!(s, "fixpoint-tick: {}", self.fixpoint_tick);
        let _ = writeln!(s, "pattern-sha256: {}", self.pattern_sha256);
        let _ = writeln!(s, "spec-sha256: {}", self.spec_sha256);
        let _ = writeln!(s, "fixpoint-sha256: {}", self.fixpoint_sha256);
        s + &self.spec.to_text()
    }
}

struct SymRun<'a> {
    layout: &'a Layout,
    names: Vec<String>,
}

impl SymRun<'_> {
    fn stream(&self, name: &str) -> Stream {
        if self.names.first().map(String::as_str) == Some(name) {
            Stream::A
        } else {
            Stream::B
        }
    }

    fn expect(&self, sig: &SignalExpr, t: u64) -> BExp {
        sig.to_bexp(t, &|n| self.stream(n))
    }

    fn tick(&self, g: &SymGrid, tick: u64) -> Result<SymGrid, VerifyError> {
        let mut g = g.clone();
        for i in 0..STEPS {
            let area = self.layout.area(i);
            for (c, _) in g.support() {
                for n in std::iter::once(c).chain(adjacents(c)) {
                    if !area.contains(n) {
                        return Err(VerifyError::BoundaryEscape { tick, step: i, cell: n });
                    }
                }
            }
            g = sym_step(&g)?;
            if let Some(vertical) = self.layout.acting(i) {
                for p in self.layout.outs.iter().filter(|p| p.spec.dir.is_vertical() == vertical) {
                    let want = self.expect(&p.spec.sig, tick);
                    let mut cells: Vec<Cell> = p.square.iter().copied().collect();
                    cells.sort_by_key(|c| (c.y, c.x));
                    for c in cells {
                        let target = if p.stamp.contains(c) { &want } else { &BExp::False };
                        if !equiv(g.get(c), target)? {
                            return Err(VerifyError::AssertionMismatch { port: p.spec.to_string(), tick, cell: c });
                        }
                        if !g.get(c).is_false() {
                            g.set(c, BExp::False);
                        }
                    }
                }
                for p in self.layout.ins.iter().filter(|p| p.spec.dir.is_vertical() == vertical) {
                    let v = self.expect(&p.spec.sig, tick);
                    if v.is_false() {
                        continue;
                    }
                    for c in p.stamp.sorted() {
                        let cur = g.get(c).clone();
                        g.set(c, BExp::or(v.clone(), cur));
                    }
                }
            }
            g = g.trim();
        }
        Ok(g)
    }
}

/// Symbolically verifies that `pattern` implements `spec` under the protocol.
pub fn verify_gate(pattern: &WorldState, spec: &CircuitSpec, opts: VerifyOptions) -> Result<GateCertificate, VerifyError> {
    let names = spec.input_names();
    if names.len() > 2 {
        return Err(VerifyError::BadSpec(format!("{} inputs; at most 2 are supported", names.len())));
    }
    let layout = Layout::new(spec)?;
    let run = SymRun { layout: &layout, names };
    let min_t = spec.max_output_delay() as u64 + 1;
    let mut prev = SymGrid::from_world(pattern).trim();
    let mut found = None;
    for t in 0..opts.max_warmup {
        let next = run.tick(&prev, t)?;
        if t + 1 >= min_t && next.equiv(&age_grid(&prev))? {
            found = Some((t + 1, next));
            break;
        }
        prev = next;
    }
    let Some((ft, fix)) = found else {
        return Err(VerifyError::NonConvergence(opts.max_warmup));
    };
    // The inside check: one more tick from the fixed point.
    let after = run.tick(&fix, ft)?;
    if !after.equiv(&age_grid(&fix))? {
        return Err(VerifyError::NonConvergence(opts.max_warmup));
    }
    let fix = fix.simplified()?;
    Ok(GateCertificate {
        pattern_sha256: sha_hex(rle::encode(pattern).as_bytes()),
        spec_sha256: sha_hex(spec.to_text().as_bytes()),
        fixpoint_sha256: sha_hex(fix.dump().as_bytes()),
        spec: spec.clone(),
        pattern: pattern.clone(),
        verified: true,
        fixpoint: fix,
        fixpoint_tick: ft,
    })
}
