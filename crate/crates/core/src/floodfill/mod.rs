//! Floodfill assembly of a mega-cell: a state of placed gates with pending
//! input and output ports, grown one gate at a time.

pub mod diagram;
pub mod drive;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::circuit::library::{Gate, GateKind, Orientation};
use crate::circuit::{is_anchor, is_port_pos, quotient, Dir, PortSpec, SignalExpr, SCALE};
use crate::life::Cell;
use crate::values::{
    next_cell_formula, refines, translate_value, v_and, v_delay, v_not, v_or, v_xor, AValue, EValue, Value, ValueError,
};

pub use diagram::{parse_diagram, Diagram, DiagramError, Placement};
pub use drive::{ff_drive, parse_seeds, DriveError, DriveOptions, DriveReport, Seed, SeedParseError};

const DOMAIN: i64 = SCALE.halftiles_per_megacell;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FFPort {
    pub pos: Cell,
    pub dir: Dir,
    pub val: Value,
}

impl FFPort {
    pub fn key(&self) -> (Cell, Dir) {
        (self.pos, self.dir)
    }
}

/// Transcript form of a value; the rule formula itself prints as `nextCell`.
pub fn show_value(v: &Value) -> String {
    match v {
        Value::Approx(a, n) if *a == next_cell_formula() => format!("nextCell@{n}"),
        _ => v.to_string(),
    }
}

impl fmt::Display for FFPort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}) {} {}", self.pos.x, self.pos.y, self.dir, show_value(&self.val))
    }
}

/// A crossover whose second input has not arrived yet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PendingCross {
    pub in_pos: Cell,
    pub out_pos: Cell,
    pub dir: Dir,
    pub delay: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlacedGate {
    pub pos: Cell,
    pub gate: String,
    pub orientation: Orientation,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FFState {
    pub area: BTreeSet<Cell>,
    pub ins: Vec<FFPort>,
    pub outs: Vec<FFPort>,
    pub crosses: Vec<PendingCross>,
    pub gates: Vec<PlacedGate>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FFError {
    #[error("tile {0} is already occupied")]
    AreaOverlap(Cell),
    #[error("tile {0} lies outside [0,42)^2")]
    OutOfBounds(Cell),
    #[error("seed value {0} is not exact")]
    NotExact(Value),
    #[error("gate {gate} takes {expected} inputs, got {got}")]
    Arity { gate: String, expected: usize, got: usize },
    #[error("port ({},{}) {} collides with an existing port", .0.x, .0.y, .1)]
    PortCollision(Cell, Dir),
    #[error("no pending output at ({},{}) {}", .0.x, .0.y, .1)]
    MissingInput(Cell, Dir),
    #[error("no pending crossover matches an output")]
    NoPendingCross,
    #[error("gate {0} is not a crossover")]
    NotCrossover(String),
    #[error("kernel gate {0} needs one input and one output")]
    BadKernel(String),
    #[error("no output with index {0}")]
    BadIndex(usize),
    #[error("value: {0}")]
    Value(#[from] ValueError),
    #[error("invariant: {0}")]
    Invariant(String),
}

fn in_domain(a: Cell) -> bool {
    (0..DOMAIN).contains(&a.x) && (0..DOMAIN).contains(&a.y)
}

impl FFState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn out_index(&self, pos: Cell, dir: Dir) -> Option<usize> {
        self.outs.iter().position(|o| o.pos == pos && o.dir == dir)
    }

    /// Bounds, parity and duplicate-freedom.
    pub fn check_invariants(&self) -> Result<(), FFError> {
        for &a in &self.area {
            if !is_anchor(a) || !in_domain(a) {
                return Err(FFError::Invariant(format!("bad area anchor {a}")));
            }
        }
        for (side, ports) in [("in", &self.ins), ("out", &self.outs)] {
            let mut seen = BTreeSet::new();
            for p in ports {
                if !is_port_pos(p.pos) {
                    return Err(FFError::Invariant(format!("{side} {p} is not a port position")));
                }
                if !seen.insert(p.key()) {
                    return Err(FFError::Invariant(format!("duplicate {side} {p}")));
                }
            }
        }
        Ok(())
    }

    fn claim_area(&mut self, g: &Gate, o: Orientation, p: Cell) -> Result<(), FFError> {
        let tiles: Vec<Cell> = g.get(o).spec.area.iter().map(|&a| a + p).collect();
        for &t in &tiles {
            if !in_domain(t) {
                return Err(FFError::OutOfBounds(t));
            }
            if self.area.contains(&t) {
                return Err(FFError::AreaOverlap(t));
            }
        }
        self.area.extend(tiles);
        Ok(())
    }

    fn push_out(&mut self, port: FFPort) -> Result<(), FFError> {
        if self.out_index(port.pos, port.dir).is_some() {
            return Err(FFError::PortCollision(port.pos, port.dir));
        }
        self.outs.push(port);
        Ok(())
    }
}

/// `this@m` with `m >= 0` weakened to `cell(0,0)@m`; anything else unchanged.
fn weaken(v: &Value) -> Option<Value> {
    match v {
        Value::Exact(EValue::This, m) if *m >= 0 => Some(Value::Approx(AValue::cell(0, 0), *m as u64)),
        _ => None,
    }
}

fn binary(op: fn(&Value, &Value) -> Value, a: Value, b: Value) -> Value {
    let r = op(&a, &b);
    if r != Value::Top {
        return r;
    }
    // retry with exact operands decayed to approximate ones
    let (wa, wb) = (weaken(&a), weaken(&b));
    for (x, y) in [(wa.clone(), None), (None, wb.clone()), (wa, wb)] {
        if x.is_none() && y.is_none() {
            continue;
        }
        let r = op(x.as_ref().unwrap_or(&a), y.as_ref().unwrap_or(&b));
        if r != Value::Top {
            return r;
        }
    }
    Value::Top
}

/// Evaluates a gate output expression over bound input values.
pub fn eval_signal(e: &SignalExpr, env: &BTreeMap<String, Value>) -> Result<Value, FFError> {
    Ok(match e {
        SignalExpr::Input(n) => env.get(n).cloned().unwrap_or(Value::Top),
        SignalExpr::Delay(x, k) => v_delay(&eval_signal(x, env)?, *k as i64)?,
        SignalExpr::Not(x) => {
            let v = eval_signal(x, env)?;
            match v_not(&v) {
                Value::Top => weaken(&v).map(|w| v_not(&w)).unwrap_or(Value::Top),
                r => r,
            }
        }
        SignalExpr::And(a, b) => binary(v_and, eval_signal(a, env)?, eval_signal(b, env)?),
        SignalExpr::Or(a, b) => binary(v_or, eval_signal(a, env)?, eval_signal(b, env)?),
        SignalExpr::Xor(a, b) => binary(v_xor, eval_signal(a, env)?, eval_signal(b, env)?),
    })
}

/// A kernel gate computes the next state of the cell whose current state
/// arrives on its input: `nextCell` with each `cell(d)` replaced by the
/// input value shifted by `d`.
fn eval_kernel(g: &Gate, o: &PortSpec, env: &BTreeMap<String, Value>) -> Result<Value, FFError> {
    let names: Vec<String> = o.sig.names().into_iter().collect();
    if names.len() != 1 {
        return Err(FFError::BadKernel(g.name.clone()));
    }
    let v = env.get(&names[0]).cloned().unwrap_or(Value::Top);
    let v = weaken(&v).unwrap_or(v);
    Ok(match v {
        Value::Approx(a, n) => {
            let f = next_cell_formula().substitute(&|x, y| a.translate(Cell::new(x, y)));
            Value::Approx(f, n + o.sig.max_delay() as u64)
        }
        _ => Value::Top,
    })
}

fn gate_outputs(g: &Gate, o: Orientation, p: Cell, env: &BTreeMap<String, Value>) -> Result<Vec<FFPort>, FFError> {
    let mut outs = Vec::new();
    for port in &g.get(o).spec.outs {
        let val = match g.kind {
            GateKind::Kernel => eval_kernel(g, port, env)?,
            _ => eval_signal(&port.sig, env)?,
        };
        outs.push(FFPort { pos: port.pos + p, dir: port.dir, val });
    }
    Ok(outs)
}

/// Places a gate whose inputs become external inputs of the state, bound to
/// `vals` in the order of the gate's sorted input names.
pub fn ff_add_ins(st: &FFState, g: &Gate, o: Orientation, p: Cell, vals: &[Value]) -> Result<(FFState, Vec<FFPort>), FFError> {
    let spec = &g.get(o).spec;
    let names = spec.input_names();
    if names.len() != vals.len() {
        return Err(FFError::Arity { gate: g.name.clone(), expected: names.len(), got: vals.len() });
    }
    if let Some(v) = vals.iter().find(|v| !v.is_exact()) {
        return Err(FFError::NotExact(v.clone()));
    }
    let mut next = st.clone();
    next.claim_area(g, o, p)?;
    let env: BTreeMap<String, Value> = names.into_iter().zip(vals.iter().cloned()).collect();
    for i in &spec.ins {
        let pos = i.pos + p;
        let taken = st.ins.iter().chain(&st.outs).any(|q| q.pos == pos);
        if taken {
            return Err(FFError::PortCollision(pos, i.dir));
        }
        let val = env.get(&i.sig.to_string()).cloned().unwrap_or(Value::Top);
        next.ins.push(FFPort { pos, dir: i.dir, val });
    }
    let outs = gate_outputs(g, o, p, &env)?;
    for port in &outs {
        next.push_out(port.clone())?;
    }
    next.gates.push(PlacedGate { pos: p, gate: g.name.clone(), orientation: o });
    Ok((next, outs))
}

/// Places a gate all of whose inputs face pending outputs, consuming them.
pub fn ff_add_gate(st: &FFState, g: &Gate, o: Orientation, p: Cell) -> Result<(FFState, Vec<FFPort>), FFError> {
    let spec = &g.get(o).spec;
    let mut next = st.clone();
    next.claim_area(g, o, p)?;
    let mut env = BTreeMap::new();
    for i in &spec.ins {
        let pos = i.pos + p;
        let k = next.out_index(pos, i.dir).ok_or(FFError::MissingInput(pos, i.dir))?;
        env.insert(i.sig.to_string(), next.outs.remove(k).val);
    }
    let outs = gate_outputs(g, o, p, &env)?;
    for port in &outs {
        next.push_out(port.clone())?;
    }
    next.gates.push(PlacedGate { pos: p, gate: g.name.clone(), orientation: o });
    Ok((next, outs))
}

/// Input port and its matching output for each lane of a crossover.
fn lanes(g: &Gate, o: Orientation) -> Result<Vec<(PortSpec, PortSpec)>, FFError> {
    let spec = &g.get(o).spec;
    if g.kind != GateKind::Crossover || spec.ins.len() != 2 || spec.outs.len() != 2 {
        return Err(FFError::NotCrossover(g.name.clone()));
    }
    let mut v = Vec::new();
    for i in &spec.ins {
        let name = i.sig.to_string();
        let out = spec.outs.iter().find(|q| q.sig.names().contains(&name) && q.dir == i.dir);
        v.push((i.clone(), out.ok_or_else(|| FFError::NotCrossover(g.name.clone()))?.clone()));
    }
    Ok(v)
}

/// Places a crossover through which one pending output passes; the other
/// lane is remembered until its input arrives.
pub fn ff_add_crossover(st: &FFState, g: &Gate, o: Orientation, p: Cell) -> Result<(FFState, Vec<FFPort>), FFError> {
    let lanes = lanes(g, o)?;
    let hit = lanes.iter().enumerate().find_map(|(n, (i, _))| st.out_index(i.pos + p, i.dir).map(|k| (n, k)));
    let (n, k) = hit.ok_or(FFError::MissingInput(lanes[0].0.pos + p, lanes[0].0.dir))?;
    let mut next = st.clone();
    next.claim_area(g, o, p)?;
    let (_, oa) = &lanes[n];
    let a = next.outs.remove(k);
    let moved = FFPort { pos: oa.pos + p, dir: oa.dir, val: v_delay(&a.val, oa.sig.max_delay() as i64)? };
    next.push_out(moved.clone())?;
    let (ib, ob) = &lanes[1 - n];
    next.crosses.push(PendingCross { in_pos: ib.pos + p, out_pos: ob.pos + p, dir: ib.dir, delay: ob.sig.max_delay() });
    next.gates.push(PlacedGate { pos: p, gate: g.name.clone(), orientation: o });
    Ok((next, vec![moved]))
}

/// Sends the first output that faces a pending crossover through it.
pub fn ff_finish_crossover(st: &FFState) -> Result<(FFState, Vec<FFPort>), FFError> {
    let c = (0..st.crosses.len())
        .find(|&c| st.out_index(st.crosses[c].in_pos, st.crosses[c].dir).is_some())
        .ok_or(FFError::NoPendingCross)?;
    ff_finish_crossover_at(st, c)
}

pub fn ff_finish_crossover_at(st: &FFState, c: usize) -> Result<(FFState, Vec<FFPort>), FFError> {
    let pc = st.crosses.get(c).ok_or(FFError::NoPendingCross)?.clone();
    let k = st.out_index(pc.in_pos, pc.dir).ok_or(FFError::MissingInput(pc.in_pos, pc.dir))?;
    let mut next = st.clone();
    let b = next.outs.remove(k);
    next.crosses.remove(c);
    let moved = FFPort { pos: pc.out_pos, dir: pc.dir, val: v_delay(&b.val, pc.delay as i64)? };
    next.push_out(moved.clone())?;
    Ok((next, vec![moved]))
}

/// Moves an output by `42 z` half-tiles, shifting its value accordingly.
pub fn ff_teleport(st: &FFState, index: usize, z: Cell) -> Result<(FFState, Vec<FFPort>), FFError> {
    let o = st.outs.get(index).ok_or(FFError::BadIndex(index))?;
    let moved = FFPort { pos: o.pos + Cell::new(DOMAIN * z.x, DOMAIN * z.y), dir: o.dir, val: translate_value(&o.val, z) };
    let mut next = st.clone();
    next.outs.remove(index);
    next.push_out(moved.clone())?;
    Ok((next, vec![moved]))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinalizeReport {
    pub ok: bool,
    pub lines: Vec<String>,
}

/// Accepts a state whose only ports are two outputs sitting on its two
/// inputs with refining values, one of the inputs being `this@-15`.
pub fn ff_finalize(st: &FFState) -> FinalizeReport {
    let mut lines = Vec::new();
    let mut ok = st.crosses.is_empty();
    if !ok {
        lines.push(format!("pending crossovers: {}", st.crosses.len()));
    }
    let mut pairs = 0;
    for i in &st.ins {
        match st.outs.iter().find(|o| o.key() == i.key()) {
            Some(o) if refines(&o.val, &i.val) => {
                pairs += 1;
                lines.push(format!("pair {} <= {}", o, show_value(&i.val)));
            }
            Some(o) => {
                ok = false;
                lines.push(format!("mismatch {} does not refine {}", o, show_value(&i.val)));
            }
            None => {
                ok = false;
                lines.push(format!("unmatched in {i}"));
            }
        }
    }
    for o in &st.outs {
        if !st.ins.iter().any(|i| i.key() == o.key()) {
            ok = false;
            lines.push(format!("unmatched out {o}"));
        }
    }
    if pairs != 2 {
        ok = false;
        lines.push(format!("expected 2 canceling pairs, found {pairs}"));
    }
    if !st.ins.iter().any(|i| i.val == Value::this(-15)) {
        ok = false;
        lines.push("no input carries this@-15".to_string());
    }
    FinalizeReport { ok, lines }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunConditionError {
    #[error("condition (1): input {0} does not feed a tile of the area")]
    InputTarget(String),
    #[error("condition (2): output {0} does not leave a tile of the area")]
    OutputSource(String),
    #[error("condition (3): input {0} has no matching output")]
    InputUnmatched(String),
    #[error("condition (4): output {0} has no matching input")]
    OutputUnmatched(String),
    #[error("duplicate {side} key ({},{}) {}", .pos.x, .pos.y, .dir)]
    Duplicate { side: &'static str, pos: Cell, dir: Dir },
}

fn lattice_shift(from: Cell, to: Cell) -> Option<Cell> {
    let d = to - from;
    (d.x.rem_euclid(DOMAIN) == 0 && d.y.rem_euclid(DOMAIN) == 0).then(|| Cell::new(d.x / DOMAIN, d.y / DOMAIN))
}

/// Side conditions for reading the state as a run of the periodic circuit.
pub fn ff_check_run_conditions(st: &FFState) -> Result<(), RunConditionError> {
    let area_q: BTreeSet<Cell> = st.area.iter().map(|&a| quotient(a)).collect();
    let inside = |p: Cell| area_q.contains(&quotient(p));
    for (side, ports) in [("in", &st.ins), ("out", &st.outs)] {
        let mut seen = BTreeSet::new();
        for p in ports {
            if !seen.insert((quotient(p.pos), p.dir)) {
                return Err(RunConditionError::Duplicate { side, pos: quotient(p.pos), dir: p.dir });
            }
        }
    }
    for i in &st.ins {
        if !inside(i.pos + i.dir.vec()) {
            return Err(RunConditionError::InputTarget(i.to_string()));
        }
    }
    for o in &st.outs {
        if !inside(o.pos - o.dir.vec()) {
            return Err(RunConditionError::OutputSource(o.to_string()));
        }
    }
    // an output at p + 42z, teleported back by -z, must refine the input
    let matches = |i: &FFPort, o: &FFPort| {
        i.dir == o.dir
            && lattice_shift(i.pos, o.pos).is_some_and(|z| refines(&translate_value(&o.val, -z), &i.val))
    };
    for i in &st.ins {
        if inside(i.pos - i.dir.vec()) && !st.outs.iter().any(|o| matches(i, o)) {
            return Err(RunConditionError::InputUnmatched(i.to_string()));
        }
    }
    for o in &st.outs {
        if inside(o.pos + o.dir.vec()) && !st.ins.iter().any(|i| matches(i, o)) {
            return Err(RunConditionError::OutputUnmatched(o.to_string()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::library::{parse_spec_file, Gate};

    pub(crate) fn gate(name: &str, kind: &str, body: &str) -> Gate {
        let f = parse_spec_file(name, &format!("kind: {kind}\ntrusted: true\n{body}")).unwrap();
        Gate::from_spec_file(name, &f, None, false).unwrap()
    }

    fn wire() -> Gate {
        gate("wire", "gate", "area: (0,0)\nin: (-1,0) E a\nout: (1,0) E a@5\n")
    }

    fn and() -> Gate {
        gate("and", "gate", "area: (0,0)\nin: (-1,0) E a\nin: (0,1) N b\nout: (1,0) E a@5 & b@6\n")
    }

    fn cross() -> Gate {
        gate("cross", "crossover", "area: (0,0)\nin: (-1,0) E a\nin: (0,1) N b\nout: (1,0) E a@5\nout: (0,-1) N b@5\n")
    }

    const O: Orientation = Orientation(0);

    fn c(x: i64, y: i64) -> Cell {
        Cell::new(x, y)
    }

    #[test]
    fn add_ins_places_clock_outputs() {
        let (st, outs) = ff_add_ins(&FFState::new(), &wire(), O, c(2, 2), &[Value::ck(0)]).unwrap();
        assert_eq!(outs, vec![FFPort { pos: c(3, 2), dir: Dir::E, val: Value::ck(5) }]);
        assert_eq!(st.ins[0].val, Value::ck(0));
        assert!(st.check_invariants().is_ok());
        assert_eq!(ff_add_ins(&st, &wire(), O, c(2, 2), &[Value::ck(0)]).unwrap_err(), FFError::AreaOverlap(c(2, 2)));
        let approx = Value::Approx(AValue::cell(0, 0), 1);
        assert!(matches!(ff_add_ins(&FFState::new(), &wire(), O, c(2, 2), &[approx]), Err(FFError::NotExact(_))));
        assert_eq!(ff_add_ins(&FFState::new(), &wire(), O, c(42, 0), &[Value::ck(0)]).unwrap_err(), FFError::OutOfBounds(c(42, 0)));
    }

    #[test]
    fn add_gate_consumes_exactly_its_inputs() {
        let v1 = Value::Approx(AValue::cell(0, 0), 3);
        let v2 = Value::Approx(AValue::cell(1, 0), 4);
        let mut st = FFState::new();
        st.outs.push(FFPort { pos: c(1, 2), dir: Dir::E, val: v1.clone() });
        st.outs.push(FFPort { pos: c(2, 3), dir: Dir::N, val: v2.clone() });
        st.outs.push(FFPort { pos: c(9, 10), dir: Dir::S, val: Value::Top });
        let (next, outs) = ff_add_gate(&st, &and(), O, c(2, 2)).unwrap();
        let want = v_and(&v_delay(&v1, 5).unwrap(), &v_delay(&v2, 6).unwrap());
        assert_eq!(outs[0].val, want);
        assert_eq!(next.outs.len(), 2);
        assert_eq!(next.outs[0].pos, c(9, 10));
        assert_eq!(next.gates.len(), 1);
        st.outs.remove(1);
        assert_eq!(ff_add_gate(&st, &and(), O, c(2, 2)).unwrap_err(), FFError::MissingInput(c(2, 3), Dir::N));
    }

    #[test]
    fn exact_operands_decay_when_needed() {
        let env: BTreeMap<String, Value> = [("a".to_string(), Value::this(0)), ("b".to_string(), Value::this(0))].into();
        let e: SignalExpr = "a@5 & b@6".parse().unwrap();
        let want = Value::Approx(AValue::cell(0, 0).and(AValue::cell(0, 0)), 6);
        assert_eq!(eval_signal(&e, &env).unwrap(), want);
        // negative delays cannot decay
        let env: BTreeMap<String, Value> = [("a".to_string(), Value::this(-20)), ("b".to_string(), Value::this(0))].into();
        assert_eq!(eval_signal(&e, &env).unwrap(), Value::Top);
    }

    #[test]
    fn kernel_of_own_cell_is_next_cell() {
        let k = gate("kernel", "kernel", "area: (0,0)\nin: (-1,0) E a\nout: (1,0) E a@10\n");
        let (_, outs) = ff_add_ins(&FFState::new(), &k, O, c(0, 0), &[Value::this(3)]).unwrap();
        assert_eq!(outs[0].val, Value::Approx(next_cell_formula(), 13));
        assert_eq!(outs[0].to_string(), "(1,0) E nextCell@13");
    }

    #[test]
    fn crossover_two_visits() {
        let a = Value::Approx(AValue::cell(0, 0), 7);
        let b = Value::Approx(AValue::cell(0, 1), 2);
        let mut st = FFState::new();
        st.outs.push(FFPort { pos: c(1, 2), dir: Dir::E, val: a });
        st.outs.push(FFPort { pos: c(0, 7), dir: Dir::S, val: Value::Top });
        let (st, moved) = ff_add_crossover(&st, &cross(), O, c(2, 2)).unwrap();
        assert_eq!(moved[0], FFPort { pos: c(3, 2), dir: Dir::E, val: Value::Approx(AValue::cell(0, 0), 12) });
        assert_eq!(st.crosses.len(), 1);
        assert_eq!(ff_finish_crossover(&st).unwrap_err(), FFError::NoPendingCross);
        let mut st2 = st.clone();
        st2.outs.push(FFPort { pos: c(2, 3), dir: Dir::N, val: b });
        let (st3, moved) = ff_finish_crossover(&st2).unwrap();
        assert_eq!(moved[0], FFPort { pos: c(2, 1), dir: Dir::N, val: Value::Approx(AValue::cell(0, 1), 7) });
        assert!(st3.crosses.is_empty());
        assert!(st3.outs.iter().any(|o| o.pos == c(0, 7)));
        assert!(ff_add_crossover(&FFState::new(), &cross(), O, c(2, 2)).is_err());
    }

    #[test]
    fn teleport_shifts_position_and_value() {
        let mut st = FFState::new();
        st.outs.push(FFPort { pos: c(43, 10), dir: Dir::E, val: Value::Approx(AValue::cell(1, 0), 5) });
        let (t, _) = ff_teleport(&st, 0, c(-1, 0)).unwrap();
        assert_eq!(t.outs[0], FFPort { pos: c(1, 10), dir: Dir::E, val: Value::Approx(AValue::cell(0, 0), 5) });
        assert_eq!(ff_teleport(&st, 0, c(0, 0)).unwrap().0, st);
        assert_eq!(ff_teleport(&t, 0, c(1, 0)).unwrap().0, st);
        assert_eq!(ff_teleport(&st, 3, c(0, 0)).unwrap_err(), FFError::BadIndex(3));
    }

    #[test]
    fn finalize_reports_problems() {
        let mut st = FFState::new();
        let p = |x, y, v| FFPort { pos: c(x, y), dir: Dir::E, val: v };
        st.ins = vec![p(1, 0, Value::this(-15)), p(1, 4, Value::ck(0))];
        st.outs = vec![p(1, 0, Value::this(-15)), p(1, 4, Value::ck(586))];
        assert!(ff_finalize(&st).ok);
        st.outs[1].val = Value::ck(3);
        let r = ff_finalize(&st);
        assert!(!r.ok && r.lines.iter().any(|l| l.contains("ck@3") && l.contains("ck@0")), "{r:?}");
        st.outs.push(p(5, 0, Value::Top));
        assert!(ff_finalize(&st).lines.iter().any(|l| l.starts_with("unmatched out (5,0)")));
    }

    #[test]
    fn run_conditions() {
        let mut st = FFState::new();
        st.area.extend([c(0, 0), c(40, 0)]);
        st.ins.push(FFPort { pos: c(-1, 0), dir: Dir::E, val: Value::Approx(AValue::cell(0, 0), 5) });
        st.outs.push(FFPort { pos: c(41, 0), dir: Dir::E, val: Value::Approx(AValue::cell(1, 0), 3) });
        assert_eq!(ff_check_run_conditions(&st), Ok(()));
        st.ins.push(FFPort { pos: c(5, 0), dir: Dir::E, val: Value::ck(0) });
        assert!(matches!(ff_check_run_conditions(&st), Err(RunConditionError::InputTarget(_))));
        st.ins.pop();
        st.outs.push(FFPort { pos: c(-1, 0), dir: Dir::E, val: Value::ck(0) });
        assert!(matches!(ff_check_run_conditions(&st), Err(RunConditionError::Duplicate { side: "out", .. })));
        st.outs.pop();
        st.outs[0].val = Value::Approx(AValue::cell(0, 0), 3);
        assert!(matches!(ff_check_run_conditions(&st), Err(RunConditionError::InputUnmatched(_))));
        st.outs.clear();
        st.outs.push(FFPort { pos: c(41, 2), dir: Dir::E, val: Value::Top });
        assert!(matches!(ff_check_run_conditions(&st), Err(RunConditionError::OutputSource(_))));
    }
}
