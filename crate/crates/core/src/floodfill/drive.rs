//! Traversal of a diagram by repeated floodfill steps.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

use super::diagram::{Diagram, Placement};
use super::{
    ff_add_crossover, ff_add_gate, ff_add_ins, ff_check_run_conditions, ff_finalize, ff_finish_crossover_at, ff_teleport,
    in_domain, FFError, FFPort, FFState, FinalizeReport, RunConditionError, DOMAIN,
};
use crate::circuit::library::{Gate, GateKind, Library};
use crate::circuit::Dir;
use crate::life::Cell;
use crate::values::Value;

/// Initial values for the inputs of the gate placed at `anchor`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Seed {
    pub anchor: Cell,
    pub vals: Vec<Value>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("seed line {line}: {message}")]
pub struct SeedParseError {
    pub line: usize,
    pub message: String,
}

/// One seed per line: `(x,y)` followed by space-separated values, e.g.
/// `(10,20) ck@0`. Lines starting with `//` are comments.
pub fn parse_seeds(text: &str) -> Result<Vec<Seed>, SeedParseError> {
    let mut seeds = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let err = |m: String| SeedParseError { line: n + 1, message: m };
        let t = line.trim();
        if t.is_empty() || t.starts_with("//") {
            continue;
        }
        let mut toks = t.split_whitespace();
        let pos = toks.next().unwrap_or_default();
        let (x, y) = pos
            .strip_prefix('(')
            .and_then(|p| p.strip_suffix(')'))
            .and_then(|p| p.split_once(','))
            .ok_or_else(|| err(format!("bad anchor {pos}")))?;
        let anchor = Cell::new(x.parse().map_err(|_| err(format!("bad x {x}")))?, y.parse().map_err(|_| err(format!("bad y {y}")))?);
        let vals = toks.map(|v| v.parse::<Value>().map_err(|e| err(e.to_string()))).collect::<Result<_, _>>()?;
        seeds.push(Seed { anchor, vals });
    }
    Ok(seeds)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DriveOptions {
    /// Visit new frontier ports in reverse lexicographic order.
    pub reverse: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DriveReport {
    pub state: FFState,
    pub transcript: Vec<String>,
    /// Outputs facing a gate that never received all of its inputs.
    pub stuck: Vec<FFPort>,
    pub finalize: FinalizeReport,
    pub conditions: Result<(), RunConditionError>,
}

impl DriveReport {
    pub fn transcript_text(&self) -> String {
        let mut s = self.transcript.join("\n");
        s.push('\n');
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DriveError {
    #[error("no gate with letter {0} in the library")]
    UnknownLetter(char),
    #[error("no gate at seed anchor {0}")]
    NoSeedGate(Cell),
    #[error("{rule} at {at}: {error}")]
    Step { rule: &'static str, at: Cell, error: FFError },
}

fn ports(ps: &[FFPort]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join("; ")
}

struct Driver<'a> {
    d: &'a Diagram,
    lib: &'a Library,
    opts: DriveOptions,
    st: FFState,
    placed: BTreeSet<Cell>,
    queue: VecDeque<(Cell, Dir)>,
    parked: Vec<(Cell, Dir)>,
    transcript: Vec<String>,
}

impl Driver<'_> {
    fn gate(&self, pl: &Placement) -> Result<&Gate, DriveError> {
        self.lib.by_letter(pl.letter).ok_or(DriveError::UnknownLetter(pl.letter))
    }

    fn apply(
        &mut self,
        rule: &'static str,
        label: String,
        at: Cell,
        r: Result<(FFState, Vec<FFPort>), FFError>,
    ) -> Result<(), DriveError> {
        let step = |error| DriveError::Step { rule, at, error };
        let (st, outs) = r.map_err(step)?;
        st.check_invariants().map_err(step)?;
        self.st = st;
        self.transcript.push(format!("RULE {rule}{label} @ ({},{}) => outs: {}", at.x, at.y, ports(&outs)));
        let mut keys: Vec<(Cell, Dir)> = outs.iter().map(FFPort::key).collect();
        keys.sort();
        if self.opts.reverse {
            keys.reverse();
        }
        self.queue.extend(keys);
        Ok(())
    }

    fn label(&self, pl: &Placement) -> String {
        format!(" {}{}", pl.letter, pl.orientation)
    }

    /// Tries to advance the output at `key`; false if it has to wait.
    fn visit(&mut self, key: (Cell, Dir)) -> Result<bool, DriveError> {
        let Some(k) = self.st.out_index(key.0, key.1) else { return Ok(true) };
        let target = key.0 + key.1.vec();
        if !in_domain(target) {
            let z = Cell::new(-target.x.div_euclid(DOMAIN), -target.y.div_euclid(DOMAIN));
            let r = ff_teleport(&self.st, k, z);
            self.apply("teleport", String::new(), key.0, r)?;
            return Ok(true);
        }
        let Some(pl) = self.d.at(target) else { return Ok(false) };
        let g = self.gate(pl)?;
        let label = self.label(pl);
        if self.placed.contains(&pl.anchor) {
            let c = self.st.crosses.iter().position(|c| c.in_pos == key.0 && c.dir == key.1);
            return match c {
                Some(c) => {
                    let r = ff_finish_crossover_at(&self.st, c);
                    self.apply("finish_crossover", label, pl.anchor, r)?;
                    Ok(true)
                }
                None => Ok(false),
            };
        }
        let o = pl.orientation;
        if g.kind == GateKind::Crossover {
            let r = ff_add_crossover(&self.st, g, o, pl.anchor);
            self.placed.insert(pl.anchor);
            self.apply("add_crossover", label, pl.anchor, r)?;
            return Ok(true);
        }
        let ready = g.get(o).spec.ins.iter().all(|i| self.st.out_index(i.pos + pl.anchor, i.dir).is_some());
        if !ready {
            return Ok(false);
        }
        let r = ff_add_gate(&self.st, g, o, pl.anchor);
        self.placed.insert(pl.anchor);
        self.apply("add_gate", label, pl.anchor, r)?;
        Ok(true)
    }

    fn run(&mut self) -> Result<(), DriveError> {
        loop {
            let mut progress = false;
            while let Some(key) = self.queue.pop_front() {
                if self.visit(key)? {
                    progress = true;
                } else {
                    self.parked.push(key);
                }
            }
            if !progress || self.parked.is_empty() {
                return Ok(());
            }
            let mut parked = std::mem::take(&mut self.parked);
            parked.sort();
            if self.opts.reverse {
                parked.reverse();
            }
            self.queue.extend(parked);
        }
    }
}

/// Seeds the given gates, then places gates as their inputs become
/// available until nothing can make progress, and finally checks the
/// resulting state.
pub fn ff_drive(d: &Diagram, lib: &Library, seeds: &[Seed], opts: DriveOptions) -> Result<DriveReport, DriveError> {
    let mut dr = Driver {
        d,
        lib,
        opts,
        st: FFState::new(),
        placed: BTreeSet::new(),
        queue: VecDeque::new(),
        parked: Vec::new(),
        transcript: Vec::new(),
    };
    for s in seeds {
        let pl = d.placements.iter().find(|p| p.anchor == s.anchor).ok_or(DriveError::NoSeedGate(s.anchor))?;
        let g = dr.gate(pl)?;
        let r = ff_add_ins(&dr.st, g, pl.orientation, pl.anchor, &s.vals);
        let label = dr.label(pl);
        dr.placed.insert(pl.anchor);
        dr.apply("add_ins", label, pl.anchor, r)?;
    }
    dr.run()?;
    let st = dr.st;
    let mut transcript = dr.transcript;
    let mut stuck = Vec::new();
    for o in &st.outs {
        let waiting = dr_waiting(d, &dr.placed, o);
        if let Some(pl) = waiting {
            stuck.push(o.clone());
            transcript.push(format!("STUCK {o} waiting for {}{} at ({},{})", pl.letter, pl.orientation, pl.anchor.x, pl.anchor.y));
        }
    }
    for i in &st.ins {
        transcript.push(format!("IN {i}"));
    }
    for o in &st.outs {
        transcript.push(format!("OUT {o}"));
    }
    let finalize = ff_finalize(&st);
    transcript.push(format!("FINALIZE {}", if finalize.ok { "ok" } else { "failed" }));
    transcript.extend(finalize.lines.iter().map(|l| format!("  {l}")));
    let conditions = ff_check_run_conditions(&st);
    transcript.push(match &conditions {
        Ok(()) => "CONDITIONS ok".to_string(),
        Err(e) => format!("CONDITIONS failed: {e}"),
    });
    Ok(DriveReport { state: st, transcript, stuck, finalize, conditions })
}

fn dr_waiting<'a>(d: &'a Diagram, placed: &BTreeSet<Cell>, o: &FFPort) -> Option<&'a Placement> {
    let target = o.pos + o.dir.vec();
    d.at(target).filter(|pl| !placed.contains(&pl.anchor))
}
