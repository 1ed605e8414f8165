//! Gate libraries on disk: `<name>.spec` files with optional `<name>.rle`
//! patterns, in four orientations.
//!
//! Spec file grammar, one item per line (`#` starts a comment):
//!
//! ```text
//! letter: W                 optional diagram letter
//! kind: gate                gate | crossover | kernel (default gate)
//! trusted: true             skip symbolic verification (no pattern needed)
//! area: (0,0) (2,0)         tile anchors
//! in: (-1,0) E a            port position, direction, signal
//! out: (1,0) E a@5
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::protocol::{verify_gate, GateCertificate, VerifyError, VerifyOptions};
use super::{CircuitSpec, Dir, PortSpec, SignalExpr, SCALE};
use crate::life::{rle, Cell, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    Logic,
    Crossover,
    Kernel,
}

impl GateKind {
    fn parse(s: &str) -> Option<GateKind> {
        match s {
            "gate" => Some(GateKind::Logic),
            "crossover" => Some(GateKind::Crossover),
            "kernel" => Some(GateKind::Kernel),
            _ => None,
        }
    }
}

/// Number of counter-clockwise quarter turns, written `>`, `^`, `<`, `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Orientation(pub u8);

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation(0), Orientation(1), Orientation(2), Orientation(3)];

    pub fn from_char(c: char) -> Option<Orientation> {
        match c {
            '>' => Some(Orientation(0)),
            '^' => Some(Orientation(1)),
            '<' => Some(Orientation(2)),
            'v' => Some(Orientation(3)),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        ['>', '^', '<', 'v'][self.0 as usize % 4]
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

#[derive(Debug, Error)]
pub enum LibraryError {
    #[error("{file}:{line}: {message}")]
    Syntax { file: String, line: usize, message: String },
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Rle(PathBuf, rle::RleError),
    #[error("gate {name} orientation {orientation}: {error}")]
    Verify { name: String, orientation: Orientation, error: VerifyError },
    #[error("gate {0} has no pattern and is not marked trusted")]
    MissingPattern(String),
    #[error("letter {0} is used by two gates")]
    DuplicateLetter(char),
}

/// A spec file's contents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecFile {
    pub spec: CircuitSpec,
    pub letter: Option<char>,
    pub kind: GateKind,
    pub trusted: bool,
}

fn parse_cell(s: &str) -> Option<Cell> {
    let s = s.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (x, y) = s.split_once(',')?;
    Some(Cell::new(x.trim().parse().ok()?, y.trim().parse().ok()?))
}

fn parse_port(s: &str) -> Result<PortSpec, String> {
    let close = s.find(')').ok_or("expected a position")?;
    let pos = parse_cell(&s[..=close]).ok_or("bad position")?;
    let rest = s[close + 1..].trim_start();
    let mut chars = rest.chars();
    let dir = chars.next().and_then(Dir::from_letter).ok_or("expected a direction N, E, S or W")?;
    let sig: SignalExpr = chars.as_str().trim().parse().map_err(|e: super::SignalParseError| e.to_string())?;
    Ok(PortSpec { pos, dir, sig })
}

pub fn parse_spec_file(file: &str, text: &str) -> Result<SpecFile, LibraryError> {
    let mut out = SpecFile { spec: CircuitSpec::empty(), letter: None, kind: GateKind::Logic, trusted: false };
    for (i, raw) in text.lines().enumerate() {
        let err = |message: String| LibraryError::Syntax { file: file.to_string(), line: i + 1, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line.split_once(':').ok_or_else(|| err("expected `key: value`".into()))?;
        let val = val.trim();
        match key.trim() {
            "letter" => {
                let mut cs = val.chars();
                match (cs.next(), cs.next()) {
                    (Some(c), None) => out.letter = Some(c),
                    _ => return Err(err("letter must be one character".into())),
                }
            }
            "kind" => out.kind = GateKind::parse(val).ok_or_else(|| err(format!("unknown kind {val}")))?,
            "trusted" => out.trusted = val == "true",
            "area" => {
                for tok in val.split(')').map(str::trim).filter(|t| !t.is_empty()) {
                    let c = parse_cell(&format!("{tok})")).ok_or_else(|| err(format!("bad anchor {tok})")))?;
                    out.spec.area.insert(c);
                }
            }
            "in" => {
                out.spec.ins.insert(parse_port(val).map_err(err)?);
            }
            "out" => {
                out.spec.outs.insert(parse_port(val).map_err(err)?);
            }
            other => return Err(err(format!("unknown key {other}"))),
        }
    }
    out.spec.check().map_err(|e| LibraryError::Syntax { file: file.to_string(), line: 0, message: e.to_string() })?;
    Ok(out)
}

/// Largest anchor coordinate over 2: 0 for 1x1 gates, 1 for 2x2.
pub fn rotation_center(spec: &CircuitSpec) -> i64 {
    spec.area.iter().map(|a| a.x.max(a.y)).max().unwrap_or(0) / 2
}

fn rot_half(p: Cell, c: i64) -> Cell {
    Cell::new(p.y, 2 * c - p.x)
}

/// One counter-clockwise quarter turn of a gate about its own footprint.
pub fn rotate_spec(spec: &CircuitSpec, c: i64) -> CircuitSpec {
    let port = |p: &PortSpec| PortSpec { pos: rot_half(p.pos, c), dir: p.dir.ccw(), sig: p.sig.clone() };
    CircuitSpec {
        area: spec.area.iter().map(|&a| rot_half(a, c)).collect(),
        ins: spec.ins.iter().map(port).collect(),
        outs: spec.outs.iter().map(port).collect(),
        init: rotate_pattern(&spec.init, c),
    }
}

pub fn rotate_pattern(s: &WorldState, c: i64) -> WorldState {
    s.iter().map(|p| Cell::new(p.y, SCALE.cells_per_tile * c - 1 - p.x)).collect()
}

#[derive(Clone, Debug)]
pub enum Evidence {
    Verified(Box<GateCertificate>),
    Trusted,
}

#[derive(Clone, Debug)]
pub struct OrientedGate {
    pub orientation: Orientation,
    /// Spec with `init` set to the rotated pattern.
    pub spec: CircuitSpec,
    pub evidence: Evidence,
    /// Alternative pattern with the gate's internal state flipped, used for
    /// the second latch variant of a mega-cell.
    pub alt: Option<WorldState>,
}

impl OrientedGate {
    pub fn is_verified(&self) -> bool {
        matches!(&self.evidence, Evidence::Verified(c) if c.verified)
    }
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub name: String,
    pub letter: Option<char>,
    pub kind: GateKind,
    /// False for trusted gates loaded without a pattern file.
    pub has_pattern: bool,
    pub oriented: Vec<OrientedGate>,
}

impl Gate {
    pub fn from_spec_file(name: &str, f: &SpecFile, pattern: Option<WorldState>, verify: bool) -> Result<Gate, LibraryError> {
        let has_pattern = pattern.is_some();
        let pattern = match (pattern, f.trusted) {
            (Some(p), _) => p,
            (None, true) => WorldState::new(),
            (None, false) => return Err(LibraryError::MissingPattern(name.to_string())),
        };
        let c = rotation_center(&f.spec);
        let mut spec = CircuitSpec { init: pattern, ..f.spec.clone() };
        let mut oriented = Vec::new();
        for o in Orientation::ALL {
            let evidence = if f.trusted || !verify {
                Evidence::Trusted
            } else {
                let cert = verify_gate(&spec.init, &spec, VerifyOptions::default())
                    .map_err(|error| LibraryError::Verify { name: name.to_string(), orientation: o, error })?;
                Evidence::Verified(Box::new(cert))
            };
            oriented.push(OrientedGate { orientation: o, spec: spec.clone(), evidence, alt: None });
            spec = rotate_spec(&spec, c);
        }
        Ok(Gate { name: name.to_string(), letter: f.letter, kind: f.kind, has_pattern, oriented })
    }

    /// Attaches the alternative pattern, given in the canonical orientation.
    pub fn with_alt(mut self, alt: WorldState) -> Gate {
        let c = rotation_center(&self.oriented[0].spec);
        let mut p = alt;
        for og in &mut self.oriented {
            og.alt = Some(p.clone());
            p = rotate_pattern(&p, c);
        }
        self
    }

    pub fn get(&self, o: Orientation) -> &OrientedGate {
        &self.oriented[o.0 as usize % 4]
    }

    /// Delay of the canonical orientation's slowest output.
    pub fn delay(&self) -> u32 {
        self.oriented[0].spec.max_output_delay()
    }
}

fn read_rle(path: &Path) -> Result<Option<WorldState>, LibraryError> {
    if !path.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(path).map_err(|e| LibraryError::Io(path.to_path_buf(), e))?;
    Ok(Some(rle::decode(&bytes).map_err(|e| LibraryError::Rle(path.to_path_buf(), e))?.state))
}

#[derive(Clone, Debug, Default)]
pub struct Library {
    pub gates: BTreeMap<String, Gate>,
}

impl Library {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, g: Gate) -> Result<(), LibraryError> {
        if let Some(l) = g.letter {
            if self.gates.values().any(|h| h.letter == Some(l) && h.name != g.name) {
                return Err(LibraryError::DuplicateLetter(l));
            }
        }
        self.gates.insert(g.name.clone(), g);
        Ok(())
    }

    /// Loads every `*.spec` in `dir`, verifying untrusted gates in all four
    /// orientations when `verify` is set.
    pub fn load_dir(&mut self, dir: &Path, verify: bool) -> Result<(), LibraryError> {
        let rd = std::fs::read_dir(dir).map_err(|e| LibraryError::Io(dir.to_path_buf(), e))?;
        let mut files: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
        files.sort();
        for path in files.into_iter().filter(|p| p.extension().is_some_and(|e| e == "spec")) {
            let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            let text = std::fs::read_to_string(&path).map_err(|e| LibraryError::Io(path.clone(), e))?;
            let f = parse_spec_file(&path.display().to_string(), &text)?;
            let pattern = read_rle(&path.with_extension("rle"))?;
            let mut g = Gate::from_spec_file(&name, &f, pattern, verify)?;
            if let Some(alt) = read_rle(&path.with_extension("on.rle"))? {
                g = g.with_alt(alt);
            }
            self.insert(g)?;
        }
        Ok(())
    }

    /// Loads several directories into one library.
    pub fn load_dirs<P: AsRef<Path>>(dirs: &[P], verify: bool) -> Result<Library, LibraryError> {
        let mut l = Library::new();
        for d in dirs {
            l.load_dir(d.as_ref(), verify)?;
        }
        Ok(l)
    }

    pub fn by_letter(&self, c: char) -> Option<&Gate> {
        self.gates.values().find(|g| g.letter == Some(c))
    }

    pub fn get(&self, name: &str) -> Option<&Gate> {
        self.gates.get(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::life::patterns;

    const WIRE: &str = "letter: W\narea: (0,0)\nin: (-1,0) E a\nout: (1,0) E a@5\n";

    #[test]
    fn parse_wire_file() {
        let f = parse_spec_file("wire.spec", WIRE).unwrap();
        assert_eq!(f.letter, Some('W'));
        assert_eq!(f.kind, GateKind::Logic);
        assert!(!f.trusted);
        assert_eq!(f.spec.to_text(), "area: (0,0)\nin: (-1,0) E a\nout: (1,0) E a@5\n");
        assert_eq!(parse_spec_file("x", &f.spec.to_text()).unwrap().spec, f.spec);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = parse_spec_file("bad.spec", "area: (0,0)\nin: (-1,0) Q a\n").unwrap_err();
        assert!(matches!(e, LibraryError::Syntax { line: 2, .. }), "{e}");
        let e = parse_spec_file("bad.spec", "area: (0,0)\nout: (3,0) E a\n").unwrap_err();
        assert!(e.to_string().contains("does not leave"), "{e}");
    }

    #[test]
    fn rotation_moves_ports_and_cells() {
        let f = parse_spec_file("w", WIRE).unwrap();
        let r = rotate_spec(&f.spec, 0);
        let i = r.ins.iter().next().unwrap();
        assert_eq!((i.pos, i.dir), (Cell::new(0, 1), Dir::N));
        let mut s = f.spec.clone();
        for _ in 0..4 {
            s = rotate_spec(&s, 0);
        }
        assert_eq!(s, f.spec);
        // 2x2 footprints map onto themselves
        let big = CircuitSpec::new([(0, 0), (2, 0), (0, 2), (2, 2)], [], [], WorldState::new());
        assert_eq!(rotate_spec(&big, 1).area, big.area);
        let g = patterns::glider();
        let mut p = g.clone();
        for _ in 0..4 {
            p = rotate_pattern(&p, 1);
        }
        assert_eq!(p, g);
        assert_eq!(rotate_pattern(&WorldState::from_coords(&[(-75, -75)]), 0), WorldState::from_coords(&[(-75, 74)]));
    }

    #[test]
    fn wire_verifies_in_every_orientation() {
        let f = parse_spec_file("w", WIRE).unwrap();
        let g = Gate::from_spec_file("wire", &f, Some(WorldState::new()), true).unwrap();
        assert!(g.oriented.iter().all(OrientedGate::is_verified));
        assert_eq!(g.get(Orientation(3)).spec.outs.iter().next().unwrap().dir, Dir::S);
        assert!(Gate::from_spec_file("wire", &f, None, true).is_err());
    }

    #[test]
    fn orientation_chars() {
        for o in Orientation::ALL {
            assert_eq!(Orientation::from_char(o.to_char()), Some(o));
        }
        assert_eq!(Orientation::from_char('?'), None);
    }
}
