//! Abstract signal values: approximate cell formulas, exact clock/latch
//! forms with integer delays, and the top element.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::life::{step, Cell, WorldState, NEIGHBOUR_OFFSETS};

pub const PERIOD: i64 = 586;
pub const PULSE: i64 = 22;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AValue {
    Cell(i64, i64),
    Not(Box<AValue>),
    And(Box<AValue>, Box<AValue>),
    Or(Box<AValue>, Box<AValue>),
    Xor(Box<AValue>, Box<AValue>),
}

impl AValue {
    pub fn cell(dx: i64, dy: i64) -> AValue {
        AValue::Cell(dx, dy)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> AValue {
        AValue::Not(Box::new(self))
    }

    pub fn and(self, o: AValue) -> AValue {
        AValue::And(Box::new(self), Box::new(o))
    }

    pub fn or(self, o: AValue) -> AValue {
        AValue::Or(Box::new(self), Box::new(o))
    }

    pub fn xor(self, o: AValue) -> AValue {
        AValue::Xor(Box::new(self), Box::new(o))
    }

    pub fn atoms(&self) -> BTreeSet<(i64, i64)> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<(i64, i64)>) {
        match self {
            AValue::Cell(x, y) => {
                out.insert((*x, *y));
            }
            AValue::Not(a) => a.collect_atoms(out),
            AValue::And(a, b) | AValue::Or(a, b) | AValue::Xor(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn eval(&self, env: &dyn Fn(i64, i64) -> bool) -> bool {
        match self {
            AValue::Cell(x, y) => env(*x, *y),
            AValue::Not(a) => !a.eval(env),
            AValue::And(a, b) => a.eval(env) && b.eval(env),
            AValue::Or(a, b) => a.eval(env) || b.eval(env),
            AValue::Xor(a, b) => a.eval(env) != b.eval(env),
        }
    }

    pub fn translate(&self, z: Cell) -> AValue {
        match self {
            AValue::Cell(x, y) => AValue::Cell(x + z.x, y + z.y),
            AValue::Not(a) => a.translate(z).not(),
            AValue::And(a, b) => a.translate(z).and(b.translate(z)),
            AValue::Or(a, b) => a.translate(z).or(b.translate(z)),
            AValue::Xor(a, b) => a.translate(z).xor(b.translate(z)),
        }
    }

    /// Replaces every `cell(d)` by `f(d)`.
    pub fn substitute(&self, f: &dyn Fn(i64, i64) -> AValue) -> AValue {
        match self {
            AValue::Cell(x, y) => f(*x, *y),
            AValue::Not(a) => a.substitute(f).not(),
            AValue::And(a, b) => a.substitute(f).and(b.substitute(f)),
            AValue::Or(a, b) => a.substitute(f).or(b.substitute(f)),
            AValue::Xor(a, b) => a.substitute(f).xor(b.substitute(f)),
        }
    }

    // Bit-sliced truth table over `atoms`; bit i of the table is the value
    // under the assignment whose j-th atom is bit j of i.
    fn table(&self, atoms: &[(i64, i64)]) -> Vec<u64> {
        let k = atoms.len();
        let words = if k <= 6 { 1 } else { 1 << (k - 6) };
        let mask = if k >= 6 { u64::MAX } else { (1u64 << (1 << k)) - 1 };
        match self {
            AValue::Cell(x, y) => {
                let j = atoms.iter().position(|a| *a == (*x, *y)).expect("atom listed");
                (0..words)
                    .map(|w| {
                        if j >= 6 {
                            if (w >> (j - 6)) & 1 == 1 {
                                u64::MAX
                            } else {
                                0
                            }
                        } else {
                            let mut v = 0u64;
                            for b in 0..64 {
                                if (b >> j) & 1 == 1 {
                                    v |= 1 << b;
                                }
                            }
                            v & mask
                        }
                    })
                    .collect()
            }
            AValue::Not(a) => a.table(atoms).into_iter().map(|v| !v & mask).collect(),
            AValue::And(a, b) => zip(a.table(atoms), b.table(atoms), |x, y| x & y),
            AValue::Or(a, b) => zip(a.table(atoms), b.table(atoms), |x, y| x | y),
            AValue::Xor(a, b) => zip(a.table(atoms), b.table(atoms), |x, y| x ^ y),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            AValue::Or(..) => 1,
            AValue::Xor(..) => 2,
            AValue::And(..) => 3,
            AValue::Not(..) => 4,
            AValue::Cell(..) => 6,
        }
    }
}

fn zip(a: Vec<u64>, b: Vec<u64>, f: impl Fn(u64, u64) -> u64) -> Vec<u64> {
    a.into_iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Atoms above which equivalence falls back to syntactic equality.
pub const MAX_EQUIV_ATOMS: usize = 16;

/// Semantic equality by truth table over the shared atoms.
pub fn aequiv(a: &AValue, b: &AValue) -> bool {
    if a == b {
        return true;
    }
    let mut atoms = a.atoms();
    atoms.extend(b.atoms());
    if atoms.len() > MAX_EQUIV_ATOMS {
        return false;
    }
    let atoms: Vec<_> = atoms.into_iter().collect();
    a.table(&atoms) == b.table(&atoms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EValue {
    Ck,
    NotCk,
    This,
    ThisAndCk,
    ThisAndNotCk,
}

impl EValue {
    fn has_this(self) -> bool {
        matches!(self, EValue::This | EValue::ThisAndCk | EValue::ThisAndNotCk)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Value {
    Approx(AValue, u64),
    Exact(EValue, i64),
    Top,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValueError {
    #[error("delay of {0} would become negative")]
    NegativeDelay(Value),
    #[error("cannot decay {value} to delay {to}")]
    BadDecay { value: Value, to: u64 },
    #[error("trace does not cover generation {0}")]
    TraceTooShort(u64),
    #[error("stream has no samples for cell {0}")]
    MissingStream(Cell),
}

impl Value {
    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(..))
    }

    pub fn this(n: i64) -> Value {
        Value::Exact(EValue::This, n)
    }

    pub fn ck(n: i64) -> Value {
        Value::Exact(EValue::Ck, n)
    }
}

pub fn v_not(v: &Value) -> Value {
    match v {
        Value::Approx(a, n) => Value::Approx(a.clone().not(), *n),
        Value::Exact(EValue::Ck, n) => Value::Exact(EValue::NotCk, *n),
        Value::Exact(EValue::NotCk, n) => Value::Exact(EValue::Ck, *n),
        _ => Value::Top,
    }
}

/// Constants in the latch-rule guards; exposed so tests can perturb them.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Guards {
    pub period: i64,
    pub pulse: i64,
    pub ck_bound: i64,
}

impl Default for Guards {
    fn default() -> Self {
        Guards { period: PERIOD, pulse: PULSE, ck_bound: -PULSE }
    }
}

pub fn v_and(v1: &Value, v2: &Value) -> Value {
    v_and_with(v1, v2, Guards::default())
}

pub fn v_and_with(v1: &Value, v2: &Value, g: Guards) -> Value {
    use EValue::*;
    match (v1, v2) {
        (Value::Approx(a, m), Value::Approx(b, n)) => Value::Approx(a.clone().and(b.clone()), *m.max(n)),
        (Value::Exact(This, m), Value::Exact(NotCk, n)) | (Value::Exact(NotCk, n), Value::Exact(This, m)) => {
            // ck is periodic, so its delay may be taken modulo the period
            let back = (m - n).rem_euclid(g.period);
            if back <= g.pulse {
                Value::Exact(ThisAndNotCk, m - back)
            } else {
                Value::Top
            }
        }
        (Value::Exact(Ck, m), Value::Approx(v, n)) | (Value::Approx(v, n), Value::Exact(Ck, m)) => {
            let m2 = g.ck_bound - (g.ck_bound - m).rem_euclid(g.period);
            if *v == next_cell_formula() && (*n as i64) <= m2 + g.period {
                Value::Exact(ThisAndCk, m2)
            } else {
                Value::Top
            }
        }
        _ => Value::Top,
    }
}

pub fn v_or(v1: &Value, v2: &Value) -> Value {
    use EValue::*;
    match (v1, v2) {
        (Value::Approx(a, m), Value::Approx(b, n)) => Value::Approx(a.clone().or(b.clone()), *m.max(n)),
        (Value::Exact(ThisAndCk, m), Value::Exact(ThisAndNotCk, n))
        | (Value::Exact(ThisAndNotCk, n), Value::Exact(ThisAndCk, m))
            if m == n =>
        {
            Value::Exact(This, *m)
        }
        _ => Value::Top,
    }
}

pub fn v_xor(v1: &Value, v2: &Value) -> Value {
    match (v1, v2) {
        (Value::Approx(a, m), Value::Approx(b, n)) => Value::Approx(a.clone().xor(b.clone()), *m.max(n)),
        _ => Value::Top,
    }
}

pub fn v_delay(v: &Value, k: i64) -> Result<Value, ValueError> {
    Ok(match v {
        Value::Approx(a, n) => {
            let d = *n as i64 + k;
            if d < 0 {
                return Err(ValueError::NegativeDelay(v.clone()));
            }
            Value::Approx(a.clone(), d as u64)
        }
        Value::Exact(e, n) => Value::Exact(*e, n + k),
        Value::Top => Value::Top,
    })
}

/// `this@m` weakened to `cell(0,0)@n`.
pub fn decay(v: &Value, n: u64) -> Result<Value, ValueError> {
    match v {
        Value::Exact(EValue::This, m) if 0 <= *m && *m <= n as i64 => Ok(Value::Approx(AValue::cell(0, 0), n)),
        _ => Err(ValueError::BadDecay { value: v.clone(), to: n }),
    }
}

pub fn translate_value(v: &Value, z: Cell) -> Value {
    match v {
        Value::Approx(a, n) => Value::Approx(a.translate(z), *n),
        _ if z == Cell::new(0, 0) => v.clone(),
        _ => Value::Top,
    }
}

/// Sufficient check that every stream denoted by `v1` is denoted by `v2`.
pub fn refines(v1: &Value, v2: &Value) -> bool {
    use EValue::*;
    match (v1, v2) {
        (_, Value::Top) => true,
        (Value::Approx(a, m), Value::Approx(b, n)) => m <= n && aequiv(a, b),
        (Value::Exact(e, m), Value::Exact(f, n)) if e == f => {
            if e.has_this() {
                m == n
            } else {
                (m - n).rem_euclid(PERIOD) == 0
            }
        }
        (Value::Exact(This, m), Value::Approx(a, n)) => *a == AValue::cell(0, 0) && 0 <= *m && *m <= *n as i64,
        _ => false,
    }
}

/// The B3/S23 rule over the nine cells around the origin.
pub fn next_cell_formula() -> AValue {
    let nb: Vec<AValue> = NEIGHBOUR_OFFSETS.iter().map(|d| AValue::cell(d.x, d.y)).collect();
    let exactly = |k: usize| -> Vec<AValue> {
        let mut terms = Vec::new();
        for mask in 0u32..256 {
            if mask.count_ones() as usize != k {
                continue;
            }
            let mut t: Option<AValue> = None;
            for (i, c) in nb.iter().enumerate() {
                let lit = if (mask >> i) & 1 == 1 { c.clone() } else { c.clone().not() };
                t = Some(match t {
                    None => lit,
                    Some(t) => t.and(lit),
                });
            }
            terms.push(t.expect("eight literals"));
        }
        terms
    };
    let disj = |ts: Vec<AValue>| ts.into_iter().reduce(|a, b| a.or(b)).expect("nonempty");
    disj(exactly(3)).or(AValue::cell(0, 0).and(disj(exactly(2))))
}

/// First 3x3 assignment (bit i of the index is the cell at offset
/// `(i % 3 - 1, i / 3 - 1)`) where `f` disagrees with `step`.
pub fn next_cell_counterexample(f: &AValue) -> Option<u32> {
    (0u32..512).find(|&bits| {
        let at = |x: i64, y: i64| (-1..=1).contains(&x) && (-1..=1).contains(&y) && (bits >> ((y + 1) * 3 + x + 1)) & 1 == 1;
        let s: WorldState =
            (0..9).filter(|i| (bits >> i) & 1 == 1).map(|i| Cell::new(i % 3 - 1, i / 3 - 1)).collect();
        f.eval(&at) != step(&s).contains(Cell::new(0, 0))
    })
}

pub fn check_next_cell_equals_step() -> Result<(), u32> {
    match next_cell_counterexample(&next_cell_formula()) {
        None => Ok(()),
        Some(c) => Err(c),
    }
}

/// Mega-scale generations `G(z, g)`.
#[derive(Clone, Debug)]
pub struct MegaTrace {
    pub gens: Vec<WorldState>,
}

impl MegaTrace {
    pub fn from_initial(s: &WorldState, generations: usize) -> MegaTrace {
        let mut gens = vec![s.clone()];
        for _ in 1..generations {
            let next = step(gens.last().expect("nonempty"));
            gens.push(next);
        }
        MegaTrace { gens }
    }

    pub fn get(&self, z: Cell, g: u64) -> Result<bool, ValueError> {
        self.gens.get(g as usize).map(|s| s.contains(z)).ok_or(ValueError::TraceTooShort(g))
    }
}

/// Per-cell boolean samples over ticks `start..start + len`.
#[derive(Clone, Debug, Default)]
pub struct SampledStream {
    pub start: u64,
    pub samples: std::collections::BTreeMap<Cell, Vec<bool>>,
}

impl SampledStream {
    pub fn window(&self) -> std::ops::Range<u64> {
        let len = self.samples.values().map(Vec::len).min().unwrap_or(0) as u64;
        self.start..self.start + len
    }

    pub fn get(&self, z: Cell, t: u64) -> Option<bool> {
        self.samples.get(&z)?.get((t - self.start) as usize).copied()
    }
}

pub fn gen_of(t: i64) -> u64 {
    t.div_euclid(PERIOD).max(0) as u64
}

/// Value of an exact form at tick `u` of its own schedule.
pub fn exact_at(e: EValue, u: i64, z: Cell, g: &MegaTrace) -> Result<bool, ValueError> {
    let ck = u.rem_euclid(PERIOD) < PULSE;
    let this = || g.get(z, gen_of(u));
    Ok(match e {
        EValue::Ck => ck,
        EValue::NotCk => !ck,
        EValue::This => this()?,
        EValue::ThisAndCk => ck && this()?,
        EValue::ThisAndNotCk => !ck && this()?,
    })
}

/// Value an approximate formula settles to at tick `t`.
pub fn approx_at(a: &AValue, t: u64, z: Cell, g: &MegaTrace) -> Result<bool, ValueError> {
    let gen = gen_of(t as i64);
    g.get(z, gen)?;
    let err = std::cell::Cell::new(None);
    let r = a.eval(&|dx, dy| {
        g.get(z + Cell::new(dx, dy), gen).unwrap_or_else(|e| {
            err.set(Some(e));
            false
        })
    });
    err.into_inner().map_or(Ok(r), Err)
}

/// Whether `s` lies in the denotation of `v` on its window.
pub fn denotes(s: &SampledStream, v: &Value, g: &MegaTrace) -> Result<bool, ValueError> {
    for &z in s.samples.keys() {
        for t in s.window() {
            let got = s.get(z, t).ok_or(ValueError::MissingStream(z))?;
            let want = match v {
                Value::Top => continue,
                Value::Approx(_, n) if t < *n => continue,
                Value::Approx(a, _) => approx_at(a, t, z, g)?,
                Value::Exact(e, n) => exact_at(*e, t as i64 - n, z, g)?,
            };
            if got != want {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

impl fmt::Display for AValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f: &mut fmt::Formatter<'_>, e: &AValue, min: u8| {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            AValue::Cell(x, y) => write!(f, "cell({x},{y})"),
            AValue::Not(a) => {
                write!(f, "!")?;
                sub(f, a, 4)
            }
            AValue::And(a, b) | AValue::Or(a, b) | AValue::Xor(a, b) => {
                let (p, op) = match self {
                    AValue::And(..) => (3, "&"),
                    AValue::Or(..) => (1, "|"),
                    _ => (2, "^"),
                };
                sub(f, a, p)?;
                write!(f, " {op} ")?;
                sub(f, b, p + 1)
            }
        }
    }
}

impl fmt::Display for EValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EValue::Ck => "ck",
            EValue::NotCk => "!ck",
            EValue::This => "this",
            EValue::ThisAndCk => "this & ck",
            EValue::ThisAndNotCk => "this & !ck",
        })
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Top => write!(f, "top"),
            Value::Approx(a @ AValue::Cell(..), n) => write!(f, "{a}@{n}"),
            Value::Approx(a, n) => write!(f, "({a})@{n}"),
            Value::Exact(e @ (EValue::Ck | EValue::This), n) => write!(f, "{e}@{n}"),
            Value::Exact(e, n) => write!(f, "({e})@{n}"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("value syntax error at column {column}: {message}")]
pub struct ValueParseError {
    pub column: usize,
    pub message: String,
}

// Parse tree before classification into approximate or exact forms.
#[derive(Clone, Debug, PartialEq)]
enum Raw {
    Cell(i64, i64),
    This,
    Ck,
    Top,
    Not(Box<Raw>),
    Bin(char, Box<Raw>, Box<Raw>),
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, m: &str) -> Result<T, ValueParseError> {
        Err(ValueParseError { column: self.pos + 1, message: m.to_string() })
    }

    fn ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.src.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn int(&mut self) -> Result<i64, ValueParseError> {
        self.ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        match std::str::from_utf8(&self.src[start..self.pos]).ok().and_then(|s| s.parse().ok()) {
            Some(n) => Ok(n),
            None => {
                self.pos = start;
                self.err("expected an integer")
            }
        }
    }

    fn binary(&mut self, level: usize) -> Result<Raw, ValueParseError> {
        const OPS: [u8; 3] = *b"|^&";
        if level == OPS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        while self.eat(OPS[level]) {
            let rhs = self.binary(level + 1)?;
            lhs = Raw::Bin(OPS[level] as char, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Raw, ValueParseError> {
        if self.eat(b'!') {
            return Ok(Raw::Not(Box::new(self.unary()?)));
        }
        if self.eat(b'(') {
            let e = self.binary(0)?;
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(e);
        }
        self.ws();
        let rest = &self.src[self.pos..];
        for (kw, raw) in [("cell", None), ("this", Some(Raw::This)), ("ck", Some(Raw::Ck)), ("top", Some(Raw::Top))] {
            if rest.starts_with(kw.as_bytes()) {
                self.pos += kw.len();
                if let Some(r) = raw {
                    return Ok(r);
                }
                if !self.eat(b'(') {
                    return self.err("expected '('");
                }
                let x = self.int()?;
                if !self.eat(b',') {
                    return self.err("expected ','");
                }
                let y = self.int()?;
                if !self.eat(b')') {
                    return self.err("expected ')'");
                }
                return Ok(Raw::Cell(x, y));
            }
        }
        self.err("expected a value")
    }
}

fn to_avalue(r: &Raw) -> Option<AValue> {
    Some(match r {
        Raw::Cell(x, y) => AValue::Cell(*x, *y),
        Raw::Not(a) => to_avalue(a)?.not(),
        Raw::Bin(op, a, b) => {
            let (a, b) = (to_avalue(a)?, to_avalue(b)?);
            match op {
                '&' => a.and(b),
                '|' => a.or(b),
                _ => a.xor(b),
            }
        }
        _ => return None,
    })
}

fn to_evalue(r: &Raw) -> Option<EValue> {
    let not_ck = Raw::Not(Box::new(Raw::Ck));
    Some(match r {
        Raw::Ck => EValue::Ck,
        Raw::This => EValue::This,
        r if *r == not_ck => EValue::NotCk,
        Raw::Bin('&', a, b) if **a == Raw::This && **b == Raw::Ck => EValue::ThisAndCk,
        Raw::Bin('&', a, b) if **a == Raw::This && **b == not_ck => EValue::ThisAndNotCk,
        _ => return None,
    })
}

impl FromStr for Value {
    type Err = ValueParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { src: s.as_bytes(), pos: 0 };
        let body = p.binary(0)?;
        let delay = if p.eat(b'@') { Some(p.int()?) } else { None };
        p.ws();
        if p.pos != p.src.len() {
            return p.err("unexpected trailing input");
        }
        if body == Raw::Top {
            return match delay {
                None => Ok(Value::Top),
                Some(_) => p.err("top takes no delay"),
            };
        }
        let n = delay.unwrap_or(0);
        if let Some(a) = to_avalue(&body) {
            if n < 0 {
                return p.err("approximate delays are natural numbers");
            }
            return Ok(Value::Approx(a, n as u64));
        }
        match to_evalue(&body) {
            Some(e) => Ok(Value::Exact(e, n)),
            None => p.err("not a cell formula or an exact clock/latch form"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(s: &str) -> Value {
        s.parse().unwrap()
    }

    fn nc(n: u64) -> Value {
        Value::Approx(next_cell_formula(), n)
    }

    #[test]
    fn not_examples() {
        assert_eq!(v_not(&v("this@0")), Value::Top);
        assert_eq!(v_not(&v("cell(0,0)@3")), v("(!cell(0,0))@3"));
        assert_eq!(v_not(&v("ck@5")), v("(!ck)@5"));
        assert_eq!(v_not(&v_not(&v("ck@5"))), v("ck@5"));
        assert_eq!(v_not(&v("(this & ck)@1")), Value::Top);
    }

    #[test]
    fn and_examples() {
        assert_eq!(v_and(&v("this@-15"), &v("(!ck)@-20")), v("(this & !ck)@-20"));
        assert_eq!(v_and(&v("ck@-22"), &nc(500)), v("(this & ck)@-22"));
        assert_eq!(v_and(&nc(500), &v("ck@-22")), v("(this & ck)@-22"));
        assert_eq!(v_and(&v("cell(1,0)@5"), &v("cell(0,1)@7")), v("(cell(1,0) & cell(0,1))@7"));
        assert_eq!(v_and(&v("this@0"), &v("cell(0,0)@0")), Value::Top);
        assert_eq!(v_and(&v("ck@-22"), &v("cell(0,0)@0")), Value::Top);
    }

    #[test]
    fn r1_guard_edges() {
        let not_ck = |n| Value::Exact(EValue::NotCk, n);
        assert_eq!(v_and(&v("this@-15"), &not_ck(-15)), v("(this & !ck)@-15"));
        assert_eq!(v_and(&v("this@-15"), &not_ck(-37)), v("(this & !ck)@-37"));
        assert_eq!(v_and(&v("this@-15"), &not_ck(-38)), Value::Top);
        assert_eq!(v_and(&v("this@-15"), &not_ck(-14)), Value::Top);
        // the clock delay counts modulo the period
        assert_eq!(v_and(&v("this@-15"), &not_ck(-20 + 586)), v("(this & !ck)@-20"));
    }

    #[test]
    fn r2_guard_edges() {
        assert_eq!(v_and(&v("ck@-22"), &nc(564)), v("(this & ck)@-22"));
        assert_eq!(v_and(&v("ck@-22"), &nc(565)), Value::Top);
        assert_eq!(v_and(&v("ck@-21"), &nc(0)), Value::Top);
        assert_eq!(v_and(&v("ck@-23"), &nc(563)), v("(this & ck)@-23"));
        assert_eq!(v_and(&v("ck@-23"), &nc(564)), Value::Top);
        assert_eq!(v_and(&v("ck@564"), &nc(500)), v("(this & ck)@-22"));
        let almost = Value::Approx(next_cell_formula().or(AValue::cell(5, 5).and(AValue::cell(5, 5).not())), 0);
        assert_eq!(v_and(&v("ck@-22"), &almost), Value::Top);
    }

    #[test]
    fn or_examples() {
        assert_eq!(v_or(&v("(this & ck)@-15"), &v("(this & !ck)@-15")), v("this@-15"));
        assert_eq!(v_or(&v("(this & !ck)@-15"), &v("(this & ck)@-15")), v("this@-15"));
        assert_eq!(v_or(&v("(this & ck)@-15"), &v("(this & !ck)@-16")), Value::Top);
        assert_eq!(v_or(&v("cell(0,0)@2"), &v("cell(1,0)@9")), v("(cell(0,0) | cell(1,0))@9"));
    }

    #[test]
    fn xor_and_delay() {
        assert_eq!(v_delay(&v("cell(0,0)@15"), 3).unwrap(), v("cell(0,0)@18"));
        assert_eq!(v_delay(&v("this@-20"), 5).unwrap(), v("this@-15"));
        assert!(v_delay(&v("cell(0,0)@2"), -3).is_err());
        assert_eq!(v_delay(&Value::Top, 4).unwrap(), Value::Top);
        let a = v("cell(0,0)@15");
        let b = v("cell(1,0)@18");
        assert_eq!(v_xor(&a, &b), v("(cell(0,0) ^ cell(1,0))@18"));
        assert_eq!(v_xor(&a, &v("ck@0")), Value::Top);
    }

    #[test]
    fn decay_examples() {
        assert_eq!(decay(&v("this@0"), 7).unwrap(), v("cell(0,0)@7"));
        assert!(decay(&v("this@-15"), 7).is_err());
        assert!(decay(&v("ck@0"), 7).is_err());
        assert!(decay(&v("this@8"), 7).is_err());
    }

    #[test]
    fn translate_examples() {
        let a = v("(cell(0,0) & !cell(1,1))@4");
        assert_eq!(translate_value(&a, Cell::new(0, -1)), v("(cell(0,-1) & !cell(1,0))@4"));
        assert_eq!(translate_value(&a, Cell::new(0, 0)), a);
        assert_eq!(translate_value(&translate_value(&a, Cell::new(3, 2)), Cell::new(-3, -2)), a);
        assert_eq!(translate_value(&v("this@0"), Cell::new(1, 0)), Value::Top);
        let moved = translate_value(&nc(3), Cell::new(2, 1));
        let Value::Approx(m, _) = moved else { panic!() };
        let want: BTreeSet<_> = (-1..=1).flat_map(|y| (-1..=1).map(move |x| (x + 2, y + 1))).collect();
        assert_eq!(m.atoms(), want);
    }

    #[test]
    fn refinement_examples() {
        assert!(refines(&v("cell(0,0)@15"), &v("cell(0,0)@18")));
        assert!(!refines(&v("cell(0,0)@18"), &v("cell(0,0)@15")));
        for x in ["this@-3", "ck@0", "top", "cell(1,1)@0"] {
            assert!(refines(&v(x), &Value::Top));
        }
        assert!(refines(&v("this@2"), &v("cell(0,0)@5")));
        assert!(!refines(&v("this@-1"), &v("cell(0,0)@5")));
        assert!(refines(&v("ck@0"), &v("ck@586")));
        assert!(!refines(&v("this@0"), &v("this@586")));
        assert!(refines(&v("(!!cell(0,0))@1"), &v("cell(0,0)@1")));
        assert!(!refines(&Value::Top, &v("cell(0,0)@1")));
    }

    #[test]
    fn next_cell_matches_step() {
        assert_eq!(check_next_cell_equals_step(), Ok(()));
        let f = next_cell_formula();
        assert!(!f.eval(&|_, _| false));
        assert!(f.eval(&|x, y| (x, y) == (-1, -1) || (x, y) == (0, -1) || (x, y) == (1, -1)));
    }

    #[test]
    fn broken_next_cells_are_caught() {
        let nb: Vec<AValue> = NEIGHBOUR_OFFSETS.iter().map(|d| AValue::cell(d.x, d.y)).collect();
        let three = |mask: u32| {
            nb.iter()
                .enumerate()
                .map(|(i, c)| if (mask >> i) & 1 == 1 { c.clone() } else { c.clone().not() })
                .reduce(|a, b| a.and(b))
                .unwrap()
        };
        let births = (0u32..256).filter(|m| m.count_ones() == 3).map(three).reduce(|a, b| a.or(b)).unwrap();
        let bits = next_cell_counterexample(&births).unwrap();
        assert_eq!(bits & 0b10000, 0b10000, "survival case has the center alive");
        assert_eq!((bits & !0b10000).count_ones(), 2);
        let four = (0u32..256).filter(|m| m.count_ones() == 4).map(three).reduce(|a, b| a.or(b)).unwrap();
        assert!(next_cell_counterexample(&next_cell_formula().or(four)).is_some());
    }

    #[test]
    fn text_round_trip() {
        for s in ["top", "this@-15", "ck@0", "(!ck)@3", "(this & ck)@-22", "(this & !ck)@-20", "cell(0,0)@7", "(cell(1,0) & !cell(0,-1) | cell(2,2) ^ cell(0,0))@4"] {
            assert_eq!(v(s).to_string(), s);
        }
        assert_eq!(v("this"), v("this@0"));
        assert!("cell(0,0)@-1".parse::<Value>().is_err());
        assert!("this & cell(0,0)".parse::<Value>().is_err());
        assert!("ck | this".parse::<Value>().is_err());
        let e = "cell(0,".parse::<Value>().unwrap_err();
        assert_eq!(e.column, 8);
    }

    #[test]
    fn clock_stream_denotes_ck() {
        let g = MegaTrace::from_initial(&WorldState::new(), 3);
        let z = Cell::new(0, 0);
        let s = SampledStream { start: 0, samples: [(z, (0..1200).map(|t| t % 586 < 22).collect())].into() };
        assert!(denotes(&s, &v("ck@0"), &g).unwrap());
        assert!(!denotes(&s, &v("ck@1"), &g).unwrap());
        assert!(denotes(&s, &Value::Top, &g).unwrap());
    }

    #[test]
    fn latch_wire_switches_early() {
        // a blinker: the origin cell alternates between generations
        let g = MegaTrace::from_initial(&WorldState::from_coords(&[(-1, 0), (0, 0), (1, 0)]), 4);
        let z = Cell::new(0, -1);
        let at = |t: i64| g.gens[gen_of(t + 15) as usize].contains(z);
        let s = SampledStream { start: 0, samples: [(z, (0..1200).map(at).collect())].into() };
        assert!(!s.samples[&z][570] && s.samples[&z][571]);
        assert!(denotes(&s, &v("this@-15"), &g).unwrap());
        assert!(!denotes(&s, &v("this@-14"), &g).unwrap());
        assert!(!denotes(&s, &v("this@-16"), &g).unwrap());
        let short = MegaTrace { gens: g.gens[..1].to_vec() };
        assert!(denotes(&s, &v("this@-15"), &short).is_err());
    }

    // Random trace on a small torus-free window plus a canonical stream.
    fn trace(seed: &[bool]) -> MegaTrace {
        let s: WorldState = seed.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| Cell::new(i as i64 % 5 - 2, i as i64 / 5 - 2)).collect();
        MegaTrace::from_initial(&s, 4)
    }

    const ZS: [Cell; 3] = [Cell::new(0, 0), Cell::new(1, 0), Cell::new(0, 1)];

    // A stream in the denotation of `v`, with `noise` filling free ticks.
    fn canonical(v: &Value, g: &MegaTrace, noise: u64) -> SampledStream {
        let mut samples = std::collections::BTreeMap::new();
        for z in ZS {
            let col = (0..1200u64)
                .map(|t| {
                    let free = ((noise.wrapping_mul(t + 1).wrapping_add(z.x as u64 * 7 + z.y as u64)) >> 7) & 1 == 1;
                    match v {
                        Value::Top => free,
                        Value::Approx(_, n) if t < *n => free,
                        Value::Approx(a, _) => approx_at(a, t, z, g).unwrap(),
                        Value::Exact(e, n) => exact_at(*e, t as i64 - n, z, g).unwrap(),
                    }
                })
                .collect();
            samples.insert(z, col);
        }
        SampledStream { start: 0, samples }
    }

    fn pointwise(a: &SampledStream, b: &SampledStream, f: impl Fn(bool, bool) -> bool) -> SampledStream {
        let samples = a
            .samples
            .iter()
            .map(|(z, xs)| (*z, xs.iter().zip(&b.samples[z]).map(|(x, y)| f(*x, *y)).collect()))
            .collect();
        SampledStream { start: 0, samples }
    }

    fn delayed(a: &SampledStream, k: usize, fill: bool) -> SampledStream {
        let samples = a
            .samples
            .iter()
            .map(|(z, xs)| (*z, (0..xs.len()).map(|t| if t < k { fill } else { xs[t - k] }).collect()))
            .collect();
        SampledStream { start: 0, samples }
    }

    fn cell_formula() -> impl Strategy<Value = AValue> {
        let leaf = (-1i64..=1, -1i64..=1).prop_map(|(x, y)| AValue::cell(x, y));
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(AValue::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.or(b)),
                (inner.clone(), inner).prop_map(|(a, b)| a.xor(b)),
            ]
        })
    }

    fn any_value() -> impl Strategy<Value = Value> {
        prop_oneof![
            (cell_formula(), 0u64..700).prop_map(|(a, n)| Value::Approx(a, n)),
            (cell_formula(), 0u64..700).prop_map(|(_, n)| Value::Approx(next_cell_formula(), n)),
            (0usize..5, -700i64..700).prop_map(|(e, n)| {
                let e = [EValue::Ck, EValue::NotCk, EValue::This, EValue::ThisAndCk, EValue::ThisAndNotCk][e];
                Value::Exact(e, n)
            }),
            (-40i64..40).prop_map(Value::this),
            (-40i64..40).prop_map(|n| Value::Exact(EValue::NotCk, n)),
            (-600i64..600).prop_map(Value::ck),
            Just(Value::Top),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn operations_are_sound(
            seed in proptest::collection::vec(any::<bool>(), 25),
            v1 in any_value(),
            v2 in any_value(),
            noise in any::<u64>(),
            k in 0i64..40,
        ) {
            let g = trace(&seed);
            let s1 = canonical(&v1, &g, noise);
            let s2 = canonical(&v2, &g, noise.rotate_left(17));
            prop_assert!(denotes(&s1, &v1, &g).unwrap());
            for (r, s) in [
                (v_and(&v1, &v2), pointwise(&s1, &s2, |a, b| a && b)),
                (v_or(&v1, &v2), pointwise(&s1, &s2, |a, b| a || b)),
                (v_xor(&v1, &v2), pointwise(&s1, &s2, |a, b| a != b)),
                (v_not(&v1), pointwise(&s1, &s1, |a, _| !a)),
            ] {
                prop_assert!(denotes(&s, &r, &g).unwrap(), "{} with {} gave {}", v1, v2, r);
            }
            // delays are checked inside one period, where the generation
            // an approximate value refers to is unambiguous
            if let (Ok(d), false) = (v_delay(&v1, k), v1.is_exact()) {
                let mut late = delayed(&s1, k as usize, noise & 1 == 1);
                late.samples.values_mut().for_each(|c| c.truncate(586));
                prop_assert!(denotes(&late, &d, &g).unwrap());
            }
            if let Value::Exact(EValue::This, m) = v1 {
                if let Ok(d) = decay(&v1, m.max(0) as u64 + k as u64) {
                    let mut early = s1.clone();
                    early.samples.values_mut().for_each(|c| c.truncate(586));
                    prop_assert!(denotes(&early, &d, &g).unwrap());
                }
            }
        }

        #[test]
        fn refinement_is_sound(
            seed in proptest::collection::vec(any::<bool>(), 25),
            v1 in any_value(),
            v2 in any_value(),
            noise in any::<u64>(),
        ) {
            let g = trace(&seed);
            let s = canonical(&v1, &g, noise);
            if refines(&v1, &v2) {
                prop_assert!(denotes(&s, &v2, &g).unwrap(), "{} refines {}", v1, v2);
            }
        }

        #[test]
        fn refinement_is_monotone_in_delay(a in cell_formula(), m in 0u64..600, extra in 0u64..600) {
            prop_assert!(refines(&Value::Approx(a.clone(), m), &Value::Approx(a.clone(), m + extra)));
            if extra > 0 {
                prop_assert!(!refines(&Value::Approx(a.clone(), m + extra), &Value::Approx(a, m)));
            }
        }

        #[test]
        fn translation_commutes_with_shifting(
            seed in proptest::collection::vec(any::<bool>(), 25),
            a in cell_formula(),
            n in 0u64..600,
            zx in -3i64..3,
            zy in -3i64..3,
        ) {
            let g = trace(&seed);
            let z = Cell::new(zx, zy);
            let shifted = MegaTrace { gens: g.gens.iter().map(|s| s.translate(z)).collect() };
            let v = Value::Approx(a, n);
            let s = canonical(&v, &g, 0);
            prop_assert!(denotes(&s, &v, &g).unwrap());
            prop_assert!(denotes(&s, &translate_value(&v, z), &shifted).unwrap());
        }
    }

    // Streams for a witness that a perturbed guard constant admits an
    // unsound rewrite: a cell that is alive only in generation 0.
    fn flip_trace() -> MegaTrace {
        MegaTrace { gens: vec![WorldState::from_coords(&[(0, 0)]), WorldState::new(), WorldState::new()] }
    }

    fn sound(v1: &Value, v2: &Value, g: Guards) -> bool {
        let t = flip_trace();
        let r = v_and_with(v1, v2, g);
        if r == Value::Top {
            return true;
        }
        (0..16u64).all(|noise| {
            let s = pointwise(&canonical(v1, &t, noise), &canonical(v2, &t, noise * 31 + 5), |a, b| a && b);
            denotes(&s, &r, &t).unwrap()
        })
    }

    #[test]
    fn perturbed_guards_are_unsound() {
        let base = Guards::default();
        let not_ck = |n| Value::Exact(EValue::NotCk, n);
        // R1 with a wider pulse: this@m with m = n + 23
        assert!(sound(&Value::this(0), &not_ck(-22), base));
        assert!(!sound(&Value::this(1), &not_ck(-22), Guards { pulse: 23, ..base }));
        // R2 with a looser upper bound on the clock delay
        assert!(sound(&Value::ck(-22), &Value::Approx(next_cell_formula(), 564), base));
        assert!(!sound(&Value::ck(-21), &Value::Approx(next_cell_formula(), 0), Guards { ck_bound: -21, ..base }));
        // R2 with a longer period in the n <= m + period bound
        assert!(!sound(&Value::ck(-22), &Value::Approx(next_cell_formula(), 565), Guards { period: 587, ..base }));
    }
}
