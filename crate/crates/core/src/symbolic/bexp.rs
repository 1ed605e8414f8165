//! Boolean expressions over aged stream variables.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::life::{rule, Cell};

/// Hard limit on the number of distinct variables in one neighbourhood.
pub const VAR_CAP: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stream {
    A,
    B,
}

impl Stream {
    pub fn letter(self) -> char {
        match self {
            Stream::A => 'A',
            Stream::B => 'B',
        }
    }
}

/// Stream variable; `age` is the tick index of the input it stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId {
    pub stream: Stream,
    pub age: u32,
}

impl VarId {
    pub const fn new(stream: Stream, age: u32) -> Self {
        VarId { stream, age }
    }

    pub fn aged(self, by: u32) -> Self {
        VarId { stream: self.stream, age: self.age + by }
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.stream.letter(), self.age)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymError {
    #[error("too many variables ({count} > {cap}) in the neighbourhood of cell {cell:?}")]
    TooManyVariables { cell: Option<Cell>, count: usize, cap: usize },
    #[error("unbound variable {0}")]
    Unbound(VarId),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub enum BExp {
    True,
    False,
    Var(VarId),
    Not(Arc<BExp>),
    And(Arc<BExp>, Arc<BExp>),
    Or(Arc<BExp>, Arc<BExp>),
}

pub static FALSE: BExp = BExp::False;

impl fmt::Debug for BExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for BExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BExp::True => write!(f, "T"),
            BExp::False => write!(f, "F"),
            BExp::Var(v) => write!(f, "{v}"),
            BExp::Not(e) => match **e {
                BExp::And(..) | BExp::Or(..) => write!(f, "!({e})"),
                _ => write!(f, "!{e}"),
            },
            BExp::And(a, b) => {
                let side = |e: &BExp, f: &mut fmt::Formatter<'_>| match e {
                    BExp::Or(..) => write!(f, "({e})"),
                    _ => write!(f, "{e}"),
                };
                side(a, f)?;
                write!(f, " & ")?;
                side(b, f)
            }
            BExp::Or(a, b) => write!(f, "{a} | {b}"),
        }
    }
}

impl From<bool> for BExp {
    fn from(b: bool) -> Self {
        if b {
            BExp::True
        } else {
            BExp::False
        }
    }
}

impl BExp {
    pub fn var(stream: Stream, age: u32) -> BExp {
        BExp::Var(VarId::new(stream, age))
    }

    // The smart constructors fold constants but otherwise keep the shape.
    pub fn not(e: BExp) -> BExp {
        match e {
            BExp::True => BExp::False,
            BExp::False => BExp::True,
            BExp::Not(inner) => (*inner).clone(),
            e => BExp::Not(Arc::new(e)),
        }
    }

    pub fn and(a: BExp, b: BExp) -> BExp {
        match (a, b) {
            (BExp::False, _) | (_, BExp::False) => BExp::False,
            (BExp::True, e) | (e, BExp::True) => e,
            (a, b) if a == b => a,
            (a, b) => BExp::And(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn or(a: BExp, b: BExp) -> BExp {
        match (a, b) {
            (BExp::True, _) | (_, BExp::True) => BExp::True,
            (BExp::False, e) | (e, BExp::False) => e,
            (a, b) if a == b => a,
            (a, b) => BExp::Or(Arc::new(a), Arc::new(b)),
        }
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            BExp::True => Some(true),
            BExp::False => Some(false),
            _ => None,
        }
    }

    pub fn is_false(&self) -> bool {
        matches!(self, BExp::False)
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            BExp::True | BExp::False => {}
            BExp::Var(v) => {
                out.insert(*v);
            }
            BExp::Not(e) => e.collect_vars(out),
            BExp::And(a, b) | BExp::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn eval(&self, env: &HashMap<VarId, bool>) -> Result<bool, SymError> {
        Ok(match self {
            BExp::True => true,
            BExp::False => false,
            BExp::Var(v) => *env.get(v).ok_or(SymError::Unbound(*v))?,
            BExp::Not(e) => !e.eval(env)?,
            BExp::And(a, b) => a.eval(env)? && b.eval(env)?,
            BExp::Or(a, b) => a.eval(env)? || b.eval(env)?,
        })
    }

    /// Renames every variable through `f`.
    pub fn map_vars(&self, f: &impl Fn(VarId) -> VarId) -> BExp {
        match self {
            BExp::True | BExp::False => self.clone(),
            BExp::Var(v) => BExp::Var(f(*v)),
            BExp::Not(e) => BExp::Not(Arc::new(e.map_vars(f))),
            BExp::And(a, b) => BExp::And(Arc::new(a.map_vars(f)), Arc::new(b.map_vars(f))),
            BExp::Or(a, b) => BExp::Or(Arc::new(a.map_vars(f)), Arc::new(b.map_vars(f))),
        }
    }

    pub fn aged(&self, by: u32) -> BExp {
        self.map_vars(&|v| v.aged(by))
    }

    /// Truth table over `vars`: bit `i` is the value under the assignment
    /// giving `vars[j]` the value of bit `j` of `i`.
    pub fn truth_table(&self, vars: &[VarId]) -> Table {
        match self {
            BExp::True => Table::ones(vars.len()),
            BExp::False => Table::ZERO,
            BExp::Var(v) => {
                let j = vars.iter().position(|w| w == v).expect("variable not in table order");
                Table::var(j, vars.len())
            }
            BExp::Not(e) => e.truth_table(vars).not(vars.len()),
            BExp::And(a, b) => a.truth_table(vars).and(b.truth_table(vars)),
            BExp::Or(a, b) => a.truth_table(vars).or(b.truth_table(vars)),
        }
    }
}

/// A truth table over at most eight variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Table(pub [u64; 4]);

const VAR_WORD: [u64; 6] = [
    0xaaaa_aaaa_aaaa_aaaa,
    0xcccc_cccc_cccc_cccc,
    0xf0f0_f0f0_f0f0_f0f0,
    0xff00_ff00_ff00_ff00,
    0xffff_0000_ffff_0000,
    0xffff_ffff_0000_0000,
];

impl Table {
    pub const ZERO: Table = Table([0; 4]);

    pub fn ones(k: usize) -> Table {
        let mut t = Table([!0; 4]);
        t.mask(k);
        t
    }

    pub fn var(j: usize, k: usize) -> Table {
        let mut w = [0u64; 4];
        for (i, word) in w.iter_mut().enumerate() {
            *word = if j < 6 {
                VAR_WORD[j]
            } else if i >> (j - 6) & 1 == 1 {
                !0
            } else {
                0
            };
        }
        let mut t = Table(w);
        t.mask(k);
        t
    }

    fn mask(&mut self, k: usize) {
        let rows = 1usize << k;
        for (i, word) in self.0.iter_mut().enumerate() {
            let lo = i * 64;
            if lo >= rows {
                *word = 0;
            } else if rows - lo < 64 {
                *word &= (1u64 << (rows - lo)) - 1;
            }
        }
    }

    pub fn not(self, k: usize) -> Table {
        let mut t = Table(self.0.map(|w| !w));
        t.mask(k);
        t
    }

    pub fn and(self, o: Table) -> Table {
        Table(std::array::from_fn(|i| self.0[i] & o.0[i]))
    }

    pub fn or(self, o: Table) -> Table {
        Table(std::array::from_fn(|i| self.0[i] | o.0[i]))
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
}

#[inline(always)]
fn half(a: u64, b: u64) -> (u64, u64) {
    (a ^ b, a & b)
}

#[inline(always)]
fn full(a: u64, b: u64, c: u64) -> (u64, u64) {
    let t = a ^ b;
    (t ^ c, (a & b) | (c & t))
}

/// The life rule evaluated bitwise across 64 independent neighbourhoods.
pub fn life_rule_word(center: u64, n: &[u64; 8]) -> u64 {
    let (s0, c0) = full(n[0], n[1], n[2]);
    let (s1, c1) = full(n[3], n[4], n[5]);
    let (s2, c2) = half(n[6], n[7]);
    let (ones, c3) = full(s0, s1, s2);
    let (t, d0) = full(c0, c1, c2);
    let (twos, d1) = half(t, c3);
    let fours = d0 | d1;
    !fours & twos & (ones | center)
}

fn check_cap(count: usize) -> Result<(), SymError> {
    if count > VAR_CAP {
        Err(SymError::TooManyVariables { cell: None, count, cap: VAR_CAP })
    } else {
        Ok(())
    }
}

/// Variables and the resulting truth table of the life rule on this
/// neighbourhood.
pub fn next_cell_table(center: &BExp, nbrs: [&BExp; 8]) -> Result<(Vec<VarId>, Table), SymError> {
    let mut set = BTreeSet::new();
    center.collect_vars(&mut set);
    for n in nbrs {
        n.collect_vars(&mut set);
    }
    check_cap(set.len())?;
    let vars: Vec<VarId> = set.into_iter().collect();
    let c = center.truth_table(&vars);
    let ns: [Table; 8] = nbrs.map(|n| n.truth_table(&vars));
    let mut out = [0u64; 4];
    for (i, w) in out.iter_mut().enumerate() {
        *w = life_rule_word(c.0[i], &ns.map(|t| t.0[i]));
    }
    let mut t = Table(out);
    t.mask(vars.len());
    Ok((vars, t))
}

/// Next value of a symbolic cell given its eight neighbours.
pub fn next_cell_expr(center: &BExp, nbrs: [&BExp; 8]) -> Result<BExp, SymError> {
    if let Some(c) = center.as_const() {
        let mut k = 0;
        let mut all_const = true;
        for n in nbrs {
            match n.as_const() {
                Some(true) => k += 1,
                Some(false) => {}
                None => {
                    all_const = false;
                    break;
                }
            }
        }
        if all_const {
            return Ok(rule(c, k).into());
        }
    }
    let (vars, t) = next_cell_table(center, nbrs)?;
    Ok(from_table(&vars, &t))
}

/// The unsimplified nested if-expression for the same neighbourhood, for
/// cross-checking the simplifier.
pub fn next_cell_if_tree(center: &BExp, nbrs: [&BExp; 8]) -> Result<BExp, SymError> {
    let (vars, t) = next_cell_table(center, nbrs)?;
    let bits: Vec<bool> = (0..1usize << vars.len()).map(|i| t.get(i)).collect();
    Ok(if_tree(&vars, &bits))
}

fn ite(v: VarId, hi: BExp, lo: BExp) -> BExp {
    BExp::Or(
        Arc::new(BExp::And(Arc::new(BExp::Var(v)), Arc::new(hi))),
        Arc::new(BExp::And(Arc::new(BExp::Not(Arc::new(BExp::Var(v)))), Arc::new(lo))),
    )
}

fn if_tree(vars: &[VarId], bits: &[bool]) -> BExp {
    let Some((&v, rest)) = vars.split_first() else {
        return bits[0].into();
    };
    let (lo, hi) = split(bits);
    ite(v, if_tree(rest, &hi), if_tree(rest, &lo))
}

// Entries with the lowest variable false, then true.
fn split(bits: &[bool]) -> (Vec<bool>, Vec<bool>) {
    (bits.iter().step_by(2).copied().collect(), bits.iter().skip(1).step_by(2).copied().collect())
}

/// Shannon expansion of a truth table into a simplified expression.
pub fn from_table(vars: &[VarId], t: &Table) -> BExp {
    let bits: Vec<bool> = (0..1usize << vars.len()).map(|i| t.get(i)).collect();
    shannon(vars, &bits)
}

fn shannon(vars: &[VarId], bits: &[bool]) -> BExp {
    if bits.iter().all(|&b| b) {
        return BExp::True;
    }
    if bits.iter().all(|&b| !b) {
        return BExp::False;
    }
    let (&v, rest) = vars.split_first().expect("non-constant table has a variable");
    let (lo, hi) = split(bits);
    if lo == hi {
        return shannon(rest, &lo);
    }
    let x = BExp::Var(v);
    let nx = || BExp::Not(Arc::new(BExp::Var(v)));
    if lo.iter().zip(&hi).all(|(a, b)| a != b) {
        let h = shannon(rest, &hi);
        return match h {
            BExp::True => x,
            BExp::False => nx(),
            h => BExp::or(BExp::and(x, h.clone()), BExp::and(nx(), BExp::not(h))),
        };
    }
    let (h, l) = (shannon(rest, &hi), shannon(rest, &lo));
    match (h, l) {
        (h, BExp::False) => BExp::and(x, h),
        (BExp::False, l) => BExp::and(nx(), l),
        (BExp::True, l) => BExp::or(x, l),
        (h, BExp::True) => BExp::or(nx(), h),
        (h, l) => BExp::or(BExp::and(x, h), BExp::and(nx(), l)),
    }
}

/// Semantic equality by truth tables.
pub fn equiv(a: &BExp, b: &BExp) -> Result<bool, SymError> {
    if a == b {
        return Ok(true);
    }
    let mut set = a.vars();
    b.collect_vars(&mut set);
    check_cap(set.len())?;
    let vars: Vec<VarId> = set.into_iter().collect();
    Ok(a.truth_table(&vars) == b.truth_table(&vars))
}

/// Canonical simplification via the truth table.
pub fn simplify(e: &BExp) -> Result<BExp, SymError> {
    let vars: Vec<VarId> = e.vars().into_iter().collect();
    check_cap(vars.len())?;
    Ok(from_table(&vars, &e.truth_table(&vars)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a(k: u32) -> BExp {
        BExp::var(Stream::A, k)
    }
    fn b(k: u32) -> BExp {
        BExp::var(Stream::B, k)
    }

    #[test]
    fn vars_examples() {
        assert!(BExp::True.vars().is_empty());
        let e = BExp::and(a(2), BExp::not(b(1)));
        let v: Vec<_> = e.vars().into_iter().collect();
        assert_eq!(v, vec![VarId::new(Stream::A, 2), VarId::new(Stream::B, 1)]);
        let e = BExp::Or(Arc::new(a(0)), Arc::new(a(0)));
        assert_eq!(e.vars().len(), 1);
    }

    #[test]
    fn eval_examples() {
        let env: HashMap<_, _> = [(VarId::new(Stream::A, 2), true), (VarId::new(Stream::B, 1), true)].into();
        assert!(BExp::and(a(2), b(1)).eval(&env).unwrap());
        let env: HashMap<_, _> = [(VarId::new(Stream::A, 0), true)].into();
        assert!(!BExp::not(a(0)).eval(&env).unwrap());
        assert!(!BExp::False.eval(&HashMap::new()).unwrap());
        assert_eq!(a(5).eval(&HashMap::new()), Err(SymError::Unbound(VarId::new(Stream::A, 5))));
    }

    #[test]
    fn constant_birth() {
        let t = BExp::True;
        let f = BExp::False;
        let e = next_cell_expr(&f, [&t, &t, &t, &f, &f, &f, &f, &f]).unwrap();
        assert_eq!(e, BExp::True);
    }

    #[test]
    fn constant_neighbourhoods_match_rule() {
        for m in 0u32..512 {
            let bit = |i: u32| BExp::from(m >> i & 1 == 1);
            let cells: Vec<BExp> = (0..9).map(bit).collect();
            let n = [&cells[1], &cells[2], &cells[3], &cells[4], &cells[5], &cells[6], &cells[7], &cells[8]];
            let k = (m >> 1).count_ones();
            let want = rule(m & 1 == 1, k);
            assert_eq!(next_cell_expr(&cells[0], n).unwrap(), BExp::from(want));
            // also through the table path
            let (_, t) = next_cell_table(&cells[0], n).unwrap();
            assert_eq!(t.get(0), want);
        }
    }

    #[test]
    fn worked_example_simplifies_to_conjunction() {
        // one live constant plus A2 and B1: birth exactly when both are on
        let (t, f) = (BExp::True, BExp::False);
        let (x, y) = (a(2), b(1));
        let e = next_cell_expr(&f, [&t, &x, &y, &f, &f, &f, &f, &f]).unwrap();
        assert_eq!(e, BExp::and(a(2), b(1)));
        let tree = next_cell_if_tree(&f, [&t, &x, &y, &f, &f, &f, &f, &f]).unwrap();
        assert!(equiv(&tree, &e).unwrap());
        // if A2 then (if B1 then true else false) else false
        let if_tree = ite(
            VarId::new(Stream::A, 2),
            ite(VarId::new(Stream::B, 1), BExp::True, BExp::False),
            BExp::False,
        );
        assert!(equiv(&if_tree, &BExp::and(a(2), b(1))).unwrap());
        assert_eq!(simplify(&if_tree).unwrap(), BExp::and(a(2), b(1)));
    }

    #[test]
    fn equiv_examples() {
        let lhs = BExp::and(a(2), b(1));
        let rhs = BExp::not(BExp::or(BExp::not(a(2)), BExp::not(b(1))));
        assert!(equiv(&lhs, &rhs).unwrap());
        assert!(!equiv(&a(0), &a(1)).unwrap());
    }

    #[test]
    fn cap_is_enforced() {
        let vs: Vec<BExp> = (0..9).map(a).collect();
        let n = [&vs[1], &vs[2], &vs[3], &vs[4], &vs[5], &vs[6], &vs[7], &vs[8]];
        assert!(matches!(next_cell_expr(&vs[0], n), Err(SymError::TooManyVariables { count: 9, .. })));
        let big = vs.iter().cloned().reduce(BExp::and).unwrap();
        assert!(equiv(&big, &BExp::True).is_err());
    }

    #[test]
    fn table_var_words() {
        for k in 0..=8 {
            for j in 0..k {
                let t = Table::var(j, k);
                for i in 0..1usize << k {
                    assert_eq!(t.get(i), i >> j & 1 == 1);
                }
                for i in 1usize << k..256 {
                    assert!(!t.get(i));
                }
            }
        }
    }

    fn arb_cell(nvars: u32) -> impl Strategy<Value = BExp> {
        let leaf = prop_oneof![
            Just(BExp::True),
            Just(BExp::False),
            (0..nvars).prop_map(a),
            (0..nvars).prop_map(b),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| BExp::Not(Arc::new(e))),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| BExp::And(Arc::new(x), Arc::new(y))),
                (inner.clone(), inner).prop_map(|(x, y)| BExp::Or(Arc::new(x), Arc::new(y))),
            ]
        })
    }

    proptest! {
        #[test]
        fn simplified_matches_if_tree(cells in proptest::collection::vec(arb_cell(2), 9)) {
            let n = [&cells[1], &cells[2], &cells[3], &cells[4], &cells[5], &cells[6], &cells[7], &cells[8]];
            let s = next_cell_expr(&cells[0], n).unwrap();
            let t = next_cell_if_tree(&cells[0], n).unwrap();
            prop_assert!(equiv(&s, &t).unwrap());
        }

        #[test]
        fn next_cell_agrees_with_rule(cells in proptest::collection::vec(arb_cell(2), 9)) {
            let n = [&cells[1], &cells[2], &cells[3], &cells[4], &cells[5], &cells[6], &cells[7], &cells[8]];
            let s = next_cell_expr(&cells[0], n).unwrap();
            let mut all = BTreeSet::new();
            for c in &cells { c.collect_vars(&mut all); }
            let vars: Vec<VarId> = all.into_iter().collect();
            for m in 0..1usize << vars.len() {
                let env: HashMap<VarId, bool> = vars.iter().enumerate().map(|(j, &v)| (v, m >> j & 1 == 1)).collect();
                let bits: Vec<bool> = cells.iter().map(|c| c.eval(&env).unwrap()).collect();
                let k = bits[1..].iter().filter(|&&x| x).count() as u32;
                prop_assert_eq!(s.eval(&env).unwrap(), rule(bits[0], k));
            }
        }

        #[test]
        fn simplify_preserves_meaning(e in arb_cell(3)) {
            prop_assert!(equiv(&simplify(&e).unwrap(), &e).unwrap());
        }
    }
}
