//! Tick-level signal expressions: named inputs, delays and pointwise logic.
//!
//! Text form: names `[A-Za-z_][A-Za-z0-9_]*`, `!` prefix, `@n` postfix
//! delay, then `&`, `^`, `|` in decreasing precedence, parentheses.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::symbolic::{BExp, Stream};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SignalExpr {
    Input(String),
    Delay(Box<SignalExpr>, u32),
    Not(Box<SignalExpr>),
    And(Box<SignalExpr>, Box<SignalExpr>),
    Or(Box<SignalExpr>, Box<SignalExpr>),
    Xor(Box<SignalExpr>, Box<SignalExpr>),
}

use SignalExpr::*;

pub fn input(name: &str) -> SignalExpr {
    Input(name.to_string())
}

impl SignalExpr {
    pub fn delay(self, n: u32) -> SignalExpr {
        Delay(Box::new(self), n)
    }

    pub fn not(self) -> SignalExpr {
        Not(Box::new(self))
    }

    pub fn and(self, o: SignalExpr) -> SignalExpr {
        And(Box::new(self), Box::new(o))
    }

    pub fn or(self, o: SignalExpr) -> SignalExpr {
        Or(Box::new(self), Box::new(o))
    }

    pub fn xor(self, o: SignalExpr) -> SignalExpr {
        Xor(Box::new(self), Box::new(o))
    }

    pub fn names(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.walk_names(&mut out);
        out
    }

    fn walk_names(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Input(n) => {
                out.insert(n.clone());
            }
            Delay(e, _) | Not(e) => e.walk_names(out),
            And(a, b) | Or(a, b) | Xor(a, b) => {
                a.walk_names(out);
                b.walk_names(out);
            }
        }
    }

    /// Largest total delay on any path to a leaf.
    pub fn max_delay(&self) -> u32 {
        match self {
            Input(_) => 0,
            Delay(e, n) => n + e.max_delay(),
            Not(e) => e.max_delay(),
            And(a, b) | Or(a, b) | Xor(a, b) => a.max_delay().max(b.max_delay()),
        }
    }

    /// Delays pushed through `&`, `|`, `^` down to the leaves and merged.
    /// A delay above `!` stays there: a delayed negation is false during
    /// the first ticks while the negated delay is true.
    pub fn normalize(&self) -> SignalExpr {
        match self {
            Input(n) => Input(n.clone()),
            Delay(e, n) => push_delay(e.normalize(), *n),
            Not(e) => match e.normalize() {
                Not(inner) => *inner,
                e => e.not(),
            },
            And(a, b) => a.normalize().and(b.normalize()),
            Or(a, b) => a.normalize().or(b.normalize()),
            Xor(a, b) => a.normalize().xor(b.normalize()),
        }
    }

    pub fn substitute(&self, binding: &BTreeMap<String, SignalExpr>) -> SignalExpr {
        self.subst_raw(binding).normalize()
    }

    fn subst_raw(&self, binding: &BTreeMap<String, SignalExpr>) -> SignalExpr {
        match self {
            Input(n) => binding.get(n).cloned().unwrap_or_else(|| Input(n.clone())),
            Delay(e, n) => e.subst_raw(binding).delay(*n),
            Not(e) => e.subst_raw(binding).not(),
            And(a, b) => a.subst_raw(binding).and(b.subst_raw(binding)),
            Or(a, b) => a.subst_raw(binding).or(b.subst_raw(binding)),
            Xor(a, b) => a.subst_raw(binding).xor(b.subst_raw(binding)),
        }
    }

    /// Value at tick `t`; `env(name, u)` is the input stream.
    pub fn eval(&self, t: u64, env: &dyn Fn(&str, u64) -> bool) -> bool {
        match self {
            Input(n) => env(n, t),
            Delay(e, n) => t >= *n as u64 && e.eval(t - *n as u64, env),
            Not(e) => !e.eval(t, env),
            And(a, b) => a.eval(t, env) && b.eval(t, env),
            Or(a, b) => a.eval(t, env) || b.eval(t, env),
            Xor(a, b) => a.eval(t, env) != b.eval(t, env),
        }
    }

    /// Symbolic value at tick `t`, input `name` at tick `u` being the
    /// variable of age `u` on stream `streams(name)`.
    pub fn to_bexp(&self, t: u64, streams: &dyn Fn(&str) -> Stream) -> BExp {
        match self {
            Input(n) => BExp::var(streams(n), t as u32),
            Delay(e, n) => {
                if t >= *n as u64 {
                    e.to_bexp(t - *n as u64, streams)
                } else {
                    BExp::False
                }
            }
            Not(e) => BExp::not(e.to_bexp(t, streams)),
            And(a, b) => BExp::and(a.to_bexp(t, streams), b.to_bexp(t, streams)),
            Or(a, b) => BExp::or(a.to_bexp(t, streams), b.to_bexp(t, streams)),
            Xor(a, b) => {
                let (x, y) = (a.to_bexp(t, streams), b.to_bexp(t, streams));
                BExp::or(BExp::and(x.clone(), BExp::not(y.clone())), BExp::and(BExp::not(x), y))
            }
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Or(..) => 1,
            Xor(..) => 2,
            And(..) => 3,
            Not(..) => 4,
            Delay(..) => 5,
            Input(..) => 6,
        }
    }
}

fn push_delay(e: SignalExpr, n: u32) -> SignalExpr {
    if n == 0 {
        return e;
    }
    match e {
        Delay(inner, m) => Delay(inner, m + n),
        And(a, b) => push_delay(*a, n).and(push_delay(*b, n)),
        Or(a, b) => push_delay(*a, n).or(push_delay(*b, n)),
        Xor(a, b) => push_delay(*a, n).xor(push_delay(*b, n)),
        e => e.delay(n),
    }
}

impl fmt::Display for SignalExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |e: &SignalExpr, min: u8, f: &mut fmt::Formatter<'_>| {
            if e.prec() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Input(n) => write!(f, "{n}"),
            Delay(e, n) => {
                sub(e, 6, f)?;
                write!(f, "@{n}")
            }
            Not(e) => {
                write!(f, "!")?;
                sub(e, 4, f)
            }
            And(a, b) => {
                sub(a, 3, f)?;
                write!(f, " & ")?;
                sub(b, 4, f)
            }
            Xor(a, b) => {
                sub(a, 2, f)?;
                write!(f, " ^ ")?;
                sub(b, 3, f)
            }
            Or(a, b) => {
                sub(a, 1, f)?;
                write!(f, " | ")?;
                sub(b, 2, f)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("signal parse error at column {column}: {message}")]
pub struct SignalParseError {
    pub column: usize,
    pub message: String,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
}

impl Parser<'_> {
    fn err<T>(&self, m: &str) -> Result<T, SignalParseError> {
        Err(SignalParseError { column: self.i + 1, message: m.to_string() })
    }

    fn ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.ws();
        if self.s.get(self.i) == Some(&c) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<SignalExpr, SignalParseError> {
        let mut e = self.xor()?;
        while self.eat(b'|') {
            e = e.or(self.xor()?);
        }
        Ok(e)
    }

    fn xor(&mut self) -> Result<SignalExpr, SignalParseError> {
        let mut e = self.and()?;
        while self.eat(b'^') {
            e = e.xor(self.and()?);
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<SignalExpr, SignalParseError> {
        let mut e = self.unary()?;
        while self.eat(b'&') {
            e = e.and(self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<SignalExpr, SignalParseError> {
        if self.eat(b'!') {
            return Ok(self.unary()?.not());
        }
        let mut e = self.atom()?;
        while self.eat(b'@') {
            self.ws();
            let start = self.i;
            while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
                self.i += 1;
            }
            let digits = std::str::from_utf8(&self.s[start..self.i]).unwrap_or("");
            match digits.parse::<u32>() {
                Ok(n) => e = e.delay(n),
                Err(_) => {
                    self.i = start;
                    return self.err("expected a tick count after '@'");
                }
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<SignalExpr, SignalParseError> {
        if self.eat(b'(') {
            let e = self.or()?;
            if !self.eat(b')') {
                return self.err("expected ')'");
            }
            return Ok(e);
        }
        self.ws();
        let start = self.i;
        while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
            if self.i == start && self.s[self.i].is_ascii_digit() {
                break;
            }
            self.i += 1;
        }
        if start == self.i {
            return self.err("expected an input name or '('");
        }
        Ok(Input(String::from_utf8_lossy(&self.s[start..self.i]).into_owned()))
    }
}

impl std::str::FromStr for SignalExpr {
    type Err = SignalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = Parser { s: s.as_bytes(), i: 0 };
        let e = p.or()?;
        p.ws();
        if p.i != s.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> SignalExpr {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_print() {
        let e = p("a@5 & b@6");
        assert_eq!(e, input("a").delay(5).and(input("b").delay(6)));
        assert_eq!(e.to_string(), "a@5 & b@6");
        assert_eq!(p("(a@5 & b@6)@5").normalize().to_string(), "a@10 & b@11");
        assert_eq!(p("!(a | b)@2").to_string(), "!(a | b)@2");
        assert_eq!(p("a | b ^ c & d"), input("a").or(input("b").xor(input("c").and(input("d")))));
        assert!("a &".parse::<SignalExpr>().is_err());
        assert!("a@".parse::<SignalExpr>().is_err());
        assert!("a b".parse::<SignalExpr>().is_err());
    }

    #[test]
    fn delays_merge_and_distribute() {
        assert_eq!(p("(a@3)@4").normalize(), p("a@7"));
        assert_eq!(p("((a ^ b)@2 | c)@1").normalize(), p("a@3 ^ b@3 | c@1"));
        // a delayed negation is not a negated delay
        assert_eq!(p("(!a)@3").normalize().to_string(), "(!a)@3");
        assert_eq!(p("(!(a & b@1))@3").normalize().to_string(), "(!(a & b@1))@3");
        assert_eq!(p("a@0").normalize(), p("a"));
        assert_eq!(p("!!a").normalize(), p("a"));
    }

    #[test]
    fn half_adder_output_round_trips() {
        let s = "a@15 & (a@12 & !b@18 | !a@12 & b@15 & !b@18) | !a@15 & (a@12 | b@15)";
        let e = p(s);
        assert_eq!(e.to_string(), s);
        assert_eq!(e.max_delay(), 18);
    }

    #[test]
    fn substitution_examples() {
        let wire = p("a@5");
        let b: BTreeMap<_, _> = [("a".to_string(), p("a@5 & b@6"))].into();
        assert_eq!(wire.substitute(&b).to_string(), "a@10 & b@11");
        let id: BTreeMap<_, _> = [("a".to_string(), p("a"))].into();
        assert_eq!(wire.substitute(&id), wire);
    }

    #[test]
    fn delay_semantics() {
        let a = |_: &str, t: u64| t % 2 == 0;
        let e = p("a@3");
        assert!(!e.eval(2, &a));
        assert!(e.eval(3, &a));
        assert!(!e.eval(4, &a));
        assert!(p("(!a)@3").eval(4, &a));
        assert!(!p("(!a)@3").eval(1, &a));
        assert!(p("!a@3").eval(1, &a));
    }

    fn arb_sig() -> impl Strategy<Value = SignalExpr> {
        let leaf = prop_oneof![Just(input("a")), Just(input("b"))];
        leaf.prop_recursive(4, 20, 2, |inner| {
            prop_oneof![
                (inner.clone(), 0u32..6).prop_map(|(e, n)| e.delay(n)),
                inner.clone().prop_map(SignalExpr::not),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| x.and(y)),
                (inner.clone(), inner.clone()).prop_map(|(x, y)| x.or(y)),
                (inner.clone(), inner).prop_map(|(x, y)| x.xor(y)),
            ]
        })
    }

    proptest! {
        #[test]
        fn normalize_preserves_meaning(e in arb_sig(), bits in proptest::collection::vec(any::<bool>(), 40)) {
            let env = |n: &str, t: u64| bits[(t as usize + if n == "a" { 0 } else { 20 }) % 40];
            let n = e.normalize();
            for t in 0..30 {
                prop_assert_eq!(e.eval(t, &env), n.eval(t, &env));
            }
            prop_assert_eq!(n.normalize(), n.clone());
        }

        #[test]
        fn display_parses_back(e in arb_sig()) {
            prop_assert_eq!(e.to_string().parse::<SignalExpr>().unwrap(), e);
        }

        #[test]
        fn nested_delays_add(m in 0u32..50, n in 0u32..50) {
            prop_assert_eq!(input("a").delay(m).delay(n).normalize(), input("a").delay(m + n).normalize());
        }
    }
}
