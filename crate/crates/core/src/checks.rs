//! Seeded self-checks run by `golgol oracle-check`.

use std::collections::HashMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::life::{influence_disjoint, step, Cell, WorldState};
use crate::symbolic::{concretize, sym_step, BExp, Stream, SymGrid, VarId};
use crate::values::next_cell_counterexample;

/// Outcome of one suite: a one-line summary or the first failure.
pub type CheckResult = Result<String, String>;

fn neighbourhood(bits: u32) -> WorldState {
    (0..9).filter(|i| (bits >> i) & 1 == 1).map(|i| Cell::new(i % 3 - 1, i / 3 - 1)).collect()
}

/// `step` against B3/S23 stated as a table over the centre and its count.
pub fn rule_table() -> CheckResult {
    for bits in 0u32..512 {
        let alive = bits & (1 << 4) != 0;
        let n = (bits & !(1 << 4)).count_ones();
        let expect = matches!((alive, n), (_, 3) | (true, 2));
        if step(&neighbourhood(bits)).contains(Cell::new(0, 0)) != expect {
            return Err(format!("step disagrees with the rule table on neighbourhood {bits:#011b}"));
        }
    }
    Ok("step matches the rule table over 512 cases".into())
}

pub fn next_cell() -> CheckResult {
    match next_cell_counterexample(&crate::values::next_cell_formula()) {
        None => Ok("nextCell ≡ step over 512 cases".into()),
        Some(b) => Err(format!("nextCell differs from step on neighbourhood {b:#011b}")),
    }
}

fn random_blob(rng: &mut StdRng, at: Cell, size: i64) -> WorldState {
    (0..size * size)
        .filter(|_| rng.gen_bool(0.4))
        .map(|i| at + Cell::new(i % size, i / size))
        .collect()
}

pub fn locality(rng: &mut StdRng, cases: usize) -> CheckResult {
    let mut done = 0;
    while done < cases {
        let a = random_blob(rng, Cell::new(0, 0), 6);
        let at = Cell::new(rng.gen_range(-12..12), rng.gen_range(-12..12));
        let b = random_blob(rng, at, 6);
        if !influence_disjoint(&a, &b) {
            continue;
        }
        if step(&a.union(&b)) != step(&a).union(&step(&b)) {
            return Err(format!("locality fails for {:?} and {:?}", a.sorted(), b.sorted()));
        }
        done += 1;
    }
    Ok(format!("step is local on {cases} disjoint pairs"))
}

fn random_bexp(rng: &mut StdRng, vars: &[VarId], depth: u32) -> BExp {
    match rng.gen_range(0..if depth == 0 { 3 } else { 6 }) {
        0 => BExp::False,
        1 | 2 => {
            let v = vars[rng.gen_range(0..vars.len())];
            BExp::var(v.stream, v.age)
        }
        3 => BExp::not(random_bexp(rng, vars, depth - 1)),
        4 => BExp::and(random_bexp(rng, vars, depth - 1), random_bexp(rng, vars, depth - 1)),
        _ => BExp::or(random_bexp(rng, vars, depth - 1), random_bexp(rng, vars, depth - 1)),
    }
}

pub fn symbolic_soundness(rng: &mut StdRng, cases: usize) -> CheckResult {
    let vars = [VarId::new(Stream::A, 0), VarId::new(Stream::A, 1), VarId::new(Stream::B, 0)];
    for case in 0..cases {
        let mut g = SymGrid::new(Cell::new(0, 0), 4, 4);
        for y in 0..4 {
            for x in 0..4 {
                let e = if rng.gen_bool(0.5) { random_bexp(rng, &vars, 2) } else { BExp::False };
                g.set(Cell::new(x, y), e);
            }
        }
        let next = sym_step(&g).map_err(|e| e.to_string())?;
        for bits in 0..8u32 {
            let env: HashMap<VarId, bool> = vars.iter().enumerate().map(|(i, &v)| (v, bits >> i & 1 == 1)).collect();
            let lhs = concretize(&next, &env).map_err(|e| e.to_string())?;
            let rhs = step(&concretize(&g, &env).map_err(|e| e.to_string())?);
            if lhs != rhs {
                return Err(format!("symbolic step unsound on case {case}, assignment {bits:03b}"));
            }
        }
    }
    Ok(format!("sym_step is sound on {cases} grids under every assignment"))
}

/// Runs every suite with randomness fixed by `seed`.
pub fn run_all(seed: u64, cases: usize) -> Vec<(&'static str, CheckResult)> {
    let mut rng = StdRng::seed_from_u64(seed);
    vec![
        ("rule", rule_table()),
        ("nextCell", next_cell()),
        ("locality", locality(&mut rng, cases)),
        ("symbolic", symbolic_soundness(&mut rng, cases)),
    ]
}
