//! Symbolic life: every cell holds a boolean expression over aged input
//! stream variables.

mod bexp;
mod grid;

pub use bexp::{
    equiv, from_table, life_rule_word, next_cell_expr, next_cell_if_tree, next_cell_table, simplify, BExp, Stream,
    SymError, Table, VarId, VAR_CAP,
};
pub use grid::{age_grid, concretize, sym_step, SymGrid};
