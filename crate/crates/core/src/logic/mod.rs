//! Formulas of the n-variable fragment: AST, concrete syntax, and
//! syntactic analyses.

mod formula;
pub(crate) mod parse;

pub use formula::{render, Formula, Signature, Var};
pub use parse::parse;

pub fn variable_span(formula: &Formula) -> usize {
    formula.variable_span()
}

pub fn is_restricted(formula: &Formula) -> bool {
    formula.is_restricted()
}
