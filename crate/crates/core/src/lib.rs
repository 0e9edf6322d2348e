//! A workbench for `n`-variable first-order logic over finite structures.
//!
//! * [`logic`]: formulas of the `n`-variable fragment, their concrete syntax
//!   and syntactic analyses.
//! * [`relation`] and [`structure`]: dense relation tables, finite
//!   structures, JSON documents.
//! * [`eval`]: meanings of formulas via cylindric set operations, plus a
//!   naive satisfaction oracle.
//! * [`closure`], [`implicit`], [`automorphism`]: the atoms of the algebra
//!   of definable relations, brute-force implicit definitions, and
//!   automorphism search.
//! * [`construction`]: the model, theory and implicit definition showing
//!   that `n`-variable logic lacks the weak Beth definability property, and
//!   a verifier that replays the argument mechanically.

pub mod automorphism;
pub mod closure;
pub mod construction;
pub mod error;
pub mod eval;
pub mod implicit;
pub mod logic;
pub mod relation;
pub mod structure;

pub use closure::{close, AlgebraClosure};
pub use error::{Error, Result};
pub use eval::{evaluate, evaluate_naive, sentence_holds, CylindricSpace};
pub use logic::{parse, render, Formula, Signature, Var};
pub use relation::NAryRelation;
pub use structure::Structure;
