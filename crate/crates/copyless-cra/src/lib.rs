//! Copyless cost register automata over commutative semirings.
//!
//! The crate provides the machine models (CRA, weighted automata, CRA with
//! regular lookahead, unambiguous CRA), their evaluation semantics, the
//! structural transformations (zero removal, normal form, stable registers,
//! collapse words, loop closed forms) and regular-lookahead elimination via
//! substitution-tree determinization, plus file formats, a reference corpus
//! and an equivalence-testing harness.

pub mod error;
pub mod semiring;
pub mod expr;
pub mod subst;
pub mod cra;
pub mod transforms;
pub mod weighted;
pub mod lookahead;
pub mod corpus;
pub mod format;
pub mod dot;
pub mod harness;

pub use error::{CraError, Result};
