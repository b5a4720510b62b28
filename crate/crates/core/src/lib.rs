//! Containment of monadic disjunctive Datalog programs and of MMSNP
//! sentences.
//!
//! The decision pipeline runs [`boolify`] (answer variables and constants
//! away), [`simplify`] (simple programs over consolidated EDB relations),
//! [`reduce`] (containment as relativized emptiness) and [`emptiness`]
//! (the canonical instances `K_theta`); [`driver`] strings them together.
//! [`eval`] provides the semantics used both by the pipeline and by the
//! brute-force oracles, and [`tilegen`] generates the tiling-based hard
//! instances.

pub mod boolify;
pub mod driver;
pub mod emptiness;
pub mod error;
pub mod eval;
pub mod ir;
pub mod mmsnp;
pub mod reduce;
pub mod simplify;
pub mod textio;
pub mod tilegen;

pub use error::{Error, Result, SourceSpan};
pub use ir::{Atom, DisjointnessSet, Fact, Instance, Program, Rule, Schema, Term};
