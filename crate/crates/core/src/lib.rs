//! Type inference for a small Haskell-like language with multi-parameter
//! type classes and nested, closed type annotations.
//!
//! The whole inference problem is compiled to Constraint Handling Rules
//! (CHRs). Every let-bound definition becomes a rule `g(t, l) <=> C`, where
//! `l` threads the types of lambda-bound variables so that a nested
//! definition can reach the constraints of its enclosing definitions via a
//! marked call `h(t', l)⊖`. Solving is a marked CHR derivation with cycle
//! removal, and annotations are checked by comparing the final stores of
//! `g_a(t, l)` and `g(t, l)`.

pub mod check;
pub mod lint;
pub mod solver;
pub mod surface;
pub mod translate;
pub mod types;
pub mod unify;

mod pretty;

pub use pretty::{conjunction, tidy_names};

pub use check::{infer_program, Options, Verdict};
pub use surface::parse;
