//! Conditional probabilistic guarded command language (cpGCL).
//!
//! The crate parses cpGCL programs, computes weakest (liberal) pre-expectations
//! and conditional pre-expectations symbolically over exact rationals, builds
//! the operational reward MDP of a program and solves it exactly, and provides
//! the source-to-source transformations that remove or introduce `observe`
//! statements.
//!
//! ```
//! use cpgcl::{syntax, expectation::Expectation, transformer, State, AnalysisValue};
//!
//! let p = syntax::parse("{x := 0} [1/2] {x := 1}; observe (x = 1)").unwrap();
//! let f = Expectation::parse("x").unwrap();
//! let v = transformer::cwp(&p.body, &f, &State::zeros(&p.declared_vars), 50).unwrap();
//! assert_eq!(v, AnalysisValue::exact_int(1));
//! ```

pub mod check;
pub mod cli;
pub mod corpus;
mod error;
pub mod expectation;
mod fixpoint;
pub mod gen;
mod linalg;
mod numeric;
pub mod operational;
pub mod solver;
pub mod syntax;
pub mod transform;
pub mod transformer;

pub use error::{Error, Pos, Result, ValidationIssue};
pub use expectation::State;
pub use numeric::{format_decimal, parse_rational, AnalysisValue, Rational, Value};
