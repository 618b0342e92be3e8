//! Probabilistic polynomials for symmetric Boolean functions.
//!
//! The crate covers exact symmetric representations over prime fields and the rationals,
//! seeded samplers for randomized low-degree constructions, verification harnesses, the
//! restriction-based reductions to hard functions, and a calculator for the associated
//! degree bounds.

pub mod bounds;
pub mod error;
pub mod expr;
pub mod field;
pub mod polyalg;
pub mod probpoly;
pub mod rng;
pub mod reductions;
pub mod symfun;
pub mod verify;

pub use error::{Error, Result};
pub use field::{FieldElement, FieldSpec, Prob};
pub use symfun::Spectrum;
