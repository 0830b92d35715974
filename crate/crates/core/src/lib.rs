//! Exactly solvable one-dimensional potentials built from autonomous Riccati
//! seeds `W₀′ = f(W₀)`, their excited-state ladders, and an independent
//! shooting-method eigensolver used to check every construction.

pub mod algebra;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod family;
pub mod numeric;
pub mod oracle;
pub mod seed_quadratic;
pub mod seed_rational;
pub mod verify;

pub use error::{Error, Result};
