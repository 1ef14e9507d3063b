//! Symbolic computations with diffieties: Pfaffian modules of contact forms on
//! infinite jet spaces, their standard bases, variations and symmetries,
//! Hilbert polynomial invariants and the Cartan involutivity test.

pub mod diffiety;
pub mod examples;
mod error;
pub mod geometry;
pub mod involution;
pub mod standard;
pub mod symkernel;
pub mod symmetry;

pub use error::{Error, Result};
