//! Verifiable truth inference: float circuits, sponge commitments and R1CS synthesis.

pub mod builder;
pub mod commitment;
pub mod dataset;
pub mod error;
pub mod float;
pub mod field;
pub mod gadgets;
pub mod inference;
pub mod protocol;
pub mod r1cs;
pub mod synthetic;

pub use builder::{Builder, Lc};
pub use error::{Error, Result};
pub use field::{Field, FieldElement};
