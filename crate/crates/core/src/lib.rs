//! Seeded extractors with small locality, a low-locality condenser,
//! bit-fixing extractors and the generators built from them, all expressed
//! as explicit GF(2) maps that can be audited bit by bit.

pub mod amplifier;
pub mod applications;
pub mod artifact;
pub mod bitcore;
pub mod bitfix;
pub mod combinatorics;
pub mod commands;
pub mod compositions;
pub mod condenser;
pub mod error;
pub mod expander;
pub mod experiment;
pub mod harness;
pub mod nisan;
pub mod primitives;
pub mod samplers;

pub use bitcore::{BitVector, GF2Field};
pub use error::{Error, Result};
pub use primitives::ExtractorDescriptor;
