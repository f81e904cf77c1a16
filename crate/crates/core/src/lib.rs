//! Executable pieces of effective randomness on Cantor space: exact
//! cylinder measure, computable tail bounds, truncated Solovay tests,
//! SLLN/normality/LIL scanners and bit-sequence generators.

pub mod measure;

pub use measure::{BitSequence, BitString, Dyadic, Membership, OpenSet};
pub mod bounds;
pub mod rational;
pub mod scan;
pub mod solovay;
pub mod generators;
