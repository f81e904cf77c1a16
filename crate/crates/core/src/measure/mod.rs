//! Bitstrings, finite prefixes of sequences, and the fair-coin measure on
//! Cantor space.
//!
//! All measure values are exact [`Dyadic`] rationals; nothing in this
//! module touches floating point except the explicit conversions on
//! `Dyadic`.

mod bits;
mod dyadic;
mod openset;

pub use bits::{BitSequence, BitString, FormatError};
pub use dyadic::Dyadic;
pub use openset::{Membership, MeasureError, OpenSet, MAX_ENUMERATION_DEPTH};
