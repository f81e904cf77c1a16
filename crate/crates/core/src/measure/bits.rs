use std::cmp::Ordering;
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

use super::Dyadic;

/// Malformed input in the bitstream text format.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("invalid byte 0x{byte:02x} at offset {offset}")]
    InvalidByte { offset: usize, byte: u8 },
}

/// A finite string over {0,1}.
///
/// Ordering is by length first and then lexicographic, which is the order
/// used for cylinder collections and for extension searches.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            bits: Vec::with_capacity(n),
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self {
            bits: iter.into_iter().map(u8::from).collect(),
        }
    }

    /// The `len` low-order bits of `value`, most significant first.
    pub fn from_integer(value: u64, len: usize) -> Self {
        assert!(len <= 64);
        Self {
            bits: (0..len)
                .map(|i| ((value >> (len - 1 - i)) & 1) as u8)
                .collect(),
        }
    }

    pub fn repeat(bit: bool, len: usize) -> Self {
        Self {
            bits: vec![u8::from(bit); len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).map(|&b| b == 1)
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(u8::from(bit));
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn truncate(&mut self, len: usize) {
        self.bits.truncate(len);
    }

    /// `self↾n`; clamps to the available length.
    pub fn prefix(&self, n: usize) -> BitString {
        Self {
            bits: self.bits[..n.min(self.len())].to_vec(),
        }
    }

    /// The bits as 0/1 bytes.
    pub fn as_slice(&self) -> &[u8] {
        &self.bits
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        self.bits.iter().map(|&b| b == 1)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn is_prefix_of(&self, other: &BitString) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// True when one of the two is a prefix of the other.
    pub fn is_compatible_with(&self, other: &BitString) -> bool {
        self.is_prefix_of(other) || other.is_prefix_of(self)
    }

    /// Bitwise complement.
    pub fn complement(&self) -> BitString {
        Self {
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    /// The string with the last bit removed, or `None` for the empty string.
    pub fn parent(&self) -> Option<BitString> {
        if self.is_empty() {
            None
        } else {
            Some(self.prefix(self.len() - 1))
        }
    }

    /// The string differing only in its last bit.
    pub fn sibling(&self) -> Option<BitString> {
        let mut out = self.clone();
        let last = out.bits.last_mut()?;
        *last = 1 - *last;
        Some(out)
    }

    pub fn child(&self, bit: bool) -> BitString {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    /// μ(N_σ) = 2^{-|σ|}.
    pub fn cylinder_measure(&self) -> Dyadic {
        Dyadic::pow2_neg(self.len() as u64)
    }

    /// Parse the bitstream file format: '0' and '1' with ASCII whitespace
    /// ignored.
    pub fn parse_stream(bytes: &[u8]) -> Result<BitString, FormatError> {
        let mut bits = Vec::with_capacity(bytes.len());
        for (offset, &byte) in bytes.iter().enumerate() {
            match byte {
                b'0' => bits.push(0),
                b'1' => bits.push(1),
                b' ' | b'\t' | b'\n' | b'\r' => {}
                _ => return Err(FormatError::InvalidByte { offset, byte }),
            }
        }
        Ok(Self { bits })
    }
}

impl Ord for BitString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

impl PartialOrd for BitString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for BitString {
    type Err = FormatError;

    /// Strict parse: every byte must be '0' or '1'.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.bytes()
            .enumerate()
            .map(|(offset, byte)| match byte {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(FormatError::InvalidByte { offset, byte }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|bits| Self { bits })
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self
            .bits
            .iter()
            .map(|&b| if b == 1 { '1' } else { '0' })
            .collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\"{self}\"")
    }
}

impl Serialize for BitString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bools(iter)
    }
}

/// A realized finite prefix of a conceptually infinite sequence, with a
/// label describing where it came from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitSequence {
    prefix: BitString,
    provenance: String,
}

impl BitSequence {
    pub fn new(prefix: BitString, provenance: impl Into<String>) -> Self {
        Self {
            prefix,
            provenance: provenance.into(),
        }
    }

    pub fn prefix(&self) -> &BitString {
        &self.prefix
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn into_prefix(self) -> BitString {
        self.prefix
    }

    /// The bitstream file encoding: the bits on one line, or nothing at all
    /// for an empty prefix.
    pub fn to_stream(&self) -> String {
        if self.prefix.is_empty() {
            String::new()
        } else {
            format!("{}\n", self.prefix)
        }
    }
}

impl Deref for BitSequence {
    type Target = BitString;

    fn deref(&self) -> &BitString {
        &self.prefix
    }
}
