use std::collections::{BTreeMap, BTreeSet, HashSet};

use num_bigint::BigUint;
use serde::Serialize;
use thiserror::Error;

use super::{BitString, Dyadic};

/// Largest depth `brute_force_measure` will enumerate.
pub const MAX_ENUMERATION_DEPTH: usize = 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MeasureError {
    #[error("depth {depth} is shorter than the longest cylinder ({longest})")]
    DepthTooShallow { depth: usize, longest: usize },
    #[error("depth {depth} exceeds the enumeration limit of {MAX_ENUMERATION_DEPTH}")]
    DepthTooLarge { depth: usize },
}

/// How the cylinder of a finite prefix sits relative to an open set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Membership {
    /// Every extension of the prefix lies in the set.
    CertifiedIn,
    /// No extension of the prefix lies in the set.
    Impossible,
    /// Some extensions may and some may not.
    Undetermined,
}

/// A finite union of cylinders N_σ.
///
/// Cylinders are kept sorted by (length, content) and deduplicated. When
/// `is_minimized()` holds the collection is prefix-free and no two siblings
/// are both present.
#[derive(Clone, Debug, Default)]
pub struct OpenSet {
    cylinders: Vec<BitString>,
    minimized: bool,
}

// Equality is on the stored cylinder list; the minimized flag is a cache.
impl PartialEq for OpenSet {
    fn eq(&self, other: &Self) -> bool {
        self.cylinders == other.cylinders
    }
}

impl Eq for OpenSet {}

impl std::hash::Hash for OpenSet {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.cylinders.hash(state);
    }
}

impl OpenSet {
    pub fn new<I: IntoIterator<Item = BitString>>(cylinders: I) -> Self {
        let set: BTreeSet<BitString> = cylinders.into_iter().collect();
        Self {
            cylinders: set.into_iter().collect(),
            minimized: false,
        }
    }

    pub fn empty() -> Self {
        Self {
            cylinders: Vec::new(),
            minimized: true,
        }
    }

    /// Parse whitespace-separated bitstrings.
    pub fn parse_list(s: &str) -> Result<Self, super::FormatError> {
        s.split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<BitString>, _>>()
            .map(Self::new)
    }

    pub fn cylinders(&self) -> &[BitString] {
        &self.cylinders
    }

    pub fn len(&self) -> usize {
        self.cylinders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cylinders.is_empty()
    }

    pub fn is_minimized(&self) -> bool {
        self.minimized
    }

    /// Length of the longest cylinder (0 for the empty set).
    pub fn max_len(&self) -> usize {
        self.cylinders.iter().map(BitString::len).max().unwrap_or(0)
    }

    /// True when no cylinder is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        let all: HashSet<&[u8]> = self.cylinders.iter().map(BitString::as_slice).collect();
        self.cylinders.iter().all(|c| {
            let s = c.as_slice();
            (0..s.len()).all(|i| !all.contains(&s[..i]))
        })
    }

    /// The canonical prefix-free form covering the same subset of Cantor
    /// space: absorbed extensions are dropped, then sibling pairs
    /// N_{σ0} ∪ N_{σ1} are merged into N_σ until nothing changes.
    pub fn minimize(&self) -> OpenSet {
        if self.minimized {
            return self.clone();
        }

        // shortest first, so any absorbing prefix is seen before its extensions
        let mut kept: HashSet<&[u8]> = HashSet::new();
        let mut levels: BTreeMap<usize, BTreeSet<BitString>> = BTreeMap::new();
        for c in &self.cylinders {
            let s = c.as_slice();
            if (0..=s.len()).any(|i| kept.contains(&s[..i])) {
                continue;
            }
            kept.insert(s);
            levels.entry(c.len()).or_default().insert(c.clone());
        }

        let max = levels.keys().next_back().copied().unwrap_or(0);
        for len in (1..=max).rev() {
            let Some(level) = levels.remove(&len) else {
                continue;
            };
            let mut remaining = BTreeSet::new();
            let mut parents = Vec::new();
            for c in &level {
                let sibling = c.sibling().expect("nonempty");
                if level.contains(&sibling) {
                    // each pair is seen twice; emit the parent from the 0-child
                    if c.get(len - 1) == Some(false) {
                        parents.push(c.parent().expect("nonempty"));
                    }
                } else {
                    remaining.insert(c.clone());
                }
            }
            if !remaining.is_empty() {
                levels.insert(len, remaining);
            }
            if !parents.is_empty() {
                levels.entry(len - 1).or_default().extend(parents);
            }
        }

        OpenSet {
            cylinders: levels.into_values().flatten().collect(),
            minimized: true,
        }
    }

    /// Exact μ of the union.
    pub fn measure(&self) -> Dyadic {
        if self.minimized {
            self.cylinders.iter().map(BitString::cylinder_measure).sum()
        } else {
            self.minimize().measure()
        }
    }

    /// Classify N_prefix relative to the set, using the cylinders as stored.
    /// Minimize first for the strongest answer.
    pub fn contains(&self, prefix: &BitString) -> Membership {
        let mut compatible = false;
        for c in &self.cylinders {
            if c.is_prefix_of(prefix) {
                return Membership::CertifiedIn;
            }
            if prefix.is_prefix_of(c) {
                compatible = true;
            }
        }
        if compatible {
            Membership::Undetermined
        } else {
            Membership::Impossible
        }
    }

    /// Measure by exhaustive enumeration of all strings of length `depth`.
    /// Independent of [`OpenSet::measure`]; used to check it.
    pub fn brute_force_measure(&self, depth: usize) -> Result<Dyadic, MeasureError> {
        let longest = self.max_len();
        if depth < longest {
            return Err(MeasureError::DepthTooShallow { depth, longest });
        }
        if depth > MAX_ENUMERATION_DEPTH {
            return Err(MeasureError::DepthTooLarge { depth });
        }
        let cylinders: HashSet<(usize, u64)> = self
            .cylinders
            .iter()
            .map(|c| {
                let v = c.iter().fold(0u64, |acc, b| (acc << 1) | u64::from(b));
                (c.len(), v)
            })
            .collect();
        let lengths: BTreeSet<usize> = cylinders.iter().map(|&(l, _)| l).collect();
        let count = (0u64..1 << depth)
            .filter(|&x| {
                lengths
                    .iter()
                    .any(|&l| cylinders.contains(&(l, x >> (depth - l))))
            })
            .count();
        Ok(Dyadic::new(BigUint::from(count), depth as u64))
    }
}
