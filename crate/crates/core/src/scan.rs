//! Scanners that test a finite prefix against the strong law of large
//! numbers, normality at a fixed block length, and the law of the iterated
//! logarithm.
//!
//! SLLN and normality decisions are exact integer comparisons. LIL
//! thresholds involve √(ln ln n) and are evaluated in floating point.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::bounds::{self, round_up};
use crate::measure::BitString;
use crate::rational;

/// Longest block length accepted by [`normality_scan`].
pub const MAX_BLOCK_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScanError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("prefix of length {got} is shorter than the required {needed}")]
    PrefixTooShort { needed: usize, got: usize },
    #[error("block length {0} exceeds the limit of {MAX_BLOCK_LEN}")]
    BlockTooLong(usize),
}

fn invalid(msg: impl Into<String>) -> ScanError {
    ScanError::InvalidParameter(msg.into())
}

pub(crate) fn serialize_rational<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Running head counts: `at(n)` is S_n, the number of ones among the first
/// n bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixSums {
    sums: Vec<u64>,
}

impl PrefixSums {
    pub fn new(bits: &BitString) -> Self {
        let mut sums = Vec::with_capacity(bits.len() + 1);
        let mut s = 0u64;
        sums.push(0);
        for &b in bits.as_slice() {
            s += u64::from(b);
            sums.push(s);
        }
        Self { sums }
    }

    /// Number of bits summarized (n_max).
    pub fn len(&self) -> usize {
        self.sums.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn at(&self, n: usize) -> u64 {
        self.sums[n]
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.sums
    }

    /// 2·(S_n − n/2) = 2S_n − n.
    pub fn excess2(&self, n: usize) -> i64 {
        2 * self.sums[n] as i64 - n as i64
    }
}

pub fn prefix_sums(bits: &BitString) -> PrefixSums {
    PrefixSums::new(bits)
}

// ---------------------------------------------------------------- SLLN

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SllnReport {
    pub m: u64,
    #[serde(rename = "N")]
    pub after: u64,
    pub length: usize,
    /// Every n in (N, length] with |S_n/n − 1/2| > 1/m.
    pub violations: Vec<usize>,
    pub verdict: Verdict,
}

/// Lists every n past `after` where the running average deviates from 1/2
/// by more than 1/m.
pub fn slln_scan(bits: &BitString, m: u64, after: u64) -> Result<SllnReport, ScanError> {
    slln_scan_sums(&PrefixSums::new(bits), m, after)
}

pub fn slln_scan_sums(sums: &PrefixSums, m: u64, after: u64) -> Result<SllnReport, ScanError> {
    if m == 0 {
        return Err(invalid("m must be at least 1"));
    }
    let start = usize::try_from(after).unwrap_or(usize::MAX).saturating_add(1);
    // |S_n/n − 1/2| > 1/m  ⇔  |2S_n − n|·m > 2n
    let violations: Vec<usize> = (start..=sums.len())
        .filter(|&n| sums.excess2(n).unsigned_abs() as u128 * m as u128 > 2 * n as u128)
        .collect();
    Ok(SllnReport {
        m,
        after,
        length: sums.len(),
        verdict: Verdict::from_pass(violations.is_empty()),
        violations,
    })
}

// ----------------------------------------------------------- normality

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityCell {
    pub pattern: BitString,
    pub offset: usize,
    pub occurrences: u64,
    pub trials: u64,
    /// `None` when there were no trials at this offset.
    pub frequency: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub k: usize,
    #[serde(serialize_with = "serialize_rational")]
    pub eps: BigRational,
    pub length: usize,
    /// One cell per (offset, pattern), ordered by offset then pattern.
    pub cells: Vec<NormalityCell>,
    pub flagged: usize,
    /// Σ over cells of the Hoeffding bound 2·exp(−2·trials·ε²): an upper
    /// bound on the expected number of flagged cells for a fair coin.
    pub budget: f64,
    pub verdict: Verdict,
}

impl NormalityReport {
    pub fn cell(&self, pattern: &BitString, offset: usize) -> Option<&NormalityCell> {
        self.cells
            .iter()
            .find(|c| c.offset == offset && &c.pattern == pattern)
    }

    pub fn violations(&self) -> impl Iterator<Item = &NormalityCell> {
        self.cells.iter().filter(|c| c.flagged)
    }
}

/// Counts each length-k pattern at positions t, t+k, t+2k, … for every
/// offset t < k and flags frequencies further than ε from 2^{-k}.
///
/// The verdict fails when more cells are flagged than the Hoeffding
/// budget allows.
pub fn normality_scan(
    bits: &BitString,
    k: usize,
    eps: &BigRational,
) -> Result<NormalityReport, ScanError> {
    if k == 0 {
        return Err(invalid("block length must be at least 1"));
    }
    if k > MAX_BLOCK_LEN {
        return Err(ScanError::BlockTooLong(k));
    }
    if !rational::is_positive(eps) {
        return Err(invalid("eps must be positive"));
    }
    let n = bits.len();
    if n < k {
        return Err(ScanError::PrefixTooShort { needed: k, got: n });
    }
    let raw = bits.as_slice();
    let patterns = 1usize << k;
    let eps_f = rational::to_f64(eps);
    let (eps_num, eps_den) = (eps.numer().clone(), eps.denom().clone());

    let mut cells = Vec::with_capacity(k * patterns);
    let mut budget = 0.0;
    for offset in 0..k {
        let mut counts = vec![0u64; patterns];
        let mut i = offset;
        while i + k <= n {
            let v = raw[i..i + k]
                .iter()
                .fold(0usize, |acc, &b| (acc << 1) | b as usize);
            counts[v] += 1;
            i += k;
        }
        let trials = ((n - offset) / k) as u64;
        if trials > 0 {
            budget += patterns as f64 * bounds::hoeffding_fair(trials, eps_f).map_or(2.0, |b| b.value);
        }
        for (v, &occurrences) in counts.iter().enumerate() {
            // |occ/trials − 2^{-k}| > ε  ⇔  |occ·2^k − trials|·den > num·trials·2^k
            let flagged = trials > 0 && {
                let lhs = (BigInt::from(occurrences) * BigInt::from(patterns) - BigInt::from(trials))
                    .magnitude()
                    .clone();
                BigInt::from(lhs) * &eps_den > &eps_num * BigInt::from(trials) * BigInt::from(patterns)
            };
            cells.push(NormalityCell {
                pattern: BitString::from_integer(v as u64, k),
                offset,
                occurrences,
                trials,
                frequency: (trials > 0).then(|| occurrences as f64 / trials as f64),
                flagged,
            });
        }
    }
    let budget = round_up(budget);
    let flagged = cells.iter().filter(|c| c.flagged).count();
    Ok(NormalityReport {
        k,
        eps: eps.clone(),
        length: n,
        cells,
        flagged,
        budget,
        verdict: Verdict::from_pass(flagged as f64 <= budget),
    })
}

// ----------------------------------------------------------------- LIL

/// n/2 + λ·√((n/2)·ln ln n).
pub fn lil_envelope(n: u64, lambda: f64) -> Result<f64, ScanError> {
    if n < 3 {
        return Err(invalid("the envelope needs n ≥ 3 so that ln ln n > 0"));
    }
    Ok(n as f64 / 2.0 + lil_excess(n, lambda))
}

/// λ·√((n/2)·ln ln n), the allowed excess of S_n over n/2.
fn lil_excess(n: u64, lambda: f64) -> f64 {
    let nf = n as f64;
    lambda * ((nf / 2.0) * nf.ln().ln()).sqrt()
}

/// Which side of the mean a crossing scan looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// S_n − n/2
    Upper,
    /// −(S_n − n/2)
    Lower,
}

impl Tail {
    fn sign(self) -> i64 {
        match self {
            Tail::Upper => 1,
            Tail::Lower => -1,
        }
    }
}

/// Per-block record of a LIL scan.
///
/// The block covers indices (start, end]. Fields that a particular scan does
/// not compute are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockStats {
    pub r: u32,
    pub n_r: u64,
    pub start: u64,
    pub end: u64,
    pub s_at_nr: u64,
    /// S_{n_r} − S_{n_{r−1}} for the preceding block boundary.
    pub d_r: i64,
    pub upper_envelope: Option<f64>,
    pub lower_threshold: Option<f64>,
    pub upper_cross: Option<bool>,
    pub lower_event: Option<bool>,
    pub envelope_exceeded: Option<bool>,
}

/// n_r = integer nearest to γ^r (halves round up), r = 0, 1, …, with
/// repeated values dropped in favour of the first r. Generation stops at
/// the first n_r above `max_n`, which is included.
pub fn lil_block_sequence(gamma: &BigRational, max_n: u64) -> Result<Vec<(u32, u64)>, ScanError> {
    if gamma <= &BigRational::one() {
        return Err(invalid("gamma must exceed 1"));
    }
    let g = rational::to_f64(gamma);
    let mut out: Vec<(u32, u64)> = Vec::new();
    let mut r = 0u32;
    loop {
        let approx = g.powi(r as i32);
        let nearest = if (approx.fract() - 0.5).abs() < 1e-6 || approx > 2f64.powi(50) {
            exact_nearest_power(gamma, r)
        } else {
            (approx + 0.5).floor() as u64
        };
        if out.last().map_or(true, |&(_, last)| last != nearest) {
            out.push((r, nearest));
        }
        if nearest > max_n {
            return Ok(out);
        }
        r = r
            .checked_add(1)
            .ok_or_else(|| invalid("gamma too close to 1 for this prefix length"))?;
    }
}

fn exact_nearest_power(gamma: &BigRational, r: u32) -> u64 {
    let p: BigRational = Pow::pow(gamma, r);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (p + half).floor().to_integer().to_u64().unwrap_or(u64::MAX)
}

fn check_upper_params(lambda: &BigRational, gamma: &BigRational) -> Result<(), ScanError> {
    if lambda <= &BigRational::one() {
        return Err(invalid("lambda must exceed 1 for the upper envelope"));
    }
    if gamma <= &BigRational::one() || gamma > lambda {
        return Err(invalid("gamma must lie in (1, lambda]"));
    }
    Ok(())
}

/// Upper-envelope scan over blocks (n_r, n_{r+1}] with n_r nearest γ^r.
///
/// `upper_cross` is set when S_n − n/2 > λ√((n_r/2)·ln ln n_r) for some n in
/// the block. Only blocks that fit entirely in the prefix and have n_r ≥ 3
/// are reported.
pub fn lil_upper_scan(
    bits: &BitString,
    lambda: &BigRational,
    gamma: &BigRational,
) -> Result<Vec<BlockStats>, ScanError> {
    lil_upper_scan_sums(&PrefixSums::new(bits), lambda, gamma)
}

pub fn lil_upper_scan_sums(
    sums: &PrefixSums,
    lambda: &BigRational,
    gamma: &BigRational,
) -> Result<Vec<BlockStats>, ScanError> {
    check_upper_params(lambda, gamma)?;
    let lam = rational::to_f64(lambda);
    let blocks = lil_block_sequence(gamma, sums.len() as u64)?;
    let crossings = block_crossings(sums, lam, &blocks, Tail::Upper);
    let mut out = Vec::new();
    let mut prev_n = 0u64;
    for (w, cross) in blocks.windows(2).zip(crossings) {
        let ((r, n_r), (_, next)) = (w[0], w[1]);
        if next as usize <= sums.len() && n_r >= 3 {
            let s = sums.at(n_r as usize);
            out.push(BlockStats {
                r,
                n_r,
                start: n_r,
                end: next,
                s_at_nr: s,
                d_r: s as i64 - sums.at(prev_n as usize) as i64,
                upper_envelope: Some(lil_envelope(n_r, lam)?),
                lower_threshold: None,
                upper_cross: Some(cross),
                lower_event: None,
                envelope_exceeded: None,
            });
        }
        prev_n = n_r;
    }
    Ok(out)
}

/// For each consecutive pair of block boundaries, whether the chosen tail
/// of S_n − n/2 exceeds λ√((n_r/2)·ln ln n_r) somewhere in (n_r, n_{r+1}].
/// Pairs that do not fit the prefix or have n_r < 3 yield `false`.
pub fn block_crossings(sums: &PrefixSums, lambda: f64, blocks: &[(u32, u64)], tail: Tail) -> Vec<bool> {
    blocks
        .windows(2)
        .map(|w| {
            let (n_r, next) = (w[0].1, w[1].1);
            if n_r < 3 || next as usize > sums.len() {
                return false;
            }
            let twice = 2.0 * lil_excess(n_r, lambda);
            (n_r as usize + 1..=next as usize)
                .any(|n| (tail.sign() * sums.excess2(n)) as f64 > twice)
        })
        .collect()
}

/// The complement-tail crossing flags for blocks built from (λ, γ), in the
/// same order as [`lil_upper_scan`] reports them.
pub fn lil_lower_tail_crossings(
    bits: &BitString,
    lambda: &BigRational,
    gamma: &BigRational,
) -> Result<Vec<bool>, ScanError> {
    check_upper_params(lambda, gamma)?;
    let sums = PrefixSums::new(bits);
    let blocks = lil_block_sequence(gamma, sums.len() as u64)?;
    let flags = block_crossings(&sums, rational::to_f64(lambda), &blocks, Tail::Lower);
    Ok(blocks
        .windows(2)
        .zip(flags)
        .filter(|(w, _)| w[1].1 as usize <= sums.len() && w[0].1 >= 3)
        .map(|(_, f)| f)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilUpperReport {
    #[serde(serialize_with = "serialize_rational")]
    pub lambda: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub gamma: BigRational,
    pub blocks: Vec<BlockStats>,
    pub crossings: usize,
    /// Σ over blocks of the reflection bound on μ(block crossed): an upper
    /// bound on the expected crossing count for a fair coin.
    pub budget: f64,
    pub verdict: Verdict,
}

/// Upper scan plus a verdict: fail when more blocks are crossed than the
/// summed per-block measure bounds allow.
pub fn lil_upper_report(
    bits: &BitString,
    lambda: &BigRational,
    gamma: &BigRational,
) -> Result<LilUpperReport, ScanError> {
    let blocks = lil_upper_scan(bits, lambda, gamma)?;
    let lam = rational::to_f64(lambda);
    let mut budget = 0.0;
    for b in &blocks {
        let bound = bounds::maximal_tail_bound(b.end, lil_excess(b.n_r, lam))
            .map_err(|e| invalid(e.to_string()))?;
        budget += bound.value;
    }
    let budget = round_up(budget);
    let crossings = blocks.iter().filter(|b| b.upper_cross == Some(true)).count();
    Ok(LilUpperReport {
        lambda: lambda.clone(),
        gamma: gamma.clone(),
        crossings,
        budget,
        verdict: Verdict::from_pass(crossings as f64 <= budget),
        blocks,
    })
}

/// Parameters for the lower-envelope argument: λ < 1, an η > λ with
/// 1 − η < ((η − λ)/2)², and an integer γ with (γ − 1)/γ > η.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LilParams {
    #[serde(serialize_with = "serialize_rational")]
    pub lambda: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub eta: BigRational,
    pub gamma: u64,
}

impl LilParams {
    pub fn validate(&self) -> Result<(), ScanError> {
        let one = BigRational::one();
        let two = rational::from_u64(2);
        if self.lambda >= one {
            return Err(invalid("lambda must be below 1 for the lower envelope"));
        }
        if self.eta <= self.lambda {
            return Err(invalid("eta must exceed lambda"));
        }
        let half_gap = (&self.eta - &self.lambda) / &two;
        if &one - &self.eta >= &half_gap * &half_gap {
            return Err(invalid("eta must satisfy 1 − eta < ((eta − lambda)/2)²"));
        }
        if self.gamma < 2 {
            return Err(invalid("gamma must be an integer ≥ 2"));
        }
        let g = rational::from_u64(self.gamma);
        if (&g - &one) / &g <= self.eta {
            return Err(invalid("gamma must satisfy (gamma − 1)/gamma > eta"));
        }
        Ok(())
    }
}

/// Picks η = 1 − 2^{-j} for the least j that satisfies the η condition, and
/// the least integer γ with (γ − 1)/γ > η.
pub fn lil_lower_params(lambda: &BigRational) -> Result<LilParams, ScanError> {
    if !rational::is_positive(lambda) || lambda >= &BigRational::one() {
        return Err(invalid("lambda must lie in (0, 1)"));
    }
    let one = BigRational::one();
    let two = rational::from_u64(2);
    for j in 1..=62u32 {
        let gap = BigRational::new(BigInt::one(), BigInt::one() << j);
        let eta = &one - &gap;
        if &eta <= lambda {
            continue;
        }
        let half = (&eta - lambda) / &two;
        if gap < &half * &half {
            // (γ − 1)/γ > 1 − 2^{-j}  ⇔  γ > 2^j
            let params = LilParams {
                lambda: lambda.clone(),
                eta,
                gamma: (1u64 << j) + 1,
            };
            params.validate()?;
            return Ok(params);
        }
    }
    Err(invalid("lambda too close to 1: no grid eta below 2^-62"))
}

/// Lower-envelope scan over blocks (γ^{r−1}, γ^r].
///
/// `lower_event` records D_r − (n_r − n_{r−1})/2 > η√((n_r/2)·ln ln n_r) and
/// `envelope_exceeded` records S_{n_r} − n_r/2 > λ√((n_r/2)·ln ln n_r).
pub fn lil_lower_scan(bits: &BitString, params: &LilParams) -> Result<Vec<BlockStats>, ScanError> {
    lil_lower_scan_sums(&PrefixSums::new(bits), params)
}

pub fn lil_lower_scan_sums(sums: &PrefixSums, params: &LilParams) -> Result<Vec<BlockStats>, ScanError> {
    params.validate()?;
    let lam = rational::to_f64(&params.lambda);
    let eta = rational::to_f64(&params.eta);
    let len = sums.len() as u64;
    let mut out = Vec::new();
    let mut prev = 1u64;
    let mut r = 1u32;
    while let Some(n_r) = prev.checked_mul(params.gamma).filter(|&n| n <= len) {
        if n_r >= 3 {
            let s = sums.at(n_r as usize);
            let d_r = s as i64 - sums.at(prev as usize) as i64;
            let lower_threshold = lil_excess(n_r, eta);
            let width = (n_r - prev) as i64;
            out.push(BlockStats {
                r,
                n_r,
                start: prev,
                end: n_r,
                s_at_nr: s,
                d_r,
                upper_envelope: Some(lil_envelope(n_r, lam)?),
                lower_threshold: Some(lower_threshold),
                upper_cross: None,
                lower_event: Some((2 * d_r - width) as f64 > 2.0 * lower_threshold),
                envelope_exceeded: Some(sums.excess2(n_r as usize) as f64 > 2.0 * lil_excess(n_r, lam)),
            });
        }
        prev = n_r;
        r += 1;
    }
    Ok(out)
}

/// First n ≥ max(n_min, 3) with S_n above the λ-envelope.
pub fn first_envelope_exceedance(sums: &PrefixSums, lambda: f64, n_min: usize) -> Option<usize> {
    (n_min.max(3)..=sums.len()).find(|&n| sums.excess2(n) as f64 > 2.0 * lil_excess(n as u64, lambda))
}
