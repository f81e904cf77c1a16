//! Closed-form tail bounds for fair-coin sums.
//!
//! Every value that certifies an upper bound on a measure is rounded toward
//! +∞. Binomial tails are computed exactly as [`Dyadic`] values.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::measure::Dyadic;

/// Largest n for which [`maximal_tail_bound`] sums the binomial tail
/// exactly; above it the one-sided Hoeffding bound is used.
pub const MAXIMAL_EXACT_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite, got {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("m must be at least 1")]
    ZeroDeviationIndex,
    #[error("head count {s} exceeds sample count {n}")]
    CountOutOfRange { n: u64, s: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    HoeffdingFair,
    HoeffdingGeneral,
    SllnTail,
    MaximalExact,
    MaximalHoeffding,
    /// A budget supplied directly rather than derived.
    Declared,
}

impl Formula {
    pub fn id(self) -> &'static str {
        match self {
            Formula::HoeffdingFair => "hoeffding-fair",
            Formula::HoeffdingGeneral => "hoeffding-general",
            Formula::SllnTail => "slln-tail",
            Formula::MaximalExact => "maximal-exact",
            Formula::MaximalHoeffding => "maximal-hoeffding",
            Formula::Declared => "declared",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        [
            Formula::HoeffdingFair,
            Formula::HoeffdingGeneral,
            Formula::SllnTail,
            Formula::MaximalExact,
            Formula::MaximalHoeffding,
            Formula::Declared,
        ]
        .into_iter()
        .find(|f| f.id() == id)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// A certified upper bound on a measure, with the formula and inputs that
/// produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    pub formula: Formula,
    pub params: BTreeMap<String, f64>,
}

impl TailBound {
    pub fn new(value: f64, formula: Formula) -> Self {
        Self {
            value,
            formula,
            params: BTreeMap::new(),
        }
    }

    pub fn declared(value: f64) -> Self {
        Self::new(value, Formula::Declared)
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
}

impl fmt::Display for TailBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.formula)?;
        for (k, v) in &self.params {
            write!(f, " {k}={v:?}")?;
        }
        write!(f, " value={:?}", self.value)
    }
}

/// Nudge a float upward past any accumulated rounding of a few operations.
pub(crate) fn round_up(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    (x + x.abs() * 4.0 * f64::EPSILON).next_up()
}

pub(crate) fn round_down(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    (x - x.abs() * 4.0 * f64::EPSILON).next_down()
}

/// An upper bound on e^{-a} for a ≥ 0 computed in floating point.
fn exp_neg_upper(a: f64) -> f64 {
    round_up((-round_down(a)).exp())
}

fn check_positive(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if !value.is_finite() {
        return Err(BoundsError::NotFinite { name, value });
    }
    if value <= 0.0 {
        return Err(BoundsError::NonPositive { name, value });
    }
    Ok(())
}

/// μ(|S_n/n − 1/2| > ε) < 2·exp(−2nε²).
pub fn hoeffding_fair(n: u64, eps: f64) -> Result<TailBound, BoundsError> {
    if n == 0 {
        return Err(BoundsError::NoSamples);
    }
    check_positive("eps", eps)?;
    let value = round_up(2.0 * exp_neg_upper(2.0 * n as f64 * eps * eps));
    Ok(TailBound::new(value, Formula::HoeffdingFair)
        .with("n", n as f64)
        .with("eps", eps))
}

/// Hoeffding for i.i.d. variables confined to an interval of the given
/// width: 2·exp(−2nε²/width²). Width 1 is the fair-coin case.
pub fn hoeffding_general(n: u64, eps: f64, width: f64) -> Result<TailBound, BoundsError> {
    if n == 0 {
        return Err(BoundsError::NoSamples);
    }
    check_positive("eps", eps)?;
    check_positive("width", width)?;
    let value = round_up(2.0 * exp_neg_upper(2.0 * n as f64 * eps * eps / (width * width)));
    Ok(TailBound::new(value, Formula::HoeffdingGeneral)
        .with("n", n as f64)
        .with("eps", eps)
        .with("width", width))
}

/// Unclamped upper bound on μ(V_{m,N}), the set of sequences deviating by
/// more than 1/m somewhere past N: 2e^{−2N/m²}/(1 − e^{−2/m²}).
fn slln_tail_raw(m: u64, big_n: u64) -> f64 {
    let m2 = (m as f64) * (m as f64);
    let numerator = exp_neg_upper(2.0 * big_n as f64 / m2);
    let denominator = round_down(-(-round_down(2.0 / m2)).exp_m1());
    round_up(2.0 * numerator / denominator)
}

/// Bound on μ(V_{m,N}) summed from the fair-coin Hoeffding tails as a
/// geometric series. Reported clamped to 1; the raw value is kept under
/// the `raw` parameter.
pub fn slln_tail_bound(m: u64, big_n: u64) -> Result<TailBound, BoundsError> {
    if m == 0 {
        return Err(BoundsError::ZeroDeviationIndex);
    }
    let raw = slln_tail_raw(m, big_n);
    Ok(TailBound::new(raw.min(1.0), Formula::SllnTail)
        .with("m", m as f64)
        .with("N", big_n as f64)
        .with("raw", raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScheduleEntry {
    pub k: u32,
    #[serde(rename = "N")]
    pub n: u64,
}

/// Indices N_k making μ(V_{m,N_k}) ≤ 2^{-k}; the intersection of the
/// corresponding sets is an effectively null cover of SLLN failures at
/// deviation 1/m.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverSchedule {
    pub m: u64,
    pub entries: Vec<ScheduleEntry>,
}

impl CoverSchedule {
    pub fn n_k(&self, k: u32) -> Option<u64> {
        self.entries.iter().find(|e| e.k == k).map(|e| e.n)
    }

    pub fn last(&self) -> Option<u64> {
        self.entries.last().map(|e| e.n)
    }
}

/// For k in 0..=k_max, the least N whose (unclamped) tail bound is at most
/// 2^{-k}.
pub fn cover_schedule(m: u64, k_max: u32) -> Result<CoverSchedule, BoundsError> {
    if m == 0 {
        return Err(BoundsError::ZeroDeviationIndex);
    }
    let m2 = (m as f64) * (m as f64);
    let log_c = (2.0 / -(-2.0 / m2).exp_m1()).ln();
    let entries = (0..=k_max)
        .map(|k| {
            let target = 0.5f64.powi(k as i32);
            let estimate = (m2 / 2.0) * (log_c + k as f64 * std::f64::consts::LN_2);
            let mut n = (estimate.floor() as i64 - 2).max(0) as u64;
            while slln_tail_raw(m, n) > target {
                n += 1;
            }
            while n > 0 && slln_tail_raw(m, n - 1) <= target {
                n -= 1;
            }
            ScheduleEntry { k, n }
        })
        .collect();
    Ok(CoverSchedule { m, entries })
}

/// S_n* = (S_n − n/2)/√(n/4).
pub fn reduced_sum(n: u64, s: u64) -> Result<f64, BoundsError> {
    if n == 0 {
        return Err(BoundsError::NoSamples);
    }
    if s > n {
        return Err(BoundsError::CountOutOfRange { n, s });
    }
    Ok((s as f64 - n as f64 / 2.0) / (n as f64 / 4.0).sqrt())
}

/// First-order large-deviation asymptotic e^{−x²/2}/(√(2π)·x) for
/// μ(S_n* > x). Whether n is large enough relative to x is the caller's
/// concern.
pub fn deviation_asymptotic(x: f64) -> Result<f64, BoundsError> {
    check_positive("x", x)?;
    Ok((-0.5 * x * x).exp() / ((2.0 * PI).sqrt() * x))
}

/// Σ_{s=s_min}^{n} C(n, s).
pub fn binomial_upper_count(n: u64, s_min: u64) -> BigUint {
    if s_min > n {
        return BigUint::zero();
    }
    let mut c = BigUint::one();
    let mut total = BigUint::one();
    let mut s = n;
    while s > s_min {
        // C(n, s−1) = C(n, s)·s/(n − s + 1)
        c = c * BigUint::from(s) / BigUint::from(n - s + 1);
        total += &c;
        s -= 1;
    }
    total
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

/// Least s in 0..=n+1 with `pred(s)`, for a predicate monotone in s.
fn first_true(n: u64, pred: impl Fn(u64) -> bool) -> u64 {
    let (mut lo, mut hi) = (0u64, n + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// Exact μ(S_n* > x) as a dyadic rational.
pub fn exact_binomial_tail(n: u64, x: f64) -> Result<Dyadic, BoundsError> {
    if n == 0 {
        return Err(BoundsError::NoSamples);
    }
    if !x.is_finite() {
        return Err(BoundsError::NotFinite { name: "x", value: x });
    }
    // (2s − n)/√n > x, squared out so the comparison stays exact
    let xr = exact(x);
    let x2n = &xr * &xr * BigRational::from_integer(BigInt::from(n));
    let nonneg = !xr.is_negative();
    let qualifies = |s: u64| {
        let d = 2 * s as i64 - n as i64;
        let d2 = BigRational::from_integer(BigInt::from(d * d));
        if nonneg {
            d > 0 && d2 > x2n
        } else {
            d >= 0 || d2 < x2n
        }
    };
    let s_min = first_true(n, qualifies);
    Ok(Dyadic::new(binomial_upper_count(n, s_min), n))
}

/// Exact μ(S_n − n/2 ≥ x).
pub fn exact_excess_tail(n: u64, x: f64) -> Result<Dyadic, BoundsError> {
    if !x.is_finite() {
        return Err(BoundsError::NotFinite { name: "x", value: x });
    }
    // 2s ≥ n + 2x
    let threshold = BigRational::from_integer(BigInt::from(n)) + exact(x) * BigRational::from_integer(2.into());
    let s_min = if threshold.is_negative() {
        0
    } else {
        let half = threshold / BigRational::from_integer(2.into());
        u64::try_from(half.ceil().to_integer()).unwrap_or(u64::MAX)
    };
    Ok(Dyadic::new(binomial_upper_count(n, s_min), n))
}

/// Bound on μ(∃k ≤ n: S_k − k/2 > x) via the reflection principle:
/// 2·μ(S_n − n/2 ≥ x). Exact tail up to [`MAXIMAL_EXACT_LIMIT`], one-sided
/// Hoeffding e^{−2x²/n} beyond.
pub fn maximal_tail_bound(n: u64, x: f64) -> Result<TailBound, BoundsError> {
    if n == 0 {
        return Err(BoundsError::NoSamples);
    }
    if !x.is_finite() {
        return Err(BoundsError::NotFinite { name: "x", value: x });
    }
    let (tail, formula) = if x < 0.0 {
        (1.0, Formula::MaximalExact)
    } else if n <= MAXIMAL_EXACT_LIMIT {
        (exact_excess_tail(n, x)?.to_f64_upper(), Formula::MaximalExact)
    } else {
        (exp_neg_upper(2.0 * x * x / n as f64), Formula::MaximalHoeffding)
    };
    let value = round_up(2.0 * tail).min(1.0);
    Ok(TailBound::new(value, formula)
        .with("n", n as f64)
        .with("x", x))
}
