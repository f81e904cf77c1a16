//! Truncated Solovay tests.
//!
//! A [`TestFamily`] is a finite list of open sets, each truncated at a common
//! depth, with a certified measure budget per index. The SLLN cover sets
//! V_{m,N} = {X : ∃n > N, |S_n/n − 1/2| > 1/m} are kept symbolically because
//! their explicit cylinder lists at useful N are astronomically long; their
//! exact truncated measure comes from a dynamic program over head counts.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::bounds::{self, round_up, Formula, TailBound};
use crate::measure::{BitString, Dyadic, MeasureError, Membership, OpenSet, MAX_ENUMERATION_DEPTH};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolovayError {
    #[error("m must be at least 1")]
    ZeroDeviationIndex,
    #[error("depth {depth} is below N_{k_max} = {needed}")]
    DepthBelowSchedule { depth: usize, k_max: u32, needed: u64 },
    #[error("check depth {check} is below the family truncation depth {family}")]
    CheckDepthTooShallow { check: usize, family: usize },
    #[error("set {index} has a cylinder of length {len}, longer than the truncation depth {depth}")]
    CylinderTooLong { index: usize, len: usize, depth: usize },
    #[error("{sets} sets but {budgets} budgets")]
    LengthMismatch { sets: usize, budgets: usize },
    #[error("set {0} is given by a rule; only explicit cylinder lists can be checked for independence")]
    NotExplicit(usize),
    #[error("family name must be a single line")]
    BadName,
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("family file line {line}: {message}")]
    Parse { line: usize, message: String },
}

// ------------------------------------------------------ SLLN cover sets

/// |S_n/n − 1/2| > 1/m, i.e. |2s − n|·m > 2n.
fn deviates(m: u64, n: u64, s: u64) -> bool {
    (2 * s as i128 - n as i128).unsigned_abs() * m as u128 > 2 * n as u128
}

/// Exact measure of the depth-`depth` truncation of V_{m,N}: the set of
/// sequences whose running average leaves [1/2 − 1/m, 1/2 + 1/m] at some
/// n ∈ (N, depth].
pub fn slln_deviation_measure(m: u64, after: u64, depth: usize) -> Dyadic {
    // alive[s]: strings of the current length with s ones and no violation yet
    let mut alive: Vec<BigUint> = vec![BigUint::one()];
    let mut hits = BigUint::zero();
    for n in 1..=depth as u64 {
        let mut next = vec![BigUint::zero(); alive.len() + 1];
        for (s, c) in alive.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            next[s] += c;
            next[s + 1] += c;
        }
        if n > after {
            for (s, c) in next.iter_mut().enumerate() {
                if !c.is_zero() && deviates(m, n, s as u64) {
                    // weight 2^{-n} expressed over the common denominator 2^depth
                    hits += std::mem::take(c) << (depth as u64 - n);
                }
            }
        }
        alive = next;
    }
    Dyadic::new(hits, depth as u64)
}

/// The cylinders of the depth-`depth` truncation of V_{m,N} under the
/// first-violation convention: τ is listed when |τ| ∈ (N, depth] is the
/// first index past N where τ deviates. The result is prefix-free.
pub fn slln_deviation_cylinders(m: u64, after: u64, depth: usize) -> Result<OpenSet, MeasureError> {
    if depth > MAX_ENUMERATION_DEPTH {
        return Err(MeasureError::DepthTooLarge { depth });
    }
    let mut out = Vec::new();
    let mut stack = vec![(BitString::new(), 0u64)];
    while let Some((tau, s)) = stack.pop() {
        let n = tau.len() as u64;
        if n > after && deviates(m, n, s) {
            out.push(tau);
            continue;
        }
        if tau.len() < depth {
            stack.push((tau.child(true), s + 1));
            stack.push((tau.child(false), s));
        }
    }
    Ok(OpenSet::new(out))
}

/// Classifies N_prefix against the depth-`depth` truncation of V_{m,N}.
pub fn slln_deviation_contains(m: u64, after: u64, depth: usize, prefix: &BitString) -> Membership {
    let len = prefix.len() as u64;
    let depth = depth as u64;
    let mut s = 0u64;
    for (i, b) in prefix.iter().enumerate() {
        let n = i as u64 + 1;
        if n > depth {
            break;
        }
        s += u64::from(b);
        if n > after && deviates(m, n, s) {
            return Membership::CertifiedIn;
        }
    }
    // some extension can still deviate at n if either extreme head count does
    let reachable = (len.max(after) + 1..=depth)
        .any(|n| deviates(m, n, s) || deviates(m, n, s + (n - len)));
    if reachable {
        Membership::Undetermined
    } else {
        Membership::Impossible
    }
}

// ------------------------------------------------------------- families

/// One index of a family, truncated at the family depth.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilySet {
    Cylinders(OpenSet),
    /// V_{m,N} under the first-violation convention.
    SllnDeviation { m: u64, after: u64 },
}

impl FamilySet {
    /// Exact measure of the truncation at `depth`.
    pub fn measure(&self, depth: usize) -> Dyadic {
        match self {
            FamilySet::Cylinders(set) => set.measure(),
            FamilySet::SllnDeviation { m, after } => slln_deviation_measure(*m, *after, depth),
        }
    }

    pub fn contains(&self, depth: usize, prefix: &BitString) -> Membership {
        match self {
            FamilySet::Cylinders(set) => set.contains(prefix),
            FamilySet::SllnDeviation { m, after } => slln_deviation_contains(*m, *after, depth, prefix),
        }
    }

    /// Explicit cylinders of the truncation at `depth`.
    pub fn materialize(&self, depth: usize) -> Result<OpenSet, MeasureError> {
        match self {
            FamilySet::Cylinders(set) => Ok(set.clone()),
            FamilySet::SllnDeviation { m, after } => slln_deviation_cylinders(*m, *after, depth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Convergence {
    /// Σ budgets ≤ total.
    Convergent { total: f64 },
    Divergent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestFamily {
    name: String,
    depth: usize,
    sets: Vec<FamilySet>,
    budgets: Vec<TailBound>,
    convergence: Convergence,
    independent: bool,
}

impl TestFamily {
    pub fn new(
        name: impl Into<String>,
        depth: usize,
        sets: Vec<FamilySet>,
        budgets: Vec<TailBound>,
        convergence: Convergence,
        independent: bool,
    ) -> Result<Self, SolovayError> {
        let name = name.into();
        if name.contains(['\n', '\r']) || name.trim() != name {
            return Err(SolovayError::BadName);
        }
        if sets.len() != budgets.len() {
            return Err(SolovayError::LengthMismatch {
                sets: sets.len(),
                budgets: budgets.len(),
            });
        }
        for (index, set) in sets.iter().enumerate() {
            if let FamilySet::Cylinders(c) = set {
                if c.max_len() > depth {
                    return Err(SolovayError::CylinderTooLong {
                        index,
                        len: c.max_len(),
                        depth,
                    });
                }
            }
        }
        Ok(Self {
            name,
            depth,
            sets,
            budgets,
            convergence,
            independent,
        })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        Self::new(name, 0, Vec::new(), Vec::new(), Convergence::Convergent { total: 0.0 }, false)
            .expect("empty family is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn sets(&self) -> &[FamilySet] {
        &self.sets
    }

    pub fn budgets(&self) -> &[TailBound] {
        &self.budgets
    }

    pub fn convergence(&self) -> Convergence {
        self.convergence
    }

    pub fn independent(&self) -> bool {
        self.independent
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// Exact truncated measure of set `index`.
    pub fn measure(&self, index: usize) -> Dyadic {
        self.sets[index].measure(self.depth)
    }
}

/// The family {V_{m,N_k} : k ≤ k_max} with N_k from the cover schedule and
/// budgets from the SLLN tail bound, truncated at `depth`.
pub fn build_slln_family(m: u64, k_max: u32, depth: usize) -> Result<TestFamily, SolovayError> {
    let schedule = bounds::cover_schedule(m, k_max).map_err(|_| SolovayError::ZeroDeviationIndex)?;
    let needed = schedule.last().unwrap_or(0);
    if (depth as u64) < needed {
        return Err(SolovayError::DepthBelowSchedule { depth, k_max, needed });
    }
    let mut sets = Vec::new();
    let mut budgets = Vec::new();
    for e in &schedule.entries {
        sets.push(FamilySet::SllnDeviation { m, after: e.n });
        budgets.push(bounds::slln_tail_bound(m, e.n).map_err(|_| SolovayError::ZeroDeviationIndex)?);
    }
    let total = certified_sum(&budgets);
    TestFamily::new(
        format!("slln m={m}"),
        depth,
        sets,
        budgets,
        Convergence::Convergent { total },
        false,
    )
}

// ----------------------------------------------------------- budget check

/// Σ budget values, rounded up after every addition.
pub fn certified_sum(budgets: &[TailBound]) -> f64 {
    budgets.iter().fold(0.0, |acc, b| round_up(acc + b.value))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetEntry {
    pub index: usize,
    pub measure: Dyadic,
    pub budget: f64,
    /// Running Σ of budgets through this index, rounded up.
    pub partial_sum: f64,
    /// How the measure was obtained: "brute-force", "exact" or "dp".
    pub method: &'static str,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub name: String,
    pub depth: usize,
    pub entries: Vec<BudgetEntry>,
    pub certified_total: Option<f64>,
    /// Indices whose measure exceeds the budget.
    pub violations: Vec<usize>,
    /// False when the budgets add up to more than the declared total.
    pub total_ok: bool,
    pub passed: bool,
}

/// Verifies μ(V_n) ≤ budget_n for every index, with exact measures compared
/// against the floating budget in the sound direction.
///
/// Explicit sets are measured by full enumeration when `depth` allows it.
pub fn family_budget_check(family: &TestFamily, depth: usize) -> Result<BudgetReport, SolovayError> {
    if depth < family.depth {
        return Err(SolovayError::CheckDepthTooShallow {
            check: depth,
            family: family.depth,
        });
    }
    let mut entries = Vec::with_capacity(family.len());
    let mut running = 0.0;
    for (index, (set, budget)) in family.sets.iter().zip(&family.budgets).enumerate() {
        let (measure, method) = match set {
            FamilySet::Cylinders(c) if depth <= MAX_ENUMERATION_DEPTH => (c.brute_force_measure(depth)?, "brute-force"),
            FamilySet::Cylinders(c) => (c.measure(), "exact"),
            FamilySet::SllnDeviation { .. } => (set.measure(family.depth), "dp"),
        };
        running = round_up(running + budget.value);
        entries.push(BudgetEntry {
            index,
            ok: measure.le_f64(budget.value),
            measure,
            budget: budget.value,
            partial_sum: running,
            method,
        });
    }
    let certified_total = match family.convergence {
        Convergence::Convergent { total } => Some(total),
        Convergence::Divergent => None,
    };
    let total_ok = certified_total.map_or(true, |t| running <= t || entries.is_empty());
    let violations: Vec<usize> = entries.iter().filter(|e| !e.ok).map(|e| e.index).collect();
    Ok(BudgetReport {
        name: family.name.clone(),
        depth,
        passed: violations.is_empty() && total_ok,
        entries,
        certified_total,
        violations,
        total_ok,
    })
}

// ------------------------------------------------------------ membership

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MembershipProfile {
    /// Indices whose truncated set certainly contains every extension.
    pub indices: Vec<usize>,
    /// Indices the truncation cannot decide for this prefix.
    pub undetermined: Vec<usize>,
}

pub fn membership_profile(bits: &BitString, family: &TestFamily) -> MembershipProfile {
    let mut profile = MembershipProfile::default();
    for (i, set) in family.sets.iter().enumerate() {
        match set.contains(family.depth, bits) {
            Membership::CertifiedIn => profile.indices.push(i),
            Membership::Undetermined => profile.undetermined.push(i),
            Membership::Impossible => {}
        }
    }
    profile
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcVerdict {
    /// Convergent budgets and no more hits than their certified total.
    ConsistentWithRandom,
    /// Convergent budgets but more hits than the certified total.
    Suspicious,
    /// Divergent independent family: every window start has a later hit.
    HitInEveryWindow,
    /// Divergent independent family: some window start has no observed hit
    /// at this truncation. Not evidence either way.
    NoHitAtTruncation,
    /// Divergent family not declared independent.
    Inconclusive,
}

impl fmt::Display for BcVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BcVerdict::ConsistentWithRandom => "consistent-with-random",
            BcVerdict::Suspicious => "suspicious",
            BcVerdict::HitInEveryWindow => "hit-in-every-window",
            BcVerdict::NoHitAtTruncation => "no-hit-at-truncation",
            BcVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WindowHit {
    pub start: usize,
    pub first_hit: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorelCantelliReport {
    pub verdict: BcVerdict,
    pub hits: usize,
    /// Σ budgets: bounds the expected number of hits for a random sequence.
    pub expected_hits_bound: Option<f64>,
    /// For divergent independent families, the first hit at or after each
    /// index.
    pub windows: Vec<WindowHit>,
}

/// Interprets a profile under the first (convergent) or second (divergent,
/// independent) half of Solovay's lemma.
pub fn borel_cantelli_verdict(profile: &MembershipProfile, family: &TestFamily) -> BorelCantelliReport {
    let hits = profile.indices.len();
    match family.convergence {
        Convergence::Convergent { total } => BorelCantelliReport {
            verdict: if hits as f64 <= total {
                BcVerdict::ConsistentWithRandom
            } else {
                BcVerdict::Suspicious
            },
            hits,
            expected_hits_bound: Some(total),
            windows: Vec::new(),
        },
        Convergence::Divergent if family.independent => {
            let windows: Vec<WindowHit> = (0..family.len())
                .map(|start| WindowHit {
                    start,
                    first_hit: profile.indices.iter().copied().find(|&i| i >= start),
                })
                .collect();
            let all = windows.iter().all(|w| w.first_hit.is_some());
            BorelCantelliReport {
                verdict: if all {
                    BcVerdict::HitInEveryWindow
                } else {
                    BcVerdict::NoHitAtTruncation
                },
                hits,
                expected_hits_bound: None,
                windows,
            }
        }
        Convergence::Divergent => BorelCantelliReport {
            verdict: BcVerdict::Inconclusive,
            hits,
            expected_hits_bound: None,
            windows: Vec::new(),
        },
    }
}

// ---------------------------------------------------------- independence

/// Largest depth [`independence_check`] enumerates.
pub const MAX_INDEPENDENCE_DEPTH: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndependenceReport {
    /// Coordinates each set's membership depends on.
    pub supports: Vec<Vec<usize>>,
    /// Pairwise disjoint supports, which implies mutual independence.
    pub disjoint: bool,
}

/// Finds which coordinates each explicit set depends on by flipping bits of
/// every string of length `depth`, and reports whether the supports are
/// pairwise disjoint.
pub fn independence_check(family: &TestFamily, depth: usize) -> Result<IndependenceReport, SolovayError> {
    if depth < family.depth {
        return Err(SolovayError::CheckDepthTooShallow {
            check: depth,
            family: family.depth,
        });
    }
    if depth > MAX_INDEPENDENCE_DEPTH {
        return Err(MeasureError::DepthTooLarge { depth }.into());
    }
    let mut supports = Vec::with_capacity(family.len());
    for (index, set) in family.sets.iter().enumerate() {
        let FamilySet::Cylinders(c) = set else {
            return Err(SolovayError::NotExplicit(index));
        };
        let member: Vec<bool> = (0u64..1 << depth)
            .map(|x| c.contains(&BitString::from_integer(x, depth)) == Membership::CertifiedIn)
            .collect();
        let support: Vec<usize> = (0..depth)
            .filter(|&i| {
                let mask = 1u64 << (depth - 1 - i);
                (0u64..1 << depth).any(|x| member[x as usize] != member[(x ^ mask) as usize])
            })
            .collect();
        supports.push(support);
    }
    let mut seen = vec![false; depth];
    let mut disjoint = true;
    for s in &supports {
        for &i in s {
            disjoint &= !std::mem::replace(&mut seen[i], true);
        }
    }
    Ok(IndependenceReport { supports, disjoint })
}

// --------------------------------------------------------- text format

const FORMAT_TAG: &str = "solovay-family v1";
/// Stands for the empty cylinder (the whole space) in a cylinder list.
const EMPTY_TOKEN: &str = "-";

fn parse_cylinders(list: &str) -> Result<OpenSet, String> {
    list.split_whitespace()
        .map(|w| if w == EMPTY_TOKEN { Ok(BitString::new()) } else { w.parse() })
        .collect::<Result<Vec<_>, _>>()
        .map(OpenSet::new)
        .map_err(|e| e.to_string())
}

fn write_bound(f: &mut fmt::Formatter<'_>, b: &TailBound) -> fmt::Result {
    writeln!(f, "budget: {b}")
}

impl fmt::Display for TestFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format: {FORMAT_TAG}")?;
        writeln!(f, "name: {}", self.name)?;
        writeln!(f, "depth: {}", self.depth)?;
        writeln!(f, "independent: {}", self.independent)?;
        match self.convergence {
            Convergence::Convergent { total } => writeln!(f, "convergence: convergent {total:?}")?,
            Convergence::Divergent => writeln!(f, "convergence: divergent")?,
        }
        writeln!(f, "sets: {}", self.sets.len())?;
        for (i, (set, budget)) in self.sets.iter().zip(&self.budgets).enumerate() {
            writeln!(f, "index: {i}")?;
            match set {
                FamilySet::Cylinders(c) => {
                    write!(f, "cylinders:")?;
                    for cyl in c.cylinders() {
                        if cyl.is_empty() {
                            write!(f, " {EMPTY_TOKEN}")?;
                        } else {
                            write!(f, " {cyl}")?;
                        }
                    }
                    writeln!(f)?;
                }
                FamilySet::SllnDeviation { m, after } => {
                    writeln!(f, "rule: slln-deviation m={m} N={after}")?;
                }
            }
            write_bound(f, budget)?;
        }
        writeln!(f, "end")
    }
}

fn parse_bound(s: &str) -> Result<TailBound, String> {
    let mut words = s.split_whitespace();
    let id = words.next().ok_or("empty budget")?;
    let formula = Formula::from_id(id).ok_or_else(|| format!("unknown formula {id:?}"))?;
    let mut bound = TailBound::new(f64::NAN, formula);
    let mut value = None;
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| format!("expected key=value, got {w:?}"))?;
        let v: f64 = v.parse().map_err(|_| format!("bad number {v:?}"))?;
        if k == "value" {
            value = Some(v);
        } else {
            bound = bound.with(k, v);
        }
    }
    bound.value = value.ok_or("budget has no value")?;
    Ok(bound)
}

fn parse_rule(s: &str) -> Result<FamilySet, String> {
    let mut words = s.split_whitespace();
    if words.next() != Some("slln-deviation") {
        return Err(format!("unknown rule {s:?}"));
    }
    let (mut m, mut after) = (None, None);
    for w in words {
        match w.split_once('=') {
            Some(("m", v)) => m = v.parse().ok(),
            Some(("N", v)) => after = v.parse().ok(),
            _ => return Err(format!("unexpected rule argument {w:?}")),
        }
    }
    match (m, after) {
        (Some(m), Some(after)) if m > 0 => Ok(FamilySet::SllnDeviation { m, after }),
        _ => Err("rule needs m ≥ 1 and N".into()),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, message: impl Into<String>) -> SolovayError {
        SolovayError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    /// The next `key: value` line as (key, value).
    fn entry(&mut self) -> Result<(&'a str, &'a str), SolovayError> {
        let (i, l) = self.inner.next().ok_or_else(|| SolovayError::Parse {
            line: self.line + 1,
            message: "unexpected end of input".into(),
        })?;
        self.line = i + 1;
        let (key, value) = l.split_once(':').unwrap_or((l, ""));
        Ok((key, value.strip_prefix(' ').unwrap_or(value)))
    }

    fn expect(&mut self, want: &str) -> Result<&'a str, SolovayError> {
        let (key, value) = self.entry()?;
        if key != want {
            return Err(self.err(format!("expected key {want:?}, found {key:?}")));
        }
        Ok(value)
    }

    fn number<T: FromStr>(&mut self, want: &str) -> Result<T, SolovayError> {
        let v = self.expect(want)?;
        v.parse().map_err(|_| self.err(format!("bad {want} {v:?}")))
    }
}

impl FromStr for TestFamily {
    type Err = SolovayError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            line: 0,
        };
        let tag = lines.expect("format")?;
        if tag != FORMAT_TAG {
            return Err(lines.err(format!("unsupported format {tag:?}")));
        }
        let name = lines.expect("name")?;
        let depth: usize = lines.number("depth")?;
        let independent: bool = lines.number("independent")?;
        let conv = lines.expect("convergence")?;
        let convergence = match conv.split_once(' ') {
            None if conv == "divergent" => Convergence::Divergent,
            Some(("convergent", total)) => Convergence::Convergent {
                total: total.parse().map_err(|_| lines.err("bad total"))?,
            },
            _ => return Err(lines.err(format!("bad convergence {conv:?}"))),
        };
        let count: usize = lines.number("sets")?;
        let mut sets = Vec::new();
        let mut budgets = Vec::new();
        for i in 0..count {
            if lines.number::<usize>("index")? != i {
                return Err(lines.err(format!("expected index {i}")));
            }
            let set = match lines.entry()? {
                ("cylinders", list) => {
                    FamilySet::Cylinders(parse_cylinders(list).map_err(|m| lines.err(m))?)
                }
                ("rule", rule) => parse_rule(rule).map_err(|m| lines.err(m))?,
                (key, _) => return Err(lines.err(format!("expected cylinders or rule, found {key:?}"))),
            };
            sets.push(set);
            let b = lines.expect("budget")?;
            budgets.push(parse_bound(b).map_err(|m| lines.err(m))?);
        }
        lines.expect("end")?;
        if lines.inner.any(|(_, l)| !l.trim().is_empty()) {
            return Err(lines.err("trailing content after end"));
        }
        TestFamily::new(name, depth, sets, budgets, convergence, independent)
    }
}
