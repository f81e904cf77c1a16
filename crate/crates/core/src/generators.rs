//! Deterministic bit-sequence sources.
//!
//! Every generator is a pure function of its parameters. Pseudo-random bits
//! come from SplitMix64 (Steele, Lea & Flood 2014):
//!
//! ```text
//! state ← state + 0x9E3779B97F4A7C15
//! z ← state
//! z ← (z ⊕ (z >> 30)) · 0xBF58476D1CE4E5B9
//! z ← (z ⊕ (z >> 27)) · 0x94D049BB133111EB
//! output z ⊕ (z >> 31)
//! ```
//!
//! with all arithmetic mod 2^64. `gen_prng` emits each output's 64 bits most
//! significant first; `gen_biased` turns each output into one uniform value
//! on [0, 1) with 53 bits of resolution.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::measure::{BitSequence, BitString, FormatError};

#[derive(Debug, Error)]
pub enum GeneratorError {
    #[error("bias p must lie in [0, 1], got {0}")]
    BiasOutOfRange(BigRational),
    #[error("stages must be at least 1")]
    NoStages,
    #[error("unknown predicate suite {0:?}")]
    UnknownSuite(String),
    #[error("cannot read {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed bitstream in {}", path.display())]
    Format {
        path: PathBuf,
        #[source]
        source: FormatError,
    },
    #[error("the {0} generator needs a {1}")]
    MissingParameter(&'static str, &'static str),
    #[error("stage trace line {line}: {message}")]
    TraceParse { line: usize, message: String },
}

/// SplitMix64.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

pub fn gen_prng(seed: u64, length: usize) -> BitSequence {
    let mut rng = SplitMix64::new(seed);
    let mut bits = BitString::with_capacity(length);
    while bits.len() < length {
        let word = rng.next_u64();
        for i in (0..64).rev().take(length - bits.len()) {
            bits.push((word >> i) & 1 == 1);
        }
    }
    BitSequence::new(bits, format!("prng seed={seed}"))
}

/// Bit i is 1 iff the i-th uniform value u_i = (x_i >> 11)/2^53 is below p.
/// The comparison is exact: u < p ⇔ (x >> 11) < ⌈p·2^53⌉.
pub fn gen_biased(p: &BigRational, seed: u64, length: usize) -> Result<BitSequence, GeneratorError> {
    if p < &BigRational::zero() || p > &BigRational::from_integer(1.into()) {
        return Err(GeneratorError::BiasOutOfRange(p.clone()));
    }
    let scaled = p * BigRational::from_integer(BigInt::from(1u64 << 53));
    let threshold = scaled.ceil().to_integer().to_u64().expect("p ≤ 1");
    let mut rng = SplitMix64::new(seed);
    let bits = (0..length).map(|_| (rng.next_u64() >> 11) < threshold).collect();
    Ok(BitSequence::new(bits, format!("biased p={p} seed={seed}")))
}

/// Binary numerals of 1, 2, 3, … concatenated.
pub fn gen_champernowne(length: usize) -> BitSequence {
    let mut bits = BitString::with_capacity(length);
    let mut k = 1u64;
    while bits.len() < length {
        let width = 64 - k.leading_zeros() as usize;
        for i in (0..width).rev().take(length - bits.len()) {
            bits.push((k >> i) & 1 == 1);
        }
        k += 1;
    }
    BitSequence::new(bits, "champernowne")
}

// --------------------------------------------------- staged construction

/// Result of running a step-bounded predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Accept,
    Reject,
    OutOfSteps,
}

/// Built-in finite families of step-bounded predicates on candidate
/// extensions, standing in for the programs φ_n of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateSuite {
    /// Rejects everything.
    NeverAccepts,
    /// Accepts when the appended bits contain "00".
    Contains00,
    /// Predicate n accepts when the appended bits end in n+1 zeros.
    ZeroRuns,
    /// Predicate n is a counter machine spending n+1 steps per appended bit,
    /// counting up on 0 and down on 1, that accepts once the counter reaches
    /// n+1.
    Counter,
}

impl PredicateSuite {
    pub const ALL: [PredicateSuite; 4] = [
        PredicateSuite::NeverAccepts,
        PredicateSuite::Contains00,
        PredicateSuite::ZeroRuns,
        PredicateSuite::Counter,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PredicateSuite::NeverAccepts => "never-accepts",
            PredicateSuite::Contains00 => "contains-00",
            PredicateSuite::ZeroRuns => "zero-runs",
            PredicateSuite::Counter => "counter",
        }
    }

    /// Runs predicate `n` on the extension `ext` of the current string
    /// within `budget` steps. Reading one bit costs one step unless stated
    /// otherwise.
    pub fn run(self, n: usize, ext: &[u8], budget: u64) -> Outcome {
        let mut steps = 0u64;
        let mut tick = |cost: u64| {
            steps += cost;
            steps <= budget
        };
        match self {
            PredicateSuite::NeverAccepts => Outcome::Reject,
            PredicateSuite::Contains00 => {
                for (i, &b) in ext.iter().enumerate() {
                    if !tick(1) {
                        return Outcome::OutOfSteps;
                    }
                    if b == 0 && i > 0 && ext[i - 1] == 0 {
                        return Outcome::Accept;
                    }
                }
                Outcome::Reject
            }
            PredicateSuite::ZeroRuns => {
                let mut run = 0usize;
                for &b in ext {
                    if !tick(1) {
                        return Outcome::OutOfSteps;
                    }
                    run = if b == 0 { run + 1 } else { 0 };
                }
                if run >= n + 1 {
                    Outcome::Accept
                } else {
                    Outcome::Reject
                }
            }
            PredicateSuite::Counter => {
                let mut counter = 0i64;
                for &b in ext {
                    if !tick(n as u64 + 1) {
                        return Outcome::OutOfSteps;
                    }
                    counter += if b == 0 { 1 } else { -1 };
                    if counter > n as i64 {
                        return Outcome::Accept;
                    }
                }
                Outcome::Reject
            }
        }
    }
}

impl fmt::Display for PredicateSuite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PredicateSuite {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|p| p.id() == s)
            .ok_or_else(|| GeneratorError::UnknownSuite(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdversarialConfig {
    pub suite: PredicateSuite,
    /// Number of rounds; round n runs stage 2n then stage 2n+1.
    pub stages: usize,
    /// Most extra bits an even stage may try (L).
    pub extension_limit: usize,
    /// Step budget per predicate run (T).
    pub step_budget: u64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            suite: PredicateSuite::Contains00,
            stages: 8,
            extension_limit: 12,
            step_budget: 10_000,
        }
    }
}

/// Case 1 is "an extension was found" at even stages and "density repair
/// needed" at odd stages; case 2 is the alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    pub case: u8,
    pub len_before: usize,
    pub len_after: usize,
    pub ones_after: usize,
    /// Candidate extensions examined (even stages only).
    pub searched: u64,
}

impl StageRecord {
    /// Ones-density after the stage; `None` for the empty string.
    pub fn density(&self) -> Option<f64> {
        (self.len_after > 0).then(|| self.ones_after as f64 / self.len_after as f64)
    }

    /// 4·ones ≥ 3·len, i.e. density ≥ 3/4. False for the empty string.
    pub fn meets_three_quarters(&self) -> bool {
        self.len_after > 0 && 4 * self.ones_after >= 3 * self.len_after
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageTrace {
    pub config: AdversarialConfig,
    pub records: Vec<StageRecord>,
}

impl StageTrace {
    pub fn odd_records(&self) -> impl Iterator<Item = &StageRecord> {
        self.records.iter().filter(|r| r.stage % 2 == 1)
    }

    /// Density ≥ 3/4 after every odd stage.
    pub fn density_invariant_holds(&self) -> bool {
        self.odd_records().all(StageRecord::meets_three_quarters)
    }
}

/// The staged construction of a sequence that defeats the SLLN.
///
/// Even stage 2n searches extensions of σ with 1..=L extra bits in
/// length-lexicographic order for one that predicate n accepts within T
/// steps, adopting the first; otherwise σ is unchanged. Odd stage 2n+1
/// appends the shortest run of 1s bringing the ones-density to at least 3/4,
/// or a single 1 if it already is. The empty string counts as below 3/4.
pub fn gen_adversarial(config: &AdversarialConfig) -> Result<(BitSequence, StageTrace), GeneratorError> {
    if config.stages == 0 {
        return Err(GeneratorError::NoStages);
    }
    let mut sigma = BitString::new();
    let mut ones = 0usize;
    let mut records = Vec::with_capacity(2 * config.stages);
    for n in 0..config.stages {
        let before = sigma.len();
        let mut searched = 0u64;
        let mut found = None;
        'search: for extra in 1..=config.extension_limit.min(63) {
            for v in 0u64..1 << extra {
                searched += 1;
                let ext = BitString::from_integer(v, extra);
                if config.suite.run(n, ext.as_slice(), config.step_budget) == Outcome::Accept {
                    found = Some(ext);
                    break 'search;
                }
            }
        }
        let case = if let Some(ext) = &found {
            ones += ext.count_ones();
            sigma.extend_from(ext);
            1
        } else {
            2
        };
        records.push(StageRecord {
            stage: 2 * n,
            case,
            len_before: before,
            len_after: sigma.len(),
            ones_after: ones,
            searched,
        });

        let before = sigma.len();
        let deficit = (3 * before).saturating_sub(4 * ones);
        let (case, run) = if before == 0 {
            (1, 1)
        } else if deficit > 0 {
            (1, deficit)
        } else {
            (2, 1)
        };
        for _ in 0..run {
            sigma.push(true);
        }
        ones += run;
        records.push(StageRecord {
            stage: 2 * n + 1,
            case,
            len_before: before,
            len_after: sigma.len(),
            ones_after: ones,
            searched: 0,
        });
    }
    let provenance = format!(
        "adversarial suite={} stages={} L={} T={}",
        config.suite, config.stages, config.extension_limit, config.step_budget
    );
    Ok((
        BitSequence::new(sigma, provenance),
        StageTrace {
            config: *config,
            records,
        },
    ))
}

const TRACE_TAG: &str = "stage-trace v1";

impl fmt::Display for StageTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "format: {TRACE_TAG}")?;
        writeln!(f, "suite: {}", self.config.suite)?;
        writeln!(f, "stages: {}", self.config.stages)?;
        writeln!(f, "extension-limit: {}", self.config.extension_limit)?;
        writeln!(f, "step-budget: {}", self.config.step_budget)?;
        writeln!(f, "records: {}", self.records.len())?;
        for r in &self.records {
            writeln!(
                f,
                "stage: {} case={} before={} after={} ones={} searched={}",
                r.stage, r.case, r.len_before, r.len_after, r.ones_after, r.searched
            )?;
        }
        writeln!(f, "end")
    }
}

impl FromStr for StageTrace {
    type Err = GeneratorError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text.lines().enumerate();
        let mut line_no = 0usize;
        let mut expect = |want: &str| -> Result<(usize, String), GeneratorError> {
            let (i, l) = lines.next().ok_or(GeneratorError::TraceParse {
                line: line_no + 1,
                message: "unexpected end of input".into(),
            })?;
            line_no = i + 1;
            match l.split_once(':') {
                Some((k, v)) if k == want => Ok((line_no, v.strip_prefix(' ').unwrap_or(v).to_string())),
                _ if l == want => Ok((line_no, String::new())),
                _ => Err(GeneratorError::TraceParse {
                    line: line_no,
                    message: format!("expected key {want:?}"),
                }),
            }
        };
        fn num<T: FromStr>(line: usize, v: &str) -> Result<T, GeneratorError> {
            v.parse().map_err(|_| GeneratorError::TraceParse {
                line,
                message: format!("bad number {v:?}"),
            })
        }
        let (line, tag) = expect("format")?;
        if tag != TRACE_TAG {
            return Err(GeneratorError::TraceParse {
                line,
                message: format!("unsupported format {tag:?}"),
            });
        }
        let (_, suite) = expect("suite")?;
        let suite: PredicateSuite = suite.parse()?;
        let (line, v) = expect("stages")?;
        let stages = num(line, &v)?;
        let (line, v) = expect("extension-limit")?;
        let extension_limit = num(line, &v)?;
        let (line, v) = expect("step-budget")?;
        let step_budget = num(line, &v)?;
        let (line, v) = expect("records")?;
        let count: usize = num(line, &v)?;
        let mut records = Vec::with_capacity(count);
        for _ in 0..count {
            let (line, v) = expect("stage")?;
            let mut words = v.split_whitespace();
            let stage = num(line, words.next().unwrap_or(""))?;
            let mut field = |name: &str| -> Result<u64, GeneratorError> {
                let w = words.next().unwrap_or("");
                match w.split_once('=') {
                    Some((k, v)) if k == name => num(line, v),
                    _ => Err(GeneratorError::TraceParse {
                        line,
                        message: format!("expected {name}=…"),
                    }),
                }
            };
            records.push(StageRecord {
                stage,
                case: field("case")? as u8,
                len_before: field("before")? as usize,
                len_after: field("after")? as usize,
                ones_after: field("ones")? as usize,
                searched: field("searched")?,
            });
        }
        expect("end")?;
        Ok(StageTrace {
            config: AdversarialConfig {
                suite,
                stages,
                extension_limit,
                step_budget,
            },
            records,
        })
    }
}

// ----------------------------------------------------------- dispatch

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Prng,
    Biased,
    Champernowne,
    Adversarial,
    File,
}

/// Everything needed to reproduce a generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub bias_p: Option<BigRational>,
    pub length: usize,
    pub adversarial: AdversarialConfig,
    pub path: Option<PathBuf>,
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind) -> Self {
        Self {
            kind,
            seed: 0,
            bias_p: None,
            length: 0,
            adversarial: AdversarialConfig::default(),
            path: None,
        }
    }
}

/// Runs the configured generator. `length` does not apply to the
/// adversarial construction, whose length is set by its stages, nor to
/// files.
pub fn generate(config: &GeneratorConfig) -> Result<(BitSequence, Option<StageTrace>), GeneratorError> {
    Ok(match config.kind {
        GeneratorKind::Prng => (gen_prng(config.seed, config.length), None),
        GeneratorKind::Biased => {
            let p = config
                .bias_p
                .as_ref()
                .ok_or(GeneratorError::MissingParameter("biased", "bias p"))?;
            (gen_biased(p, config.seed, config.length)?, None)
        }
        GeneratorKind::Champernowne => (gen_champernowne(config.length), None),
        GeneratorKind::Adversarial => {
            let (bits, trace) = gen_adversarial(&config.adversarial)?;
            (bits, Some(trace))
        }
        GeneratorKind::File => {
            let path = config
                .path
                .as_ref()
                .ok_or(GeneratorError::MissingParameter("file", "path"))?;
            (load_bits(path)?, None)
        }
    })
}

pub fn load_bits(path: &Path) -> Result<BitSequence, GeneratorError> {
    let bytes = fs::read(path).map_err(|source| GeneratorError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let bits = BitString::parse_stream(&bytes).map_err(|source| GeneratorError::Format {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(BitSequence::new(bits, format!("file {}", path.display())))
}

pub fn write_bits(path: &Path, seq: &BitSequence) -> io::Result<()> {
    fs::write(path, seq.to_stream())
}
