use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use effrand::generators::{self, AdversarialConfig, PredicateSuite};
use num_rational::BigRational;

use crate::report::Report;

#[derive(Clone, Copy, ValueEnum)]
pub enum Kind {
    Prng,
    Biased,
    Champernowne,
    Adversarial,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Number of bits (ignored by the adversarial construction).
    #[arg(long, default_value_t = 0)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability of a 1 for --kind biased, e.g. 3/4 or 0.75.
    #[arg(long, value_parser = crate::rational_arg)]
    p: Option<BigRational>,
    /// Rounds of the adversarial construction (each is an even and an odd stage).
    #[arg(long, default_value_t = 8)]
    stages: usize,
    /// Most extra bits an even stage searches (L).
    #[arg(long, default_value_t = 12)]
    extension_limit: usize,
    /// Steps allowed per predicate run (T).
    #[arg(long, default_value_t = 10_000)]
    step_budget: u64,
    /// never-accepts, contains-00, zero-runs or counter.
    #[arg(long, default_value = "contains-00", value_parser = parse_suite)]
    suite: PredicateSuite,
    /// Bitstream output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the stage trace of --kind adversarial.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<PredicateSuite, String> {
    s.parse().map_err(|e: generators::GeneratorError| e.to_string())
}

pub fn run(args: &GenerateArgs, echo: &str) -> Result<ExitCode> {
    let (seq, trace) = match args.kind {
        Kind::Prng => (generators::gen_prng(args.seed, args.length), None),
        Kind::Biased => {
            let Some(p) = &args.p else {
                bail!("--p is required for --kind biased");
            };
            let seq = generators::gen_biased(p, args.seed, args.length).context("--p")?;
            (seq, None)
        }
        Kind::Champernowne => (generators::gen_champernowne(args.length), None),
        Kind::Adversarial => {
            if args.stages == 0 {
                bail!("--stages must be at least 1");
            }
            let config = AdversarialConfig {
                suite: args.suite,
                stages: args.stages,
                extension_limit: args.extension_limit,
                step_budget: args.step_budget,
            };
            let (seq, trace) = generators::gen_adversarial(&config)?;
            (seq, Some(trace))
        }
    };
    if args.trace.is_some() && trace.is_none() {
        bail!("--trace only applies to --kind adversarial");
    }

    let mut report = Report::new(echo);
    report.line(format!("provenance: {}", seq.provenance()));
    report.line(format!("length: {}", seq.len()));
    report.line(format!("ones: {}", seq.count_ones()));
    report.field("provenance", &seq.provenance())?;
    report.field("length", &seq.len())?;
    report.field("ones", &seq.count_ones())?;
    if let Some(trace) = &trace {
        report.line(format!(
            "trace: {} stages, density >= 3/4 after every odd stage: {}",
            trace.records.len(),
            trace.density_invariant_holds()
        ));
        report.field("trace", trace)?;
        if let Some(path) = &args.trace {
            fs::write(path, trace.to_string())
                .with_context(|| format!("--trace: cannot write {}", path.display()))?;
            report.line(format!("trace file: {}", path.display()));
        }
    }

    match &args.out {
        Some(path) => {
            generators::write_bits(path, &seq).with_context(|| format!("--out: cannot write {}", path.display()))?;
            report.line(format!("output: {}", path.display()));
            report.finish(args.json.as_deref(), false)
        }
        None => {
            std::io::stdout().write_all(seq.to_stream().as_bytes())?;
            report.finish(args.json.as_deref(), true)
        }
    }
}
