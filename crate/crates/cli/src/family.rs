use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use effrand::generators::load_bits;
use effrand::solovay::{self, TestFamily};

use crate::report::Report;

#[derive(Args)]
pub struct FamilyArgs {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Write the SLLN cover family {V_{m,N_k} : k ≤ kmax}.
    Build {
        #[arg(long)]
        m: u64,
        #[arg(long)]
        kmax: u32,
        /// Truncation depth; must be at least N_kmax.
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Verify every index's exact truncated measure against its budget.
    Check {
        #[arg(long)]
        family: PathBuf,
        /// Enumeration depth; defaults to the family's truncation depth.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Report which sets a bitstream prefix certainly lies in.
    Membership {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn load_family(path: &Path) -> Result<TestFamily> {
    let text = fs::read_to_string(path).with_context(|| format!("--family: cannot read {}", path.display()))?;
    text.parse().with_context(|| format!("--family: {}", path.display()))
}

pub fn run(args: &FamilyArgs, echo: &str) -> Result<ExitCode> {
    let mut report = Report::new(echo);
    match &args.action {
        Action::Build { m, kmax, depth, out, json } => {
            let fam = solovay::build_slln_family(*m, *kmax, *depth).context("--m/--kmax/--depth")?;
            fs::write(out, fam.to_string()).with_context(|| format!("--out: cannot write {}", out.display()))?;
            report.line(format!("family: {} depth={} sets={}", fam.name(), fam.depth(), fam.len()));
            for (i, (set, b)) in fam.sets().iter().zip(fam.budgets()).enumerate() {
                if let solovay::FamilySet::SllnDeviation { m, after } = set {
                    report.line(format!("  index {i}: V(m={m}, N={after}) budget {:?}", b.value));
                }
            }
            report.line(format!("output: {}", out.display()));
            report.field("name", &fam.name())?;
            report.field("depth", &fam.depth())?;
            report.field("sets", &fam.len())?;
            report.finish(json.as_deref(), false)
        }
        Action::Check { family, depth, json } => {
            let fam = load_family(family)?;
            let r = solovay::family_budget_check(&fam, depth.unwrap_or(fam.depth())).context("--depth")?;
            report.line(format!("family: {} depth={} sets={}", r.name, r.depth, r.entries.len()));
            report.line("  index method measure budget partial_sum ok");
            for e in &r.entries {
                report.line(format!(
                    "  {} {} {} {:?} {:?} {}",
                    e.index, e.method, e.measure, e.budget, e.partial_sum, e.ok
                ));
            }
            match r.certified_total {
                Some(t) => report.line(format!("certified total: {t:?} (budgets within total: {})", r.total_ok)),
                None => report.line("certified total: none (declared divergent)"),
            }
            if !r.passed {
                report.fail();
                for i in &r.violations {
                    report.line(format!("budget violated at index {i}"));
                }
            }
            report.field("check", &r)?;
            report.finish(json.as_deref(), false)
        }
        Action::Membership { family, input, json } => {
            let fam = load_family(family)?;
            let seq = load_bits(input).context("--input")?;
            let profile = solovay::membership_profile(&seq, &fam);
            let verdict = solovay::borel_cantelli_verdict(&profile, &fam);
            let list = |v: &[usize]| {
                if v.is_empty() {
                    "none".to_string()
                } else {
                    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(" ")
                }
            };
            report.line(format!("family: {} depth={} sets={}", fam.name(), fam.depth(), fam.len()));
            report.line(format!("input: {} ({} bits)", seq.provenance(), seq.len()));
            report.line(format!("indices: {}", list(&profile.indices)));
            report.line(format!("undetermined: {}", list(&profile.undetermined)));
            let bound = verdict
                .expected_hits_bound
                .map_or("none".to_string(), |b| format!("{b:?}"));
            report.line(format!(
                "verdict: {} (hits={}, expected-hit bound={bound})",
                verdict.verdict, verdict.hits
            ));
            for w in &verdict.windows {
                let hit = w.first_hit.map_or("none".to_string(), |i| i.to_string());
                report.line(format!("  window from {}: first hit {hit}", w.start));
            }
            if verdict.verdict == solovay::BcVerdict::Suspicious {
                report.fail();
            }
            report.field("profile", &profile)?;
            report.field("verdict", &verdict)?;
            report.finish(json.as_deref(), false)
        }
    }
}
