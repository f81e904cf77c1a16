use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use effrand::bounds::{self, TailBound};

use crate::report::Report;

#[derive(Clone, Copy, ValueEnum)]
pub enum Name {
    /// 2·exp(−2nε²), or the general-range form with --width.
    Hoeffding,
    /// Σ_{K≥N} 2·exp(−2K/m²) in closed form.
    SllnTail,
    /// Least N_k with slln-tail(m, N_k) ≤ 2^{-k} for k ≤ kmax.
    Schedule,
    /// The normal tail approximation (1/√(2π))·exp(−x²/2)/x.
    Deviation,
    /// Reflection bound on μ(max_k (S_k − k/2) > x).
    Maximal,
}

#[derive(Args)]
pub struct BoundArgs {
    #[arg(value_enum)]
    name: Name,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Range b − a of the summands (general Hoeffding).
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    m: Option<u64>,
    #[arg(long = "N")]
    big_n: Option<u64>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T> {
    v.with_context(|| format!("{flag} is required"))
}

fn certificate(report: &mut Report, b: &TailBound) -> Result<()> {
    report.line(format!("certificate: {b}"));
    report.field("certificate", b)
}

pub fn run(args: &BoundArgs, echo: &str) -> Result<ExitCode> {
    let mut report = Report::new(echo);
    match args.name {
        Name::Hoeffding => {
            let n = need(args.n, "--n")?;
            let eps = need(args.eps, "--eps")?;
            let b = match args.width {
                Some(w) => bounds::hoeffding_general(n, eps, w),
                None => bounds::hoeffding_fair(n, eps),
            }
            .context("--n/--eps/--width")?;
            certificate(&mut report, &b)?;
        }
        Name::SllnTail => {
            let b = bounds::slln_tail_bound(need(args.m, "--m")?, need(args.big_n, "--N")?).context("--m")?;
            certificate(&mut report, &b)?;
        }
        Name::Schedule => {
            let s = bounds::cover_schedule(need(args.m, "--m")?, need(args.kmax, "--kmax")?).context("--m")?;
            report.line(format!("schedule: m={}", s.m));
            for e in &s.entries {
                report.line(format!("  k={} N={}", e.k, e.n));
            }
            report.field("schedule", &s)?;
        }
        Name::Deviation => {
            let x = need(args.x, "--x")?;
            let v = bounds::deviation_asymptotic(x).context("--x")?;
            report.line(format!("value: {v:?}"));
            report.field("deviation", &serde_json::json!({"x": x, "value": v}))?;
        }
        Name::Maximal => {
            let b = bounds::maximal_tail_bound(need(args.n, "--n")?, need(args.x, "--x")?).context("--n/--x")?;
            certificate(&mut report, &b)?;
        }
    }
    report.finish(args.json.as_deref(), false)
}
