use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use effrand::bounds;
use effrand::generators::load_bits;
use effrand::rational::{self, parse_rational};
use effrand::scan::{self, PrefixSums, Verdict};
use num_rational::BigRational;
use serde_json::json;

use crate::report::Report;

/// Tables longer than this are summarized in the text report.
const MAX_TABLE_ROWS: usize = 64;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Test {
    Slln,
    Normality,
    Lil,
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Bitstream file to scan.
    #[arg(long)]
    input: PathBuf,
    /// Comma-separated subset of slln, normality, lil.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "slln,normality,lil")]
    tests: Vec<Test>,
    /// SLLN deviation 1/m.
    #[arg(long, default_value_t = 8)]
    m: u64,
    /// SLLN scan starts after index N; defaults to N_4 of the cover schedule for m.
    #[arg(long = "N")]
    after: Option<u64>,
    /// Normality block length.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value = "0.05", value_parser = crate::rational_arg)]
    eps: BigRational,
    /// Upper LIL envelope constant (> 1).
    #[arg(long, default_value = "1.5", value_parser = crate::rational_arg)]
    lambda: BigRational,
    /// Block growth ratio in (1, lambda]; defaults to min(2, lambda).
    #[arg(long, value_parser = crate::rational_arg)]
    gamma: Option<BigRational>,
    /// Lower LIL envelope constant in (0, 1); η and γ are derived from it.
    #[arg(long, default_value = "0.9", value_parser = crate::rational_arg)]
    lambda_lower: BigRational,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run(args: &AnalyzeArgs, echo: &str) -> Result<ExitCode> {
    let seq = load_bits(&args.input).context("--input")?;
    let sums = PrefixSums::new(&seq);
    let mut report = Report::new(echo);
    report.line(format!("input: {} ({} bits)", seq.provenance(), seq.len()));
    report.field("input", &json!({"provenance": seq.provenance(), "length": seq.len()}))?;

    let mut tests = args.tests.clone();
    tests.dedup();
    for test in tests {
        match test {
            Test::Slln => slln(args, &sums, &mut report)?,
            Test::Normality => normality(args, &seq, &mut report)?,
            Test::Lil => lil(args, &seq, &sums, &mut report)?,
        }
    }
    report.finish(args.json.as_deref(), false)
}

fn record(report: &mut Report, verdict: Verdict) {
    if !verdict.is_pass() {
        report.fail();
    }
}

fn slln(args: &AnalyzeArgs, sums: &PrefixSums, report: &mut Report) -> Result<()> {
    let after = match args.after {
        Some(n) => n,
        None => bounds::cover_schedule(args.m, 4)
            .context("--m")?
            .n_k(4)
            .expect("schedule has k = 4"),
    };
    let r = scan::slln_scan_sums(sums, args.m, after).context("--m")?;
    report.line(format!(
        "[slln] m={} N={} length={} violations={} verdict={}",
        r.m,
        r.after,
        r.length,
        r.violations.len(),
        r.verdict
    ));
    if !r.violations.is_empty() {
        let shown: Vec<String> = r.violations.iter().take(20).map(|n| n.to_string()).collect();
        let more = if r.violations.len() > 20 { " ..." } else { "" };
        report.line(format!("  violating n: {}{more}", shown.join(" ")));
    }
    record(report, r.verdict);
    report.field("slln", &r)
}

fn normality(args: &AnalyzeArgs, seq: &effrand::BitString, report: &mut Report) -> Result<()> {
    let r = scan::normality_scan(seq, args.k, &args.eps).context("--k/--eps")?;
    report.line(format!(
        "[normality] k={} eps={} length={} flagged={} budget={:?} verdict={}",
        r.k, r.eps, r.length, r.flagged, r.budget, r.verdict
    ));
    let rows: Vec<_> = if r.cells.len() <= MAX_TABLE_ROWS {
        r.cells.iter().collect()
    } else {
        r.violations().take(MAX_TABLE_ROWS).collect()
    };
    if !rows.is_empty() {
        report.line("  offset pattern occurrences trials frequency flagged");
        for c in rows {
            let freq = c.frequency.map_or("-".to_string(), |f| format!("{f:.6}"));
            report.line(format!(
                "  {} {} {} {} {} {}",
                c.offset, c.pattern, c.occurrences, c.trials, freq, c.flagged
            ));
        }
    }
    record(report, r.verdict);
    if r.cells.len() <= 4096 {
        report.field("normality", &r)
    } else {
        let flagged: Vec<_> = r.violations().collect();
        report.field(
            "normality",
            &json!({
                "k": r.k, "eps": r.eps.to_string(), "length": r.length,
                "flagged": r.flagged, "budget": r.budget, "verdict": r.verdict,
                "cells": flagged, "cells_truncated": true,
            }),
        )
    }
}

fn lil(args: &AnalyzeArgs, seq: &effrand::BitString, sums: &PrefixSums, report: &mut Report) -> Result<()> {
    let gamma = match &args.gamma {
        Some(g) => g.clone(),
        None => {
            let two = parse_rational("2").expect("literal");
            if args.lambda < two {
                args.lambda.clone()
            } else {
                two
            }
        }
    };
    let up = scan::lil_upper_report(seq, &args.lambda, &gamma).context("--lambda/--gamma")?;
    report.line(format!(
        "[lil-upper] lambda={} gamma={} blocks={} crossings={} budget={:?} verdict={}",
        up.lambda,
        up.gamma,
        up.blocks.len(),
        up.crossings,
        up.budget,
        up.verdict
    ));
    let crossed: Vec<String> = up
        .blocks
        .iter()
        .filter(|b| b.upper_cross == Some(true))
        .map(|b| format!("({},{}]", b.start, b.end))
        .collect();
    if !crossed.is_empty() {
        report.line(format!("  crossed blocks: {}", crossed.join(" ")));
    }
    record(report, up.verdict);
    report.field("lil_upper", &up)?;

    let params = scan::lil_lower_params(&args.lambda_lower).context("--lambda-lower")?;
    let blocks = scan::lil_lower_scan_sums(sums, &params)?;
    let lam = rational::to_f64(&params.lambda);
    let exceed = scan::first_envelope_exceedance(sums, lam, 3);
    report.line(format!(
        "[lil-lower] lambda={} eta={} gamma={} blocks={} events={} (advisory)",
        params.lambda,
        params.eta,
        params.gamma,
        blocks.len(),
        blocks.iter().filter(|b| b.lower_event == Some(true)).count()
    ));
    for b in &blocks {
        report.line(format!(
            "  r={} n_r={} d_r={} event={} exceeded={}",
            b.r,
            b.n_r,
            b.d_r,
            b.lower_event.unwrap_or(false),
            b.envelope_exceeded.unwrap_or(false)
        ));
    }
    report.line(format!(
        "  first n with S_n above the lambda-envelope: {}",
        exceed.map_or("none".to_string(), |n| n.to_string())
    ));
    report.field(
        "lil_lower",
        &json!({"params": params, "blocks": blocks, "first_exceedance": exceed}),
    )
}
