//! `effrand`: generate bit sequences, scan them against the SLLN,
//! normality and the LIL, compute certified tail bounds, and build and
//! check truncated Solovay test families.
//!
//! Exit codes: 0 pass, 2 usage or input error, 3 statistical failure or
//! budget violation.

mod analyze;
mod bound;
mod family;
mod generate;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_rational::BigRational;

use report::{command_echo, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "effrand", version, about = "Executable effective-randomness tests on bit sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a bit sequence and write it in bitstream format.
    Generate(generate::GenerateArgs),
    /// Run SLLN, normality and LIL scans on a bitstream file.
    Analyze(analyze::AnalyzeArgs),
    /// Print a certified tail bound or cover schedule.
    Bound(bound::BoundArgs),
    /// Build, check or test membership in a truncated Solovay family.
    Family(family::FamilyArgs),
}

pub(crate) fn rational_arg(s: &str) -> Result<BigRational, String> {
    effrand::rational::parse_rational(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let echo = command_echo(std::env::args());
    let result = match cli.command {
        Command::Generate(args) => generate::run(&args, &echo),
        Command::Analyze(args) => analyze::run(&args, &echo),
        Command::Bound(args) => bound::run(&args, &echo),
        Command::Family(args) => family::run(&args, &echo),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
