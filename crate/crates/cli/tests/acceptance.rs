//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs as a plain binary (`harness = false`). The process fails if any
//! criterion fails, except those listed in `DOCUMENTED_FAILURES`, which are
//! shown as FAIL but are known to be unattainable as stated (see README).

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use effrand::bounds::{
    cover_schedule, deviation_asymptotic, exact_binomial_tail, exact_excess_tail, hoeffding_fair, slln_tail_bound,
};
use effrand::generators::{gen_adversarial, gen_champernowne, gen_prng, AdversarialConfig, PredicateSuite, SplitMix64};
use effrand::measure::{BitString, OpenSet};
use effrand::rational::ratio;
use effrand::scan::{
    first_envelope_exceedance, lil_upper_scan_sums, normality_scan, slln_scan, slln_scan_sums, PrefixSums, Verdict,
};
use effrand::solovay::{build_slln_family, slln_deviation_measure, Convergence, FamilySet, TestFamily};
use effrand::{bounds::TailBound, Dyadic};

/// Criteria that fail for a documented mathematical reason.
const DOCUMENTED_FAILURES: &[&str] = &["7a"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> (Outcome, Duration) {
    let start = Instant::now();
    let mut o = f();
    let took = start.elapsed();
    if let Some(limit) = limit {
        if took > limit {
            o.pass = false;
            o.detail.push_str(&format!("; runtime {took:.1?} over {limit:?}"));
        }
    }
    (o, took)
}

// ---------------------------------------------------------------- 1

fn hoeffding_dominance() -> Outcome {
    let mut checked = 0;
    let mut violations = Vec::new();
    for n in 1..=20u32 {
        let mut hist = vec![0u64; n as usize + 1];
        for x in 0u64..1 << n {
            hist[x.count_ones() as usize] += 1;
        }
        for i in 1..=20u64 {
            // |S/n − 1/2| > i/40  ⇔  40·|2S − n| > 2·i·n
            let count: u64 = hist
                .iter()
                .enumerate()
                .filter(|&(s, _)| 40 * (2 * s as i64 - n as i64).unsigned_abs() > 2 * i * n as u64)
                .map(|(_, c)| c)
                .sum();
            let bound = hoeffding_fair(n as u64, i as f64 / 40.0).unwrap();
            checked += 1;
            if !Dyadic::new(count, n as u64).le_f64(bound.value) {
                violations.push((n, i));
            }
        }
    }
    outcome(violations.is_empty(), format!("{checked} (n, eps) pairs, violations {violations:?}"))
}

// ---------------------------------------------------------------- 2

fn measure_oracle() -> Outcome {
    let mut rng = SplitMix64::new(2024);
    let mut mismatches = 0;
    for _ in 0..1000 {
        let count = (rng.next_u64() % 9) as usize;
        let cylinders = (0..count).map(|_| {
            let len = (rng.next_u64() % 11) as usize;
            BitString::from_integer(rng.next_u64() & ((1u64 << len) - 1), len)
        });
        let set = OpenSet::new(cylinders.collect::<Vec<_>>());
        if set.measure() != set.brute_force_measure(10).unwrap() {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("1000 random sets, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- 3

fn effective_null_cover() -> Outcome {
    let mut bad = Vec::new();
    for m in [3u64, 4, 8] {
        let schedule = cover_schedule(m, 10).unwrap();
        for e in &schedule.entries {
            let b = slln_tail_bound(m, e.n).unwrap();
            if b.value > 0.5f64.powi(e.k as i32) {
                bad.push(format!("bound m={m} k={}", e.k));
            }
        }
    }
    let schedule = cover_schedule(4, 3).unwrap();
    let mut measures = Vec::new();
    for e in &schedule.entries {
        let depth = e.n as usize + 12;
        let mu = slln_deviation_measure(4, e.n, depth);
        let b = slln_tail_bound(4, e.n).unwrap();
        if !mu.le_f64(b.value) {
            bad.push(format!("measure m=4 k={}", e.k));
        }
        measures.push(format!("k={} mu={:.4} bound={:.4}", e.k, mu.to_f64(), b.value));
    }
    outcome(bad.is_empty(), format!("{}; violations {bad:?}", measures.join(", ")))
}

// ---------------------------------------------------------------- 4

fn maximal_inequality() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for n in 1..=16u32 {
        // doubled walk 2S_k − k; max over k = 1..n
        let mut max_hist = vec![0u64; 2 * n as usize + 1];
        for x in 0u64..1 << n {
            let (mut walk, mut best) = (0i64, i64::MIN);
            for k in 0..n {
                walk += if (x >> k) & 1 == 1 { 1 } else { -1 };
                best = best.max(walk);
            }
            max_hist[(best + n as i64) as usize] += 1;
        }
        for twice_x in 0..=n as i64 {
            let above: u64 = max_hist
                .iter()
                .enumerate()
                .filter(|&(i, _)| i as i64 - n as i64 > twice_x)
                .map(|(_, c)| c)
                .sum();
            let lhs = Dyadic::new(above, n as u64);
            let end = exact_excess_tail(n as u64, twice_x as f64 / 2.0).unwrap();
            let rhs = &end + &end;
            checked += 1;
            if lhs > rhs {
                bad.push((n, twice_x));
            }
        }
    }
    outcome(bad.is_empty(), format!("{checked} (n, x) pairs, violations {bad:?}"))
}

// ---------------------------------------------------------------- 5

fn deviation_asymptotic_check() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for x in [2.0, 3.0] {
        let exact = exact_binomial_tail(10_000, x).unwrap().to_f64();
        let approx = deviation_asymptotic(x).unwrap();
        let rel = (exact - approx).abs() / exact;
        ok &= rel <= 0.25;
        parts.push(format!("x={x}: exact={exact:.6} asymptotic={approx:.6} rel.diff={rel:.3}"));
    }
    outcome(ok, parts.join("; "))
}

// ---------------------------------------------------------------- 6

fn slln_separation() -> Outcome {
    let n4 = cover_schedule(8, 4).unwrap().n_k(4).unwrap();
    let passes = (0..100u64)
        .filter(|&seed| {
            let sums = PrefixSums::new(&gen_prng(seed, 1 << 16));
            slln_scan_sums(&sums, 8, n4).unwrap().verdict == Verdict::Pass
        })
        .count();

    let mut configs = 0;
    let mut problems = Vec::new();
    for suite in PredicateSuite::ALL {
        for stages in [8, 10, 12] {
            for (l, t) in [(4, 5), (8, 100), (12, 10_000)] {
                let config = AdversarialConfig {
                    suite,
                    stages,
                    extension_limit: l,
                    step_budget: t,
                };
                configs += 1;
                let (bits, trace) = gen_adversarial(&config).unwrap();
                let report = slln_scan(&bits, 8, 4).unwrap();
                if report.verdict != Verdict::Fail {
                    problems.push(format!("{suite}/{stages}/{l}/{t}: no violation"));
                }
                if !trace.density_invariant_holds() {
                    problems.push(format!("{suite}/{stages}/{l}/{t}: density"));
                }
                // each odd stage ending past n = 4 ends at a fresh violation index
                let mut last = 0;
                for r in trace.odd_records().filter(|r| r.len_after > 4) {
                    let fresh = report.violations.iter().any(|&v| v > last && v <= r.len_after);
                    if !fresh {
                        problems.push(format!("{suite}/{stages}/{l}/{t}: stage {}", r.stage));
                    }
                    last = r.len_after;
                }
            }
        }
    }
    outcome(
        passes >= 95 && problems.is_empty(),
        format!("prng passes {passes}/100 at N_4={n4}; adversarial {configs} configs, problems {problems:?}"),
    )
}

// ---------------------------------------------------------------- 7

fn champernowne_deviation(k: usize) -> f64 {
    let bits = gen_champernowne(1 << 17);
    let r = normality_scan(&bits, k, &ratio(1, 2)).unwrap();
    let target = 0.5f64.powi(k as i32);
    r.cells
        .iter()
        .map(|c| (c.frequency.unwrap() - target).abs())
        .fold(0.0, f64::max)
}

fn normality_k1() -> Outcome {
    let d = champernowne_deviation(1);
    outcome(
        d <= 0.02,
        format!(
            "max |freq − 1/2| = {d:.5} (tolerance 0.02); every binary numeral starts with 1, so a \
             2^17-bit prefix (numerals of ≤ 13 bits) carries a ones excess above 0.02"
        ),
    )
}

fn normality_k23() -> Outcome {
    let d2 = champernowne_deviation(2);
    let d3 = champernowne_deviation(3);
    outcome(d2 <= 0.05 && d3 <= 0.05, format!("max deviation k=2: {d2:.5}, k=3: {d3:.5} (tolerance 0.05)"))
}

fn normality_zeros() -> Outcome {
    let zeros = BitString::repeat(false, 1 << 17);
    let mut missed = Vec::new();
    for eps in [ratio(1, 100), ratio(1, 10), ratio(1, 4), ratio(49, 100), ratio(999, 2000)] {
        let r = normality_scan(&zeros, 1, &eps).unwrap();
        let one = r.cell(&"1".parse().unwrap(), 0).unwrap();
        if !one.flagged || r.verdict != Verdict::Fail {
            missed.push(eps.to_string());
        }
    }
    outcome(missed.is_empty(), format!("2^17 zeros, eps ∈ {{1/100, 1/10, 1/4, 49/100, 999/2000}}, missed {missed:?}"))
}

// ---------------------------------------------------------------- 8

fn lil_monte_carlo() -> (Outcome, Outcome) {
    let (two, n_min) = (ratio(2, 1), 1usize << 10);
    let mut crossed = 0;
    let mut exceeded = 0;
    for seed in 0..200u64 {
        let sums = PrefixSums::new(&gen_prng(seed, 1 << 20));
        let blocks = lil_upper_scan_sums(&sums, &two, &two).unwrap();
        if blocks
            .iter()
            .any(|b| b.n_r as usize >= n_min && b.upper_cross == Some(true))
        {
            crossed += 1;
        }
        if first_envelope_exceedance(&sums, 0.5, n_min).is_some() {
            exceeded += 1;
        }
    }
    (
        outcome(crossed <= 20, format!("λ=2 crossed in {crossed}/200 (limit 20)")),
        outcome(exceeded >= 140, format!("λ=0.5 exceeded in {exceeded}/200 (need 140)")),
    )
}

// ---------------------------------------------------------------- 9

fn run_cli(dir: &Path, args: &[String]) -> (i32, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_effrand"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    (out.status.code().unwrap_or(-1), out.stdout, out.stderr)
}

/// Files a command writes, so reruns can be compared byte for byte.
fn written_files(args: &[String]) -> Vec<String> {
    args.windows(2)
        .filter(|w| ["--out", "--json", "--trace"].contains(&w[0].as_str()))
        .map(|w| w[1].clone())
        .collect()
}

fn snapshot(dir: &Path, files: &[String]) -> Vec<Vec<u8>> {
    files.iter().map(|f| fs::read(dir.join(f)).unwrap_or_default()).collect()
}

fn echoed(stdout: &[u8], stderr: &[u8]) -> Option<Vec<String>> {
    let text = String::from_utf8_lossy(if stdout.starts_with(b"command: ") { stdout } else { stderr }).into_owned();
    let line = text.lines().find_map(|l| l.strip_prefix("command: "))?;
    Some(line.split_whitespace().skip(1).map(String::from).collect())
}

fn round_trip_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let commands: Vec<&str> = vec![
        "generate --kind prng --seed 11 --length 70000 --out p.bits --json g.json",
        "generate --kind biased --p 3/4 --seed 2 --length 5000 --out b.bits",
        "generate --kind champernowne --length 4096",
        "generate --kind adversarial --suite counter --stages 9 --out a.bits --trace a.trace",
        "analyze --input p.bits --json p.json",
        "analyze --input b.bits --tests slln,normality --k 3 --eps 1/10 --json b.json",
        "analyze --input a.bits --tests lil --lambda 2 --gamma 2",
        "bound hoeffding --n 100 --eps 0.1 --json h.json",
        "bound slln-tail --m 8 --N 223",
        "bound schedule --m 4 --kmax 6",
        "bound deviation --x 2.5",
        "bound maximal --n 5000 --x 40",
        "family build --m 4 --kmax 3 --depth 52 --out f.txt",
        "family check --family f.txt --json fc.json",
        "family membership --family f.txt --input a.bits --json fm.json",
    ];
    let mut problems = Vec::new();
    for cmd in &commands {
        let args: Vec<String> = cmd.split_whitespace().map(String::from).collect();
        let files = written_files(&args);
        let first = run_cli(d, &args);
        let first_files = snapshot(d, &files);
        let Some(echo) = echoed(&first.1, &first.2) else {
            problems.push(format!("{cmd}: no command echo"));
            continue;
        };
        if echo != args {
            problems.push(format!("{cmd}: echo differs"));
        }
        let again = run_cli(d, &echo);
        if again != first || snapshot(d, &files) != first_files {
            problems.push(format!("{cmd}: rerun differs"));
        }
    }

    // family files round-trip bit-exactly
    let mut families = vec![
        build_slln_family(4, 3, 52).unwrap(),
        build_slln_family(8, 6, 300).unwrap(),
        build_slln_family(2, 2, 10).unwrap(),
    ];
    let mut rng = SplitMix64::new(99);
    for f in 0..50 {
        let count = (rng.next_u64() % 6) as usize;
        let mut sets = Vec::new();
        let mut budgets = Vec::new();
        for _ in 0..count {
            let cylinders: Vec<BitString> = (0..rng.next_u64() % 5)
                .map(|_| {
                    let len = (rng.next_u64() % 9) as usize;
                    BitString::from_integer(rng.next_u64() & ((1u64 << len) - 1), len)
                })
                .collect();
            sets.push(FamilySet::Cylinders(OpenSet::new(cylinders)));
            budgets.push(TailBound::declared(f64::from_bits(rng.next_u64() >> 12 | 0x3FF0_0000_0000_0000) - 1.0));
        }
        let convergence = if f % 2 == 0 {
            Convergence::Divergent
        } else {
            Convergence::Convergent {
                total: rng.next_u64() as f64 / 3.0,
            }
        };
        families.push(TestFamily::new(format!("random {f}"), 8, sets, budgets, convergence, f % 3 == 0).unwrap());
    }
    let mut bad_round_trips = 0;
    for fam in &families {
        let text = fam.to_string();
        match text.parse::<TestFamily>() {
            Ok(back) if back == *fam && back.to_string() == text => {}
            _ => bad_round_trips += 1,
        }
    }
    let built = fs::read_to_string(d.join("f.txt")).unwrap_or_default();
    if built.parse::<TestFamily>().map(|f| f.to_string()).ok().as_deref() != Some(built.as_str()) {
        bad_round_trips += 1;
    }
    outcome(
        problems.is_empty() && bad_round_trips == 0,
        format!(
            "{} commands rerun from their echo, problems {problems:?}; {} family files, {bad_round_trips} bad round trips",
            commands.len(),
            families.len() + 1
        ),
    )
}

fn main() -> ExitCode {
    let minute = Some(Duration::from_secs(60));
    let mut results: Vec<(&str, &str, Outcome, Duration)> = Vec::new();
    let mut push = |id, name, (o, t): (Outcome, Duration)| results.push((id, name, o, t));

    push("1", "Hoeffding dominance", timed(minute, hoeffding_dominance));
    push("2", "measure-oracle equivalence", timed(minute, measure_oracle));
    push("3", "effective-null cover", timed(None, effective_null_cover));
    push("4", "maximal inequality constant", timed(None, maximal_inequality));
    push("5", "deviation asymptotic", timed(minute, deviation_asymptotic_check));
    push("6", "SLLN pass/fail separation", timed(None, slln_separation));
    push("7a", "normality k=1 within 0.02 (Champernowne 2^17)", timed(None, normality_k1));
    push("7b", "normality k=2,3 within 0.05 (Champernowne 2^17)", timed(None, normality_k23));
    push("7c", "all-zeros flagged for eps < 1/2", timed(None, normality_zeros));
    let start = Instant::now();
    let (a, b) = lil_monte_carlo();
    let took = start.elapsed();
    let within = took <= Duration::from_secs(300);
    let fix = |mut o: Outcome| {
        if !within {
            o.pass = false;
            o.detail.push_str(&format!("; runtime {took:.1?} over 5 min"));
        }
        o
    };
    push("8a", "LIL λ=2 upper envelope rarely crossed", (fix(a), took));
    push("8b", "LIL λ=0.5 envelope usually exceeded", (fix(b), took));
    push("9", "round-trip determinism", timed(None, round_trip_determinism));

    let mut unexpected = 0;
    for (id, name, o, t) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && DOCUMENTED_FAILURES.contains(id) {
            " [documented: unattainable as stated]"
        } else {
            ""
        };
        println!("{tag} criterion {id}: {name} — {} ({t:.2?}){note}", o.detail);
        if !o.pass && !DOCUMENTED_FAILURES.contains(id) {
            unexpected += 1;
        }
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria passed, {unexpected} unexpected failures", results.len());
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
