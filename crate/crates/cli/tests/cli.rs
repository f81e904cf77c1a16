//! End-to-end runs of the `effrand` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn effrand(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_effrand"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn generate_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrand(dir.path(), &["generate", "--kind", "champernowne", "--length", "16", "--out", "c.bits"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(dir.path().join("c.bits")).unwrap(), "1101110010111011\n");
    assert!(stdout(&out).contains("provenance: champernowne"));

    let out = effrand(dir.path(), &["generate", "--kind", "biased", "--p", "1", "--length", "4"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "1111\n");

    let out = effrand(dir.path(), &["generate", "--kind", "prng", "--length", "0", "--out", "e.bits"]);
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(dir.path().join("e.bits")).unwrap(), b"");
}

#[test]
fn generate_errors_name_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrand(dir.path(), &["generate", "--kind", "biased", "--length", "4"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));
    let out = effrand(dir.path(), &["generate", "--kind", "biased", "--p", "3/2", "--length", "4"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--p"));
    let out = effrand(dir.path(), &["generate", "--kind", "nonsense"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn adversarial_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrand(
        dir.path(),
        &["generate", "--kind", "adversarial", "--suite", "never-accepts", "--stages", "3", "--out", "a.bits", "--trace", "t.txt"],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read_to_string(dir.path().join("a.bits")).unwrap(), "111\n");
    let trace: effrand::generators::StageTrace = fs::read_to_string(dir.path().join("t.txt")).unwrap().parse().unwrap();
    assert_eq!(trace.records.len(), 6);
    assert!(trace.density_invariant_holds());
}

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ones.bits"), "1".repeat(64)).unwrap();
    let out = effrand(dir.path(), &["analyze", "--input", "ones.bits", "--tests", "slln", "--m", "4", "--N", "0"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("verdict=fail"));

    effrand(dir.path(), &["generate", "--kind", "champernowne", "--length", "131072", "--out", "ch.bits"]);
    let out = effrand(
        dir.path(),
        &["analyze", "--input", "ch.bits", "--tests", "normality", "--k", "1", "--eps", "0.05"],
    );
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    assert_eq!(code(&effrand(dir.path(), &["analyze", "--input", "missing.bits"])), 2);
    assert_eq!(code(&effrand(dir.path(), &["analyze", "--input", "ch.bits", "--tests", "spectral"])), 2);
    fs::write(dir.path().join("bad.bits"), "0102").unwrap();
    let out = effrand(dir.path(), &["analyze", "--input", "bad.bits"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("offset 3"));
}

#[test]
fn analyze_json_has_stable_fields() {
    let dir = tempfile::tempdir().unwrap();
    effrand(dir.path(), &["generate", "--kind", "prng", "--seed", "4", "--length", "20000", "--out", "p.bits"]);
    let out = effrand(dir.path(), &["analyze", "--input", "p.bits", "--json", "r.json"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    for key in ["command", "input", "slln", "normality", "lil_upper", "lil_lower", "status", "exit"] {
        assert!(doc.get(key).is_some(), "missing {key}");
    }
    assert_eq!(doc["slln"]["verdict"], "pass");
    assert_eq!(doc["slln"]["N"], 223);
    assert_eq!(doc["lil_upper"]["gamma"], "3/2");
    assert_eq!(doc["lil_lower"]["params"]["gamma"], 513);
}

#[test]
fn bound_examples() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrand(dir.path(), &["bound", "hoeffding", "--n", "100", "--eps", "0.1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("certificate: "))
        .and_then(|l| l.split("value=").nth(1))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - 0.27067).abs() < 1e-5);
    assert!(text.contains("hoeffding-fair"));

    let text = stdout(&effrand(dir.path(), &["bound", "schedule", "--m", "1", "--kmax", "1"]));
    assert!(text.contains("  k=0 N=1\n  k=1 N=1\n"));

    let text = stdout(&effrand(dir.path(), &["bound", "deviation", "--x", "1"]));
    assert!(text.contains("value: 0.2419707"));

    assert_eq!(code(&effrand(dir.path(), &["bound", "entropy"])), 2);
    assert_eq!(code(&effrand(dir.path(), &["bound", "hoeffding", "--n", "10"])), 2);
}

#[test]
fn family_build_check_membership() {
    let dir = tempfile::tempdir().unwrap();
    let out = effrand(dir.path(), &["family", "build", "--m", "4", "--kmax", "3", "--depth", "50", "--out", "f.txt"]);
    assert_eq!(code(&out), 0);
    assert_eq!(code(&effrand(dir.path(), &["family", "check", "--family", "f.txt"])), 0);

    fs::write(dir.path().join("ones.bits"), "1".repeat(60)).unwrap();
    let out = effrand(dir.path(), &["family", "membership", "--family", "f.txt", "--input", "ones.bits"]);
    assert!(stdout(&out).contains("indices: 0 1 2 3\n"), "{}", stdout(&out));

    let alt: String = "01".repeat(30);
    fs::write(dir.path().join("alt.bits"), alt).unwrap();
    let out = effrand(dir.path(), &["family", "membership", "--family", "f.txt", "--input", "alt.bits"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("indices: none\n"));
    assert!(stdout(&out).contains("consistent-with-random"));

    // depth below N_kmax is rejected
    let out = effrand(dir.path(), &["family", "build", "--m", "4", "--kmax", "3", "--depth", "20", "--out", "g.txt"]);
    assert_eq!(code(&out), 2);

    let out = effrand(dir.path(), &["family", "build", "--m", "2", "--kmax", "3", "--depth", "20", "--out", "m2.txt"]);
    assert_eq!(code(&out), 0);
    let out = effrand(dir.path(), &["family", "check", "--family", "m2.txt"]);
    assert_eq!(code(&out), 0);
}

#[test]
fn family_check_reports_budget_violation() {
    let dir = tempfile::tempdir().unwrap();
    let text = "format: solovay-family v1\nname: bad\ndepth: 2\nindependent: false\nconvergence: divergent\nsets: 2\n\
                index: 0\ncylinders: 0\nbudget: declared value=0.5\nindex: 1\ncylinders: 0 1\nbudget: declared value=0.75\nend\n";
    fs::write(dir.path().join("bad.txt"), text).unwrap();
    let out = effrand(dir.path(), &["family", "check", "--family", "bad.txt"]);
    assert_eq!(code(&out), 3);
    assert!(stdout(&out).contains("budget violated at index 1"));

    fs::write(dir.path().join("broken.txt"), "format: solovay-family v1\nname x\n").unwrap();
    assert_eq!(code(&effrand(dir.path(), &["family", "check", "--family", "broken.txt"])), 2);
}
