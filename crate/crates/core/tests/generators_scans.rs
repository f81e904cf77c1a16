//! Generators fed through the scanners.

use effrand::bounds::cover_schedule;
use effrand::generators::{gen_adversarial, gen_biased, gen_champernowne, gen_prng, AdversarialConfig, PredicateSuite};
use effrand::rational::ratio;
use effrand::scan::{lil_upper_report, normality_scan, slln_scan, Verdict};

#[test]
fn fair_sources_pass_slln_beyond_n4() {
    let after = cover_schedule(8, 4).unwrap().n_k(4).unwrap();
    let n = 1 << 14;
    let prng_pass = (0..100u64)
        .filter(|&s| slln_scan(&gen_prng(s, n), 8, after).unwrap().verdict == Verdict::Pass)
        .count();
    let biased_pass = (0..100u64)
        .filter(|&s| {
            let bits = gen_biased(&ratio(1, 2), s, n).unwrap();
            slln_scan(&bits, 8, after).unwrap().verdict == Verdict::Pass
        })
        .count();
    assert!(prng_pass >= 95, "{prng_pass}");
    assert!(biased_pass >= 95, "{biased_pass}");
}

#[test]
fn biased_source_fails_slln() {
    let bits = gen_biased(&ratio(3, 4), 1, 1 << 12).unwrap();
    assert_eq!(slln_scan(&bits, 8, 223).unwrap().verdict, Verdict::Fail);
}

#[test]
fn champernowne_offsets_within_five_percent() {
    let bits = gen_champernowne(1 << 17);
    for k in [1, 2] {
        let r = normality_scan(&bits, k, &ratio(1, 20)).unwrap();
        assert_eq!(r.flagged, 0, "k={k}");
    }
}

#[test]
fn adversarial_violations_grow_with_stages() {
    for suite in PredicateSuite::ALL {
        let mut previous = 0;
        for stages in 2..=10 {
            let config = AdversarialConfig {
                suite,
                stages,
                ..Default::default()
            };
            let (bits, trace) = gen_adversarial(&config).unwrap();
            assert!(trace.density_invariant_holds());
            let v = slln_scan(&bits, 8, 4).unwrap().violations;
            if bits.len() > 4 {
                assert!(!v.is_empty(), "{suite} stages={stages}");
            }
            assert!(v.len() >= previous, "{suite} stages={stages}");
            previous = v.len();
        }
    }
}

#[test]
fn lil_upper_verdicts_on_prng_and_constant() {
    let (lambda, gamma) = (ratio(2, 1), ratio(2, 1));
    let r = lil_upper_report(&gen_prng(5, 1 << 16), &lambda, &gamma).unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    let ones = gen_biased(&ratio(1, 1), 0, 1 << 12).unwrap();
    let r = lil_upper_report(&ones, &lambda, &gamma).unwrap();
    assert_eq!(r.verdict, Verdict::Fail);
    assert_eq!(r.crossings, r.blocks.len());
}
