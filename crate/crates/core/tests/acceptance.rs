//! Acceptance criteria. Each test prints one PASS/FAIL line with its case
//! count and wall time, and fails on any violated property or on exceeding
//! the runtime bound. All comparisons are exact rational ones.

use std::time::{Duration, Instant};

use gurarii::chain::Mode;
use gurarii::suite::{self, SuiteReport};

fn report(id: &str, limit: Duration, run: impl FnOnce() -> SuiteReport) {
    let start = Instant::now();
    let r = run();
    let elapsed = start.elapsed();
    let ok = r.passed() && elapsed <= limit;
    println!(
        "[{}] {id} {}: {} cases, {} failures, {:.1}s (limit {}s)",
        if ok { "PASS" } else { "FAIL" },
        r.name,
        r.cases,
        r.failures.len(),
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    for f in r.failures.iter().take(20) {
        println!("    {f}");
    }
    assert!(r.passed(), "{id}: {} failures", r.failures.len());
    assert!(elapsed <= limit, "{id}: took {elapsed:?}");
}

const MIN: u64 = 60;

#[test]
fn criterion_1_pushout_lemma() {
    report("C1", Duration::from_secs(3 * MIN), || {
        suite::pushout_suite(200, 1)
    });
}

#[test]
fn criterion_2_quotient_norm_oracle() {
    report("C2", Duration::from_secs(2 * MIN), || {
        suite::quotient_oracle_suite(50, 50, 2)
    });
}

#[test]
fn criterion_3_linf_machinery() {
    report("C3", Duration::from_secs(2 * MIN), || {
        suite::linf_suite(100, 3)
    });
}

#[test]
fn criterion_4_norm_extension() {
    report("C4", Duration::from_secs(2 * MIN), || {
        suite::norm_extension_suite(100, 4)
    });
}

#[test]
fn criterion_5_double_description_roundtrip() {
    report("C5", Duration::from_secs(3 * MIN), || {
        suite::dd_roundtrip_suite(500, 1000, 5)
    });
}

#[test]
fn criterion_9_mediating_maps() {
    report("C9", Duration::from_secs(2 * MIN), || {
        suite::mediate_suite(100, 9)
    });
}

#[test]
fn criterion_6_chain_gurarii() {
    report("C6", Duration::from_secs(5 * MIN), || {
        suite::chain_suite(Mode::Gurarii, 50, &[0, 1, 2])
    });
}

#[test]
fn criterion_7_chain_lindenstrauss() {
    report("C7", Duration::from_secs(5 * MIN), || {
        suite::chain_suite(Mode::Lindenstrauss, 50, &[0, 1, 2])
    });
}

#[test]
fn criterion_8_chain_complemented() {
    report("C8", Duration::from_secs(5 * MIN), || {
        suite::chain_suite(Mode::Complemented, 50, &[0, 1, 2])
    });
}
