//! Acceptance suite. Run with `cargo test -p mesocat --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use mesocat::acceptance::{self, CriterionReport, DEFAULT_SEED};

fn check(report: CriterionReport) {
    println!("{}", report.line());
    assert!(report.passed, "{}", report.line());
}

#[test]
fn criterion_01_four_component_q_structure() {
    check(acceptance::four_lobes());
}

#[test]
fn criterion_02_eight_component_q_structure() {
    check(acceptance::eight_lobes());
}

#[test]
fn criterion_03_q_zero_closed_form() {
    check(acceptance::q_zeros());
}

#[test]
fn criterion_04_wigner_negativity_and_bounds() {
    check(acceptance::wigner_bounds());
}

#[test]
fn criterion_05_dyad_vs_fock_wigner() {
    check(acceptance::dyad_vs_fock(DEFAULT_SEED));
}

#[test]
fn criterion_06_homodyne_peaks() {
    check(acceptance::homodyne_peaks());
}

#[test]
fn criterion_07_analytic_vs_lindblad_damping() {
    check(acceptance::lindblad_vs_analytic());
}

#[test]
fn criterion_08_two_times_faster_decoherence() {
    check(acceptance::decay_ratio());
}

#[test]
fn criterion_09_detection_completeness() {
    check(acceptance::completeness(DEFAULT_SEED));
}

#[test]
fn criterion_10_deterministic_artifacts() {
    check(acceptance::determinism());
}
