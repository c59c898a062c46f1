//! One test per acceptance criterion, at the stated sample sizes.
//!
//! Each test prints the suite's pass/fail line plus every check, and pins the
//! tolerances the suite is expected to apply so that a loosened suite fails here.

use mccm::verify::{run_criterion, Check, CriterionOutcome, VerifyConfig};

fn run(id: u32) -> CriterionOutcome {
    let o = run_criterion(id, &VerifyConfig::default());
    println!("{}", o.line());
    for c in &o.checks {
        let tol = c.tolerance.map(|t| format!("tol {t:e}")).unwrap_or_else(|| "bound".into());
        let mark = if c.passed { "ok  " } else { "FAIL" };
        println!("    {mark} {}: {} vs {} ({tol})", c.label, c.value, c.target);
    }
    o
}

/// Every two-sided check uses exactly `tol`.
fn pin(checks: &[Check], tol: f64) {
    for c in checks.iter().filter(|c| c.tolerance.is_some()) {
        assert_eq!(c.tolerance, Some(tol), "{} uses tolerance {:?}", c.label, c.tolerance);
    }
}

fn pin_label(checks: &[Check], needle: &str, tol: f64) {
    let found: Vec<&Check> = checks.iter().filter(|c| c.label.contains(needle)).collect();
    assert!(!found.is_empty(), "no check labelled {needle:?}");
    for c in found {
        assert_eq!(c.tolerance, Some(tol), "{}", c.label);
    }
}

fn verdict(o: &CriterionOutcome) {
    assert!(o.error.is_none(), "criterion {} errored: {:?}", o.id, o.error);
    assert!(o.passed, "criterion {} failed", o.id);
}

#[test]
fn criterion_01_lognormal_closed_form() {
    let o = run(1);
    pin(&o.checks, 1e-12);
    assert_eq!(o.checks.len(), 9);
    verdict(&o);
}

#[test]
fn criterion_02_salem_iff_two_point() {
    let o = run(2);
    pin(&o.checks, 1e-12);
    let one_sided: Vec<&Check> = o.checks.iter().filter(|c| c.tolerance.is_none()).collect();
    assert_eq!(one_sided.len(), 11);
    for c in one_sided.iter().filter(|c| c.label.contains("d_h - d_f")) {
        assert_eq!(c.target, 1e-6);
    }
    verdict(&o);
}

#[test]
fn criterion_03_boundary_transform() {
    let o = run(3);
    pin_label(&o.checks, "beta - sigma", 1e-10);
    pin_label(&o.checks, "psi(beta)", 1e-9);
    verdict(&o);
}

#[test]
fn criterion_04_exact_second_moment() {
    let o = run(4);
    pin(&o.checks, 3.0);
    assert_eq!(o.checks.len(), 8);
    verdict(&o);
}

#[test]
fn criterion_05_badic_scaling() {
    let o = run(5);
    pin(&o.checks, 3.0);
    assert_eq!(o.checks.len(), 6);
    verdict(&o);
}

#[test]
fn criterion_06_conditional_variance() {
    let o = run(6);
    pin(&o.checks, 0.05);
    verdict(&o);
}

#[test]
fn criterion_07_correlation_dimension() {
    let o = run(7);
    pin(&o.checks, 0.05);
    verdict(&o);
}

#[test]
fn criterion_08_entropy_dimension() {
    let o = run(8);
    pin(&o.checks, 0.05);
    verdict(&o);
}

#[test]
fn criterion_09_hv_growth() {
    let o = run(9);
    pin(&o.checks, 0.02);
    assert_eq!(o.checks.len(), 3);
    verdict(&o);
}

#[test]
fn criterion_10_norm_verdicts() {
    let o = run(10);
    let mismatches = o.checks.iter().find(|c| c.label == "verdict mismatches").unwrap();
    assert_eq!(mismatches.tolerance, None);
    assert_eq!(mismatches.value, 0.0);
    verdict(&o);
}

#[test]
fn criterion_11_super_critical_tail() {
    let o = run(11);
    pin_label(&o.checks, "fitted tail index", 0.25);
    pin_label(&o.checks, "1/beta", 1e-9);
    verdict(&o);
}

#[test]
fn criterion_12_partition_small_moments() {
    let o = run(12);
    pin(&o.checks, 0.35);
    verdict(&o);
}

#[test]
fn criterion_13_moment_scaling_slope() {
    let o = run(13);
    pin(&o.checks, 0.05);
    verdict(&o);
}

#[test]
fn criterion_14_frostman_proxy() {
    let o = run(14);
    let c = &o.checks[0];
    assert_eq!((c.tolerance, c.target), (None, 0.95));
    verdict(&o);
}

#[test]
fn criterion_15_reproducibility() {
    let o = run(15);
    let c = &o.checks[0];
    assert_eq!((c.tolerance, c.target), (None, 1.0));
    verdict(&o);
}
