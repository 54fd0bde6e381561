//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line with the measured quantities and wall time.

use std::time::Instant;

use erflow_core::validation::{
    check_al_uzawa, check_bingham_channel, check_contraction_closed_form,
    check_contraction_rate, check_gateaux, check_inertial_limit, check_infsup,
    check_lambda_continuation, check_mms_orders, check_mu_battery, check_operator_bounds,
    check_parallel_plate, check_poiseuille, check_skew_symmetry, check_two_layer, CheckResult,
};

const SEED: u64 = 42;

fn gate(criterion: u32, label: &str, budget_secs: f64, results: &[CheckResult], elapsed: f64) {
    let passed = results.iter().all(|r| r.passed) && elapsed <= budget_secs;
    let verdict = if passed { "PASS" } else { "FAIL" };
    println!("criterion {criterion} ({label}): {verdict} [{elapsed:.1}s / {budget_secs:.0}s]");
    for r in results {
        println!("    {}: {} — {}", r.name, if r.passed { "ok" } else { "FAILED" }, r.detail);
    }
    assert!(
        passed,
        "criterion {criterion} ({label}) failed in {elapsed:.1}s (budget {budget_secs:.0}s): {:?}",
        results
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("{}: {}", r.name, r.detail))
            .collect::<Vec<_>>()
    );
}

#[test]
fn criterion_01_operator_monotonicity() {
    let t = Instant::now();
    let (mono, _) = check_operator_bounds(SEED).unwrap();
    gate(1, "strong monotonicity", 10.0, &[mono], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_02_operator_lipschitz() {
    let t = Instant::now();
    let (_, lip) = check_operator_bounds(SEED).unwrap();
    gate(2, "dual-norm Lipschitz bound", 10.0, &[lip], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_03_gateaux_derivatives() {
    let t = Instant::now();
    let r = check_gateaux(SEED).unwrap();
    gate(3, "tangents and gradients vs finite differences", 30.0, &[r], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_04_infsup_stability() {
    let t = Instant::now();
    let r = check_infsup().unwrap();
    gate(4, "discrete inf-sup stability", 120.0, &[r], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_05_electric_benchmarks() {
    let t = Instant::now();
    let rs = [check_parallel_plate().unwrap(), check_two_layer().unwrap()];
    gate(5, "electric field benchmarks", 5.0, &rs, t.elapsed().as_secs_f64());
}

#[test]
fn criterion_06_manufactured_solutions() {
    let t = Instant::now();
    let rs = [check_poiseuille().unwrap(), check_mms_orders().unwrap()];
    gate(6, "manufactured-solution convergence", 120.0, &rs, t.elapsed().as_secs_f64());
}

#[test]
fn criterion_07_bingham_channel() {
    let t = Instant::now();
    let r = check_bingham_channel().unwrap();
    gate(7, "Bingham channel against the 1D reduction", 300.0, &[r], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_08_augmented_lagrangian() {
    let t = Instant::now();
    let r = check_al_uzawa().unwrap();
    gate(8, "augmented-Lagrangian convergence", 300.0, &[r], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_09_contraction_method() {
    let t = Instant::now();
    let rs = [check_contraction_closed_form().unwrap(), check_contraction_rate().unwrap()];
    gate(9, "contraction constants and measured rate", 300.0, &rs, t.elapsed().as_secs_f64());
}

#[test]
fn criterion_10_lambda_continuation() {
    let t = Instant::now();
    let r = check_lambda_continuation().unwrap();
    gate(10, "regularization continuation", 600.0, &[r], t.elapsed().as_secs_f64());
}

#[test]
fn criterion_11_inertial_terms() {
    let t = Instant::now();
    let rs = [check_skew_symmetry(SEED).unwrap(), check_inertial_limit().unwrap()];
    gate(11, "convection form and creeping-flow limit", 300.0, &rs, t.elapsed().as_secs_f64());
}

#[test]
fn criterion_12_direction_factor() {
    let t = Instant::now();
    let r = check_mu_battery().unwrap();
    gate(12, "direction-factor battery", 1.0, &[r], t.elapsed().as_secs_f64());
}
