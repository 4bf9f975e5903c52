//! Acceptance suite: one test per shipped claim, each printing a
//! pass/fail line with its measured quantity. Identity criteria run the
//! same seeded check suites as `poprl verify`; the experiment criteria
//! run the shipped configs end to end.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use poprl::harness::{read_csv_file, run_experiment, CurveRecord, ExperimentConfig};
use poprl::verify::{run_suite, Report, Suite};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn report_for(suite: Suite) -> Report {
    run_suite(suite).expect("suite runs").remove(0)
}

fn assert_all_pass(criterion: &str, report: &Report, budget_s: f64, elapsed_s: f64) {
    let worst = report
        .checks
        .iter()
        .map(|c| c.residual / c.tolerance)
        .fold(0.0, f64::max);
    println!(
        "acceptance {criterion}: {} ({} checks, worst residual/tolerance {:.2e}, {:.1}s)",
        if report.pass { "PASS" } else { "FAIL" },
        report.checks.len(),
        worst,
        elapsed_s
    );
    for check in &report.checks {
        assert!(
            check.pass,
            "{}: residual {} > tolerance {}",
            check.check, check.residual, check.tolerance
        );
    }
    assert!(
        elapsed_s < budget_s,
        "{criterion} took {elapsed_s:.1}s, budget {budget_s}s"
    );
}

#[test]
fn criterion_01_theorem2_bellman_identity() {
    let start = Instant::now();
    let report = report_for(Suite::Theorem2);
    assert!(
        report.checks.len() >= 20,
        "need at least 20 instances, got {}",
        report.checks.len()
    );
    assert_all_pass("01 theorem2", &report, 10.0, start.elapsed().as_secs_f64());
}

#[test]
fn criterion_02_theorem1_unbiased_ancestral_gradient() {
    let start = Instant::now();
    let report = report_for(Suite::Theorem1);
    let instances = report
        .checks
        .iter()
        .filter(|c| c.check.ends_with("cosine"))
        .count();
    assert!(
        instances >= 20,
        "need at least 20 instances, got {instances}"
    );
    assert_all_pass("02 theorem1", &report, 30.0, start.elapsed().as_secs_f64());
}

#[test]
fn criterion_03_natural_gradient_equivalence() {
    let start = Instant::now();
    let report = report_for(Suite::Natgrad);
    assert_all_pass("03 natgrad", &report, 5.0, start.elapsed().as_secs_f64());
}

#[test]
fn criterion_04_variational_representation() {
    let start = Instant::now();
    let report = report_for(Suite::Variational);
    assert_all_pass(
        "04 variational",
        &report,
        10.0,
        start.elapsed().as_secs_f64(),
    );
}

#[test]
fn criterion_05_replicator_fixation() {
    let start = Instant::now();
    let mut report = report_for(Suite::Lemma1);
    report.checks.retain(|c| c.check.contains("fixation"));
    assert_eq!(report.checks.len(), 3, "three beta values");
    assert_all_pass("05 lemma1", &report, 1.0, start.elapsed().as_secs_f64());
}

#[test]
fn criterion_06_zoo_unbiasedness() {
    let start = Instant::now();
    let report = report_for(Suite::ZooUnbiased);
    assert_all_pass(
        "06 zoo_unbiased",
        &report,
        10.0,
        start.elapsed().as_secs_f64(),
    );
}

#[test]
fn criterion_07_lifted_law_preservation() {
    let start = Instant::now();
    let report = report_for(Suite::Lifted);
    assert_all_pass("07 lifted", &report, 30.0, start.elapsed().as_secs_f64());
}

#[test]
fn criterion_08_small_beta_limit() {
    let start = Instant::now();
    let mut report = report_for(Suite::Lemma1);
    report.checks.retain(|c| c.check.contains("beta_limit"));
    assert_eq!(report.checks.len(), 20, "twenty instances");
    assert_all_pass("08 beta_limit", &report, 5.0, start.elapsed().as_secs_f64());
}

struct TrialSummary {
    finals: Vec<f64>,
    peak: Vec<f64>,
}

fn summarize(records: &[CurveRecord]) -> TrialSummary {
    let mut by_trial: HashMap<usize, Vec<f64>> = HashMap::new();
    for r in records {
        by_trial.entry(r.trial).or_default().push(r.best_return);
    }
    let mut trials: Vec<usize> = by_trial.keys().copied().collect();
    trials.sort_unstable();
    let finals = trials
        .iter()
        .map(|t| *by_trial[t].last().expect("non-empty trial"))
        .collect();
    let peak = trials
        .iter()
        .map(|t| {
            by_trial[t]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    TrialSummary { finals, peak }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn run_shipped(config_name: &str) -> TrialSummary {
    let config = ExperimentConfig::from_file(&configs_dir().join(config_name))
        .expect("shipped config parses");
    let outcome = run_experiment(&config).expect("experiment runs");
    summarize(&outcome.records)
}

#[test]
fn criterion_09_tableau_experiment_ordering() {
    let start = Instant::now();
    let arl = run_shipped("two_state_arl.conf");
    let zoo = run_shipped("two_state_zoo.conf");
    let poga = run_shipped("two_state_poga.conf");
    let arl_hits = arl.peak.iter().filter(|&&p| p >= 9.4).count();
    let zoo_hits = zoo.peak.iter().filter(|&&p| p >= 9.4).count();
    let poga_mean_final = mean(&poga.finals);
    let arl_mean_final = mean(&arl.finals);
    let zoo_mean_final = mean(&zoo.finals);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = arl_hits >= 4
        && zoo_hits >= 4
        && poga_mean_final < arl_mean_final
        && poga_mean_final < zoo_mean_final;
    println!(
        "acceptance 09 tableau: {} (arl>=9.4 in {arl_hits}/5, zoo>=9.4 in {zoo_hits}/5, \
         mean finals arl {arl_mean_final:.3} zoo {zoo_mean_final:.3} poga {poga_mean_final:.3}, {elapsed:.0}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(arl_hits >= 4, "arl reached 9.4 in only {arl_hits}/5 trials");
    assert!(zoo_hits >= 4, "zoo reached 9.4 in only {zoo_hits}/5 trials");
    assert!(
        poga_mean_final < arl_mean_final,
        "poga mean final {poga_mean_final} not below arl {arl_mean_final}"
    );
    assert!(
        poga_mean_final < zoo_mean_final,
        "poga mean final {poga_mean_final} not below zoo {zoo_mean_final}"
    );
    assert!(elapsed < 300.0, "took {elapsed:.0}s, budget 300s");
}

#[test]
fn criterion_10_cartpole_experiment_ordering() {
    let start = Instant::now();
    let arl = run_shipped("cartpole_arl.conf");
    let poga = run_shipped("cartpole_poga.conf");
    let zoo = run_shipped("cartpole_zoo.conf");
    let arl_hits = arl.peak.iter().filter(|&&p| p >= 500.0).count();
    let poga_hits = poga.peak.iter().filter(|&&p| p >= 500.0).count();
    let zoo_mean_final = mean(&zoo.finals);
    let arl_mean_final = mean(&arl.finals);
    let poga_mean_final = mean(&poga.finals);
    let elapsed = start.elapsed().as_secs_f64();
    let pass = arl_hits >= 3
        && poga_hits >= 3
        && zoo_mean_final < arl_mean_final
        && zoo_mean_final < poga_mean_final;
    println!(
        "acceptance 10 cartpole: {} (arl 500 in {arl_hits}/5, poga 500 in {poga_hits}/5, \
         mean finals arl {arl_mean_final:.0} poga {poga_mean_final:.0} zoo {zoo_mean_final:.0}, {elapsed:.0}s)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(
        poga_hits >= 3,
        "poga reached 500 in only {poga_hits}/5 trials"
    );
    assert!(arl_hits >= 3, "arl reached 500 in only {arl_hits}/5 trials");
    assert!(
        zoo_mean_final < arl_mean_final,
        "zoo mean final {zoo_mean_final} not below arl {arl_mean_final}"
    );
    assert!(
        zoo_mean_final < poga_mean_final,
        "zoo mean final {zoo_mean_final} not below poga {poga_mean_final}"
    );
    assert!(elapsed < 1200.0, "took {elapsed:.0}s, budget 1200s");
}

#[test]
fn criterion_11_run_determinism_across_jobs() {
    let start = Instant::now();
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("det.conf");
    std::fs::write(
        &config_path,
        "algorithm = arl\nenv = two_state\npop_size = 128\ngenerations = 12\n\
         trials = 2\nmaster_seed = 99\nbeta = 0.05\nalpha = 0.1\n",
    )
    .expect("write config");
    let bin = env!("CARGO_BIN_EXE_poprl");
    let mut outputs = Vec::new();
    for (label, jobs) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = dir.path().join(format!("{label}.csv"));
        let status = std::process::Command::new(bin)
            .args([
                "run",
                "--config",
                config_path.to_str().unwrap(),
                "--jobs",
                jobs,
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .expect("binary runs");
        assert!(status.success());
        outputs.push(std::fs::read(&out).expect("csv exists"));
    }
    assert_eq!(outputs[0], outputs[1], "jobs=1 vs jobs=4 differ");
    assert_eq!(outputs[1], outputs[2], "repeated jobs=4 runs differ");
    // The library route must agree with itself as well.
    let config = ExperimentConfig::from_file(&config_path).expect("config parses");
    let a = run_experiment(&config).expect("runs");
    let b = run_experiment(&config).expect("runs");
    assert_eq!(a.records, b.records);
    // And with the CSV the binary wrote.
    let parsed = read_csv_file(&dir.path().join("a.csv")).expect("parses");
    assert_eq!(parsed, a.records);
    println!(
        "acceptance 11 determinism: PASS (3 binary runs byte-identical, library agrees, {:.1}s)",
        start.elapsed().as_secs_f64()
    );
}
