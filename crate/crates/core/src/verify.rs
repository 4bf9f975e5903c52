//! Identity verification suites.
//!
//! Each suite exercises one of the exact relations the toolkit is built
//! on, over seeded random instances, and reports residuals against
//! pinned tolerances. The `verify` CLI subcommand serializes the report
//! as JSON and exits nonzero if any check fails.

use std::collections::HashMap;
use std::str::FromStr;

use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::algorithms::{ancestral_learning, zoo_gradient_estimate};
use crate::envs::QuadraticBlackBox;
use crate::error::{Error, Result};
use crate::mdp::{rollout, Environment, InitialState, MdpSpec, TransitionModel, TransitionSource};
use crate::oracle::{
    backward_distribution, backward_log_grad_expectation, backward_suffix_distribution,
    bellman_residual, enumerate_paths, enumerate_suffixes, generalized_v, infinite_population_step,
    population_fitness, random_small_instance, reachable_sets, variational_value, FrequencyVector,
    GradMethod,
};
use crate::policy::{empirical_parent_policy, mixture_update, Policy, TableauPolicy};
use crate::rng::{Purpose, Streams};

/// One verified identity.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Check {
            check: name.into(),
            residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
        }
    }
}

/// A suite's result: every check plus the aggregate verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    fn from_checks(suite: &str, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Report {
            suite: suite.to_string(),
            checks,
            pass,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Theorem1,
    Theorem2,
    Lemma1,
    Variational,
    Lifted,
    Natgrad,
    ZooUnbiased,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(Suite::All),
            "theorem1" => Ok(Suite::Theorem1),
            "theorem2" => Ok(Suite::Theorem2),
            "lemma1" => Ok(Suite::Lemma1),
            "variational" => Ok(Suite::Variational),
            "lifted" => Ok(Suite::Lifted),
            "natgrad" => Ok(Suite::Natgrad),
            "zoo_unbiased" => Ok(Suite::ZooUnbiased),
            other => Err(Error::InvalidInput(format!(
                "unknown suite `{other}` (all|theorem1|theorem2|lemma1|variational|lifted|natgrad|zoo_unbiased)"
            ))),
        }
    }
}

pub const SUITE_NAMES: &[&str] = &[
    "theorem1",
    "theorem2",
    "lemma1",
    "variational",
    "lifted",
    "natgrad",
    "zoo_unbiased",
];

/// Run a suite (or all of them) and collect the reports.
pub fn run_suite(suite: Suite) -> Result<Vec<Report>> {
    match suite {
        Suite::All => SUITE_NAMES
            .iter()
            .map(|name| run_suite(name.parse()?).map(|mut v| v.remove(0)))
            .collect(),
        Suite::Theorem1 => Ok(vec![theorem1_suite()?]),
        Suite::Theorem2 => Ok(vec![theorem2_suite()?]),
        Suite::Lemma1 => Ok(vec![lemma1_suite()?]),
        Suite::Variational => Ok(vec![variational_suite()?]),
        Suite::Lifted => Ok(vec![lifted_suite()?]),
        Suite::Natgrad => Ok(vec![natgrad_suite()?]),
        Suite::ZooUnbiased => Ok(vec![zoo_unbiased_suite()]),
    }
}

/// Unbiased ancestral gradient: the exact expectation of the ancestral
/// estimator under the backward distribution is parallel to the
/// finite-difference gradient of the population fitness, and equals it
/// once the `beta T` scale is reinstated.
fn theorem1_suite() -> Result<Report> {
    let mut checks = Vec::new();
    let mut rng = Streams::new(0x7411).agent(0, 0, Purpose::Init);
    let betas = [0.5, 1.0, 2.0];
    for i in 0..21 {
        let horizon = 3 + i % 4;
        let gamma = if i % 2 == 0 { 0.9 } else { 1.0 };
        let beta = betas[i % betas.len()];
        let (env, policy) = random_small_instance(&mut rng, horizon, gamma);
        let table = backward_distribution(&enumerate_paths(&env, &policy, horizon, gamma)?, beta);
        // Exact expectation of the (1/T)-scaled ancestral estimator,
        // projected onto the same simplex-tangent coordinates the
        // finite differences measure in.
        let raw = backward_log_grad_expectation(&policy, &table)?;
        let anc: Vec<f64> = raw.iter().map(|g| g / horizon as f64).collect();
        let anc = project_tableau(&policy, &anc);
        let fd = crate::oracle::grad_lambda(
            &env,
            &policy,
            horizon,
            gamma,
            beta,
            GradMethod::FiniteDifference,
        )?;
        let dot: f64 = anc.iter().zip(&fd).map(|(a, b)| a * b).sum();
        let na: f64 = anc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let nb: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cosine = dot / (na * nb);
        checks.push(Check::new(
            format!("theorem1/instance_{i:02}/cosine"),
            1.0 - cosine,
            1e-8,
        ));
        // Componentwise ratio constancy over well-conditioned coordinates.
        let fd_scale = fd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let ratios: Vec<f64> = anc
            .iter()
            .zip(&fd)
            .filter(|(_, f)| f.abs() > 1e-4 * fd_scale)
            .map(|(a, f)| a / f)
            .collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(f64::total_cmp);
        // A gradient that vanishes everywhere carries no ratio to check.
        let ratio_residual = if sorted.is_empty() {
            0.0
        } else {
            let median = sorted[sorted.len() / 2];
            ratios
                .iter()
                .map(|r| (r - median).abs() / median.abs())
                .fold(0.0, f64::max)
        };
        checks.push(Check::new(
            format!("theorem1/instance_{i:02}/ratio_constancy"),
            ratio_residual,
            1e-6,
        ));
        // Reinstating the beta T scale gives equality with the gradient.
        let scale = horizon as f64 / beta;
        let eq_residual = anc
            .iter()
            .zip(&fd)
            .map(|(a, f)| (a * scale - f).abs())
            .fold(0.0, f64::max)
            / fd_scale;
        checks.push(Check::new(
            format!("theorem1/instance_{i:02}/scaled_equality"),
            eq_residual,
            1e-6,
        ));
    }
    Ok(Report::from_checks("theorem1", checks))
}

fn project_tableau(policy: &TableauPolicy, raw: &[f64]) -> Vec<f64> {
    let n_actions = policy.action_count();
    let mut out = vec![0.0; raw.len()];
    for x in 0..policy.n_states() {
        let mean: f64 = (0..n_actions)
            .map(|a| policy.prob(x, a) * raw[x * n_actions + a])
            .sum();
        for a in 0..n_actions {
            out[x * n_actions + a] = raw[x * n_actions + a] - mean;
        }
    }
    out
}

/// KL-regularized Bellman recursion of the generalized value function.
fn theorem2_suite() -> Result<Report> {
    let mut checks = Vec::new();
    let mut rng = Streams::new(0x7412).agent(0, 0, Purpose::Init);
    let betas = [0.1, 1.0, 5.0];
    for i in 0..24 {
        let horizon = 3 + i % 4;
        let gamma = if i % 2 == 0 { 0.9 } else { 1.0 };
        let beta = betas[i % betas.len()];
        let (env, policy) = random_small_instance(&mut rng, horizon, gamma);
        let residual = bellman_residual(&env, &policy, beta, gamma, horizon)?;
        checks.push(Check::new(
            format!("theorem2/instance_{i:02}/beta_{beta}"),
            residual,
            1e-10,
        ));
    }
    Ok(Report::from_checks("theorem2", checks))
}

/// Replicator fixation of the fitness maximizer, plus the small-beta
/// limit where the population fitness collapses to the expected return.
fn lemma1_suite() -> Result<Report> {
    let mut checks = Vec::new();
    let lambdas = [1.4, 1.1, 0.6];
    for beta in [0.5, 1.0, 2.0] {
        let mut freqs = FrequencyVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        for _ in 0..200 {
            freqs = infinite_population_step(&freqs, &lambdas, beta);
            if freqs.as_slice()[0] >= 1.0 - 1e-6 {
                break;
            }
        }
        checks.push(Check::new(
            format!("lemma1/fixation/beta_{beta}"),
            1.0 - freqs.as_slice()[0],
            1e-6,
        ));
    }
    // Small-beta limit: |lambda - J| at beta = 1e-5.
    let mut rng = Streams::new(0x7413).agent(0, 0, Purpose::Init);
    for i in 0..20 {
        let horizon = 3 + i % 4;
        let gamma = if i % 2 == 0 { 0.9 } else { 1.0 };
        let (env, policy) = random_small_instance(&mut rng, horizon, gamma);
        let table = enumerate_paths(&env, &policy, horizon, gamma)?;
        let lambda = population_fitness(&table, 1e-5);
        let j = table.expected_return();
        checks.push(Check::new(
            format!("lemma1/beta_limit/instance_{i:02}"),
            (lambda - j).abs(),
            1e-4,
        ));
    }
    Ok(Report::from_checks("lemma1", checks))
}

/// Variational representation of the generalized value: the backward
/// suffix distribution attains it, nothing exceeds it.
fn variational_suite() -> Result<Report> {
    let mut checks = Vec::new();
    let mut rng = Streams::new(0x7414).agent(0, 0, Purpose::Init);
    for i in 0..8 {
        let horizon = 4 + i % 3;
        let gamma = if i % 2 == 0 { 0.9 } else { 1.0 };
        let beta = [0.1, 1.0, 5.0][i % 3];
        let (env, policy) = random_small_instance(&mut rng, horizon, gamma);
        let reachable = reachable_sets(&env, &policy, horizon)?;
        // First reachable (t, x) with 1 <= t < horizon.
        let (t, x) = (1..horizon)
            .flat_map(|t| (0..env.n_states()).map(move |x| (t, x)))
            .find(|&(t, x)| reachable[t][x])
            .expect("some state is reachable");
        let suffixes = enumerate_suffixes(&env, &policy, horizon, gamma, t, x)?;
        let pb = backward_suffix_distribution(&suffixes, beta);
        let vpop = generalized_v(&env, &policy, horizon, gamma, t, x, beta)?;
        let at_maximizer = variational_value(&suffixes, &pb, beta)?;
        checks.push(Check::new(
            format!("variational/instance_{i:02}/maximizer_attains"),
            (at_maximizer - vpop).abs(),
            1e-10,
        ));
        let mut excess: f64 = 0.0;
        for _ in 0..100 {
            let raw: Vec<f64> = pb
                .iter()
                .map(|p| p * (0.05 + rng.random::<f64>()))
                .collect();
            let sum: f64 = raw.iter().sum();
            let p: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            let value = variational_value(&suffixes, &p, beta)?;
            excess = excess.max(value - vpop);
        }
        checks.push(Check::new(
            format!("variational/instance_{i:02}/maximality"),
            excess.max(0.0),
            1e-12,
        ));
    }
    Ok(Report::from_checks("variational", checks))
}

/// Law preservation of lifted-plan simulation plus exact
/// action-dependent determinism of states.
fn lifted_suite() -> Result<Report> {
    let mut checks = Vec::new();
    let env = MdpSpec::new(
        2,
        2,
        vec![1.0, 1.0, 0.0, 0.0],
        TransitionModel::Stochastic(vec![
            vec![0.3, 0.7],
            vec![0.8, 0.2],
            vec![0.6, 0.4],
            vec![0.1, 0.9],
        ]),
        InitialState::Fixed(0),
        1.0,
        3,
    )?;
    let policy = TableauPolicy::new(vec![vec![0.5, 0.5], vec![0.25, 0.75]])?;
    let horizon = 3;
    let n = 100_000usize;
    let streams = Streams::new(0x7415);

    let mut lifted_counts: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
    let mut live_counts: HashMap<(Vec<usize>, Vec<usize>), usize> = HashMap::new();
    for i in 0..n {
        let plan = env.sample_plan(&mut streams.agent(0, i as u64, Purpose::Plan));
        let traj = rollout(
            &policy,
            &env,
            horizon,
            TransitionSource::Plan(&plan),
            &mut streams.agent(0, i as u64, Purpose::Action),
        )?;
        *lifted_counts
            .entry((traj.states, traj.actions))
            .or_insert(0) += 1;
        let traj = rollout(
            &policy,
            &env,
            horizon,
            TransitionSource::Live,
            &mut streams.agent(1, i as u64, Purpose::Action),
        )?;
        *live_counts.entry((traj.states, traj.actions)).or_insert(0) += 1;
    }
    // Total variation between the two empirical path distributions.
    let keys: std::collections::BTreeSet<_> = lifted_counts
        .keys()
        .chain(live_counts.keys())
        .cloned()
        .collect();
    let tv: f64 = keys
        .iter()
        .map(|k| {
            let a = *lifted_counts.get(k).unwrap_or(&0) as f64 / n as f64;
            let b = *live_counts.get(k).unwrap_or(&0) as f64 / n as f64;
            (a - b).abs()
        })
        .sum::<f64>()
        / 2.0;
    checks.push(Check::new("lifted/tv_lifted_vs_live", tv, 0.02));

    // Chi-square of the lifted sample against the exact path law.
    let table = enumerate_paths(&env, &policy, horizon, 1.0)?;
    let mut statistic = 0.0;
    for e in &table.entries {
        let key = (e.states.clone(), e.actions.clone());
        let observed = *lifted_counts.get(&key).unwrap_or(&0) as f64;
        let expected = e.forward_prob * n as f64;
        statistic += (observed - expected).powi(2) / expected;
    }
    let df = (table.entries.len() - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).expect("df > 0").cdf(statistic);
    // Residual formulation: 1 - p passes while p stays above the floor.
    checks.push(Check::new(
        "lifted/chi_square_one_minus_p",
        1.0 - p_value,
        1.0 - 1e-3,
    ));

    // ADDS: under one shared plan, identical (t, x, a) always lands in
    // the identical successor, so two agents forced through the same
    // actions see the same states.
    let mut adds_violations = 0usize;
    for i in 0..1_000 {
        let plan = env.sample_plan(&mut streams.agent(2, i as u64, Purpose::Plan));
        for t in 0..horizon {
            for x in 0..env.n_states() {
                for a in 0..env.n_actions() {
                    if plan.next(t, x, a) != plan.next(t, x, a) {
                        adds_violations += 1;
                    }
                }
            }
        }
        // Forced identical action sequences under the shared plan.
        let forced = TableauPolicy::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]])?;
        let a = rollout(
            &forced,
            &env,
            horizon,
            TransitionSource::Plan(&plan),
            &mut streams.agent(3, i as u64, Purpose::Action),
        )?;
        let b = rollout(
            &forced,
            &env,
            horizon,
            TransitionSource::Plan(&plan),
            &mut streams.agent(4, i as u64, Purpose::Action),
        )?;
        if a.states != b.states {
            adds_violations += 1;
        }
    }
    checks.push(Check::new("lifted/adds_exact", adds_violations as f64, 0.0));
    Ok(Report::from_checks("lifted", checks))
}

/// Natural-gradient form of ancestral learning coincides with the
/// mixture update row by row.
fn natgrad_suite() -> Result<Report> {
    let mut rng = Streams::new(0x7416).agent(0, 0, Purpose::Init);
    let mut worst: f64 = 0.0;
    let pairs = 1000;
    for _ in 0..pairs {
        let n_states = 2 + (rng.random::<u32>() % 2) as usize;
        let n_actions = 2;
        let rows: Vec<Vec<f64>> = (0..n_states)
            .map(|_| {
                let raw: Vec<f64> = (0..n_actions).map(|_| 0.1 + rng.random::<f64>()).collect();
                let sum: f64 = raw.iter().sum();
                raw.iter().map(|v| v / sum).collect()
            })
            .collect();
        let policy = TableauPolicy::new(rows).expect("rows normalized");
        let len = 1 + (rng.random::<u32>() % 12) as usize;
        let mut states = Vec::with_capacity(len + 1);
        let mut actions = Vec::with_capacity(len);
        for _ in 0..=len {
            states.push((rng.random::<u32>() as usize) % n_states);
        }
        for _ in 0..len {
            actions.push((rng.random::<u32>() as usize) % n_actions);
        }
        let parent = crate::mdp::Trajectory {
            states,
            actions,
            rewards: vec![0.0; len],
            terminated_at: None,
        };
        let alpha = 2.0 * rng.random::<f64>();
        let learned = ancestral_learning(&policy, &parent, alpha)?;
        let mixed = mixture_update(&policy, &empirical_parent_policy(&parent), alpha)?;
        for x in 0..n_states {
            for a in 0..n_actions {
                worst = worst.max((learned.prob(x, a) - mixed.prob(x, a)).abs());
            }
        }
    }
    let checks = vec![Check::new(
        format!("natgrad/max_row_discrepancy_over_{pairs}_pairs"),
        worst,
        1e-10,
    )];
    Ok(Report::from_checks("natgrad", checks))
}

/// Zeroth-order estimator unbiasedness on the quadratic black box.
fn zoo_unbiased_suite() -> Report {
    let objective = QuadraticBlackBox::new(2);
    let streams = Streams::new(0x7417);
    let est = zoo_gradient_estimate(
        &[1.0, 0.0],
        0.1,
        100_000,
        |theta| objective.reward(theta),
        &streams,
        0,
    );
    let expected = [-2.0, 0.0];
    let checks = expected
        .iter()
        .enumerate()
        .map(|(k, target)| {
            Check::new(
                format!("zoo_unbiased/coordinate_{k}_deviation_in_std_errors"),
                (est.gradient[k] - target).abs() / est.std_error[k],
                3.0,
            )
        })
        .collect();
    Report::from_checks("zoo_unbiased", checks)
}
