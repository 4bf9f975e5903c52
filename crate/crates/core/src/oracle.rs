//! Exact enumeration over small finite MDPs.
//!
//! Enumerates every (state, action) history with its forward probability,
//! return, and exponentially reweighted backward probability, and builds
//! the population-fitness, gradient, generalized-value, and replicator
//! quantities from the table. Everything here is an oracle: small, exact,
//! and independent of the sampling-based algorithm implementations it is
//! used to check.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{LiftedPlan, MdpSpec, TransitionModel};
use crate::policy::{Policy, TableauPolicy};

/// Enumeration guard: tables larger than this are refused.
pub const MAX_PATHS: usize = 1_000_000;

/// One complete history with its probabilities and return.
#[derive(Debug, Clone)]
pub struct PathEntry {
    pub states: Vec<usize>,
    pub actions: Vec<usize>,
    /// Probability that the policy generates this history.
    pub forward_prob: f64,
    /// Discounted cumulative reward of the history.
    pub ret: f64,
    /// Survivor-lineage probability, zero until populated.
    pub backward_prob: f64,
}

/// Exhaustive table of positive-probability histories.
#[derive(Debug, Clone)]
pub struct PathTable {
    pub entries: Vec<PathEntry>,
    pub horizon: usize,
    pub gamma: f64,
}

impl PathTable {
    pub fn total_forward(&self) -> f64 {
        self.entries.iter().map(|e| e.forward_prob).sum()
    }

    pub fn total_backward(&self) -> f64 {
        self.entries.iter().map(|e| e.backward_prob).sum()
    }

    /// Plain expected return `J` under the forward distribution.
    pub fn expected_return(&self) -> f64 {
        self.entries.iter().map(|e| e.forward_prob * e.ret).sum()
    }
}

/// Enumerate all histories of length `horizon` with positive probability.
pub fn enumerate_paths<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
) -> Result<PathTable>
where
    P: Policy<State = usize>,
{
    let mut entries = Vec::new();
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    for x0 in 0..env.n_states() {
        let p0 = env.initial_prob(x0);
        if p0 <= 0.0 {
            continue;
        }
        states.push(x0);
        extend_paths(
            env,
            policy,
            horizon,
            gamma,
            p0,
            0.0,
            1.0,
            &mut states,
            &mut actions,
            &mut entries,
        )?;
        states.pop();
    }
    Ok(PathTable {
        entries,
        horizon,
        gamma,
    })
}

#[allow(clippy::too_many_arguments)]
fn extend_paths<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
    prob: f64,
    ret: f64,
    discount: f64,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    entries: &mut Vec<PathEntry>,
) -> Result<()>
where
    P: Policy<State = usize>,
{
    if actions.len() == horizon {
        if entries.len() >= MAX_PATHS {
            return Err(Error::ResourceLimit { limit: MAX_PATHS });
        }
        entries.push(PathEntry {
            states: states.clone(),
            actions: actions.clone(),
            forward_prob: prob,
            ret,
            backward_prob: 0.0,
        });
        return Ok(());
    }
    let x = *states.last().expect("path has a current state");
    let action_probs = policy.action_distribution(&x)?;
    for (a, &pa) in action_probs.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let r = env.reward_at(x, a);
        for next in 0..env.n_states() {
            let pt = env.transition_prob(x, a, next);
            if pt <= 0.0 {
                continue;
            }
            states.push(next);
            actions.push(a);
            extend_paths(
                env,
                policy,
                horizon,
                gamma,
                prob * pa * pt,
                ret + discount * r,
                discount * gamma,
                states,
                actions,
                entries,
            )?;
            states.pop();
            actions.pop();
        }
    }
    Ok(())
}

/// Log-sum-exp of `log w_i + beta * r_i` style terms, max-shifted.
fn log_sum_exp_weighted(pairs: impl Iterator<Item = (f64, f64)> + Clone, beta: f64) -> f64 {
    let max = pairs
        .clone()
        .map(|(_, r)| r)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = pairs.map(|(w, r)| w * (beta * (r - max)).exp()).sum();
    beta * max + sum.ln()
}

/// Population fitness `lambda = (1/beta) log E[exp(beta R)]`, computed
/// with a max shift. `beta = 0` returns the expected return, the
/// continuous limit.
pub fn population_fitness(table: &PathTable, beta: f64) -> f64 {
    assert!(beta >= 0.0 && beta.is_finite(), "beta must be >= 0");
    if beta == 0.0 {
        return table.expected_return();
    }
    log_sum_exp_weighted(table.entries.iter().map(|e| (e.forward_prob, e.ret)), beta) / beta
}

/// Reweight the forward distribution by `exp(beta R)` and normalize.
pub fn backward_distribution(table: &PathTable, beta: f64) -> PathTable {
    let max = table
        .entries
        .iter()
        .map(|e| e.ret)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = table
        .entries
        .iter()
        .map(|e| e.forward_prob * (beta * (e.ret - max)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    let mut out = table.clone();
    for (entry, w) in out.entries.iter_mut().zip(&weights) {
        entry.backward_prob = w / z;
    }
    out
}

/// Which route computes the population-fitness gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradMethod {
    /// Exact expectation of summed log-policy gradients under the
    /// backward distribution.
    Backward,
    /// Central finite differences along the simplex tangent (perturb one
    /// entry, renormalize the row).
    FiniteDifference,
}

const FD_STEP: f64 = 1e-5;

/// Project a raw per-entry gradient onto the simplex tangent of each
/// tableau row, the coordinates finite differences measure in.
fn project_rows(policy: &TableauPolicy, raw: &[f64]) -> Vec<f64> {
    let n_actions = policy.action_count();
    let mut out = vec![0.0; raw.len()];
    for x in 0..policy.n_states() {
        let row_mean: f64 = (0..n_actions)
            .map(|a| policy.prob(x, a) * raw[x * n_actions + a])
            .sum();
        for a in 0..n_actions {
            out[x * n_actions + a] = raw[x * n_actions + a] - row_mean;
        }
    }
    out
}

/// Gradient of the population fitness with respect to the tableau
/// probabilities, in simplex-tangent coordinates.
pub fn grad_lambda(
    env: &MdpSpec,
    policy: &TableauPolicy,
    horizon: usize,
    gamma: f64,
    beta: f64,
    method: GradMethod,
) -> Result<Vec<f64>> {
    match method {
        GradMethod::Backward => {
            let table = backward_distribution(&enumerate_paths(env, policy, horizon, gamma)?, beta);
            let raw = backward_log_grad_expectation(policy, &table)?;
            let scaled: Vec<f64> = raw.iter().map(|g| g / beta).collect();
            Ok(project_rows(policy, &scaled))
        }
        GradMethod::FiniteDifference => {
            let n_actions = policy.action_count();
            let mut grad = vec![0.0; policy.param_len()];
            for x in 0..policy.n_states() {
                for a in 0..n_actions {
                    let up = perturb_row(policy, x, a, FD_STEP)?;
                    let dn = perturb_row(policy, x, a, -FD_STEP)?;
                    let lp = population_fitness(&enumerate_paths(env, &up, horizon, gamma)?, beta);
                    let lm = population_fitness(&enumerate_paths(env, &dn, horizon, gamma)?, beta);
                    grad[x * n_actions + a] = (lp - lm) / (2.0 * FD_STEP);
                }
            }
            Ok(grad)
        }
    }
}

/// Expectation under the table's backward distribution of the summed
/// log-policy gradients along the path.
pub fn backward_log_grad_expectation<P>(policy: &P, table: &PathTable) -> Result<Vec<f64>>
where
    P: Policy<State = usize>,
{
    let mut acc = vec![0.0; policy.param_len()];
    for entry in &table.entries {
        if entry.backward_prob == 0.0 {
            continue;
        }
        for (&x, a) in entry.states.iter().zip(entry.actions.iter().copied()) {
            let g = policy.log_prob_grad(&x, a)?;
            for (s, gi) in acc.iter_mut().zip(&g) {
                *s += entry.backward_prob * gi;
            }
        }
    }
    Ok(acc)
}

fn perturb_row(policy: &TableauPolicy, x: usize, a: usize, h: f64) -> Result<TableauPolicy> {
    let mut rows = policy.rows().to_vec();
    rows[x][a] += h;
    if rows[x][a] <= 0.0 {
        return Err(Error::InvalidInput(
            "finite-difference step crossed zero".into(),
        ));
    }
    let sum: f64 = rows[x].iter().sum();
    for v in rows[x].iter_mut() {
        *v /= sum;
    }
    TableauPolicy::new(rows)
}

/// One suffix history starting at a fixed `(t, x)`.
#[derive(Debug, Clone)]
pub struct SuffixEntry {
    /// States from time `t` through the horizon.
    pub states: Vec<usize>,
    /// Actions from time `t` through `horizon - 1`.
    pub actions: Vec<usize>,
    pub forward_prob: f64,
    /// Suffix return with absolute-time discounting `sum_{s>=t} gamma^s r_s`.
    pub ret: f64,
}

/// All positive-probability suffix histories from `(t, x)`.
#[derive(Debug, Clone)]
pub struct SuffixTable {
    pub entries: Vec<SuffixEntry>,
    pub t: usize,
    pub state: usize,
}

/// Enumerate suffixes of a path table's process from `(t, x)`.
pub fn enumerate_suffixes<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
    t: usize,
    x: usize,
) -> Result<SuffixTable>
where
    P: Policy<State = usize>,
{
    if t > horizon {
        return Err(Error::InvalidInput(format!(
            "suffix time {t} exceeds horizon {horizon}"
        )));
    }
    let mut entries = Vec::new();
    let mut states = vec![x];
    let mut actions = Vec::new();
    extend_suffixes(
        env,
        policy,
        horizon,
        gamma,
        t,
        1.0,
        0.0,
        gamma.powi(t as i32),
        &mut states,
        &mut actions,
        &mut entries,
    )?;
    Ok(SuffixTable {
        entries,
        t,
        state: x,
    })
}

#[allow(clippy::too_many_arguments)]
fn extend_suffixes<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
    t: usize,
    prob: f64,
    ret: f64,
    discount: f64,
    states: &mut Vec<usize>,
    actions: &mut Vec<usize>,
    entries: &mut Vec<SuffixEntry>,
) -> Result<()>
where
    P: Policy<State = usize>,
{
    if t + actions.len() == horizon {
        if entries.len() >= MAX_PATHS {
            return Err(Error::ResourceLimit { limit: MAX_PATHS });
        }
        entries.push(SuffixEntry {
            states: states.clone(),
            actions: actions.clone(),
            forward_prob: prob,
            ret,
        });
        return Ok(());
    }
    let x = *states.last().expect("suffix has a current state");
    for (a, &pa) in policy.action_distribution(&x)?.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let r = env.reward_at(x, a);
        for next in 0..env.n_states() {
            let pt = env.transition_prob(x, a, next);
            if pt <= 0.0 {
                continue;
            }
            states.push(next);
            actions.push(a);
            extend_suffixes(
                env,
                policy,
                horizon,
                gamma,
                t,
                prob * pa * pt,
                ret + discount * r,
                discount * gamma,
                states,
                actions,
                entries,
            )?;
            states.pop();
            actions.pop();
        }
    }
    Ok(())
}

/// States reachable at each time under the policy's support.
pub fn reachable_sets<P>(env: &MdpSpec, policy: &P, horizon: usize) -> Result<Vec<Vec<bool>>>
where
    P: Policy<State = usize>,
{
    let n = env.n_states();
    let mut sets = Vec::with_capacity(horizon + 1);
    let mut current: Vec<bool> = (0..n).map(|x| env.initial_prob(x) > 0.0).collect();
    sets.push(current.clone());
    for _ in 0..horizon {
        let mut next = vec![false; n];
        for (x, _) in current.iter().enumerate().filter(|(_, &reached)| reached) {
            for (a, &pa) in policy.action_distribution(&x)?.iter().enumerate() {
                if pa <= 0.0 {
                    continue;
                }
                for (y, flag) in next.iter_mut().enumerate() {
                    if env.transition_prob(x, a, y) > 0.0 {
                        *flag = true;
                    }
                }
            }
        }
        sets.push(next.clone());
        current = next;
    }
    Ok(sets)
}

/// Generalized value at `(t, x)`: the log-sum-exp of suffix returns
/// under the forward distribution conditioned on being at `x` at `t`.
pub fn generalized_v<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
    t: usize,
    x: usize,
    beta: f64,
) -> Result<f64>
where
    P: Policy<State = usize>,
{
    let reachable = reachable_sets(env, policy, horizon)?;
    if t > horizon || !reachable[t][x] {
        return Err(Error::Unreachable { time: t, state: x });
    }
    if t == horizon {
        return Ok(0.0);
    }
    let table = enumerate_suffixes(env, policy, horizon, gamma, t, x)?;
    Ok(log_sum_exp_weighted(table.entries.iter().map(|e| (e.forward_prob, e.ret)), beta) / beta)
}

/// Marginal backward action distribution at `(t, x)`: suffix backward
/// mass grouped by the first action.
pub fn backward_action_distribution(
    suffixes: &SuffixTable,
    n_actions: usize,
    beta: f64,
) -> Vec<f64> {
    let max = suffixes
        .entries
        .iter()
        .map(|e| e.ret)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut mass = vec![0.0; n_actions];
    for e in &suffixes.entries {
        mass[e.actions[0]] += e.forward_prob * (beta * (e.ret - max)).exp();
    }
    let z: f64 = mass.iter().sum();
    mass.iter().map(|m| m / z).collect()
}

/// Maximum absolute residual of the KL-regularized Bellman recursion
/// over all reachable `(t, x)` pairs.
///
/// The left side is the generalized value; the right side averages, under
/// the backward action marginal, the discounted instantaneous reward, the
/// log-ratio penalty against the policy, and the next generalized value.
pub fn bellman_residual<P>(
    env: &MdpSpec,
    policy: &P,
    beta: f64,
    gamma: f64,
    horizon: usize,
) -> Result<f64>
where
    P: Policy<State = usize>,
{
    if !env.is_deterministic() {
        return Err(Error::RequiresDeterministic);
    }
    let reachable = reachable_sets(env, policy, horizon)?;
    let mut values: HashMap<(usize, usize), f64> = HashMap::new();
    for t in (0..=horizon).rev() {
        for x in (0..env.n_states()).filter(|&x| reachable[t][x]) {
            let v = if t == horizon {
                0.0
            } else {
                let table = enumerate_suffixes(env, policy, horizon, gamma, t, x)?;
                log_sum_exp_weighted(table.entries.iter().map(|e| (e.forward_prob, e.ret)), beta)
                    / beta
            };
            values.insert((t, x), v);
        }
    }
    let mut max_residual: f64 = 0.0;
    for t in 0..horizon {
        for x in (0..env.n_states()).filter(|&x| reachable[t][x]) {
            let lhs = values[&(t, x)];
            let suffixes = enumerate_suffixes(env, policy, horizon, gamma, t, x)?;
            let pb = backward_action_distribution(&suffixes, env.n_actions(), beta);
            let pi = policy.action_distribution(&x)?;
            let discount = gamma.powi(t as i32);
            let mut rhs = 0.0;
            for (a, &pba) in pb.iter().enumerate() {
                if pba <= 0.0 {
                    continue;
                }
                let next = env
                    .deterministic_next(x, a)
                    .expect("deterministic transitions checked above");
                rhs += pba
                    * (discount * env.reward_at(x, a) - (pba / pi[a]).ln() / beta
                        + values[&(t + 1, next)]);
            }
            max_residual = max_residual.max((lhs - rhs).abs());
        }
    }
    Ok(max_residual)
}

/// Value of the variational objective `E_P[R] - KL(P || P_F) / beta`
/// for an arbitrary suffix distribution `P` given as probabilities
/// aligned with the suffix table's entries.
pub fn variational_value(suffixes: &SuffixTable, p: &[f64], beta: f64) -> Result<f64> {
    if p.len() != suffixes.entries.len() {
        return Err(Error::InvalidInput(format!(
            "distribution has {} entries, table has {}",
            p.len(),
            suffixes.entries.len()
        )));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| !v.is_finite() || v < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "suffix distribution is not a probability vector".into(),
        ));
    }
    let total_forward: f64 = suffixes.entries.iter().map(|e| e.forward_prob).sum();
    let mut expected = 0.0;
    let mut kl = 0.0;
    for (pi, e) in p.iter().zip(&suffixes.entries) {
        if *pi == 0.0 {
            continue;
        }
        // The table's forward probabilities are conditional on (t, x).
        let q = e.forward_prob / total_forward;
        if q <= 0.0 {
            return Err(Error::Divergence);
        }
        expected += pi * e.ret;
        kl += pi * (pi / q).ln();
    }
    Ok(expected - kl / beta)
}

/// Backward suffix distribution, the maximizer of the variational
/// objective, aligned with the table's entries.
pub fn backward_suffix_distribution(suffixes: &SuffixTable, beta: f64) -> Vec<f64> {
    let max = suffixes
        .entries
        .iter()
        .map(|e| e.ret)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = suffixes
        .entries
        .iter()
        .map(|e| e.forward_prob * (beta * (e.ret - max)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    weights.iter().map(|w| w / z).collect()
}

/// A frequency vector over a finite policy set.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector(Vec<f64>);

impl FrequencyVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidInput(
                "frequencies must be non-negative".into(),
            ));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "frequencies sum to {sum}, expected 1"
            )));
        }
        Ok(FrequencyVector(p))
    }

    pub fn uniform(n: usize) -> Self {
        FrequencyVector(vec![1.0 / n as f64; n])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// One replicator step: each policy's frequency is reweighted by
/// `exp(beta * lambda)` and renormalized.
pub fn infinite_population_step(
    freqs: &FrequencyVector,
    lambdas: &[f64],
    beta: f64,
) -> FrequencyVector {
    assert_eq!(freqs.0.len(), lambdas.len(), "length mismatch");
    let max = lambdas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = freqs
        .0
        .iter()
        .zip(lambdas)
        .map(|(p, l)| p * (beta * (l - max)).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    FrequencyVector(weights.iter().map(|w| w / z).collect())
}

/// Exact population fitness of a policy under a fixed transition plan.
/// The plan makes the environment deterministic, so the enumeration is
/// over action sequences only.
pub fn plan_population_fitness<P>(
    env: &MdpSpec,
    policy: &P,
    plan: &LiftedPlan,
    horizon: usize,
    gamma: f64,
    beta: f64,
) -> Result<f64>
where
    P: Policy<State = usize>,
{
    let mut terms: Vec<(f64, f64)> = Vec::new();
    walk_plan(
        env,
        policy,
        plan,
        horizon,
        gamma,
        0,
        plan.initial_state(),
        1.0,
        0.0,
        1.0,
        &mut terms,
    )?;
    Ok(log_sum_exp_weighted(terms.iter().copied(), beta) / beta)
}

#[allow(clippy::too_many_arguments)]
fn walk_plan<P>(
    env: &MdpSpec,
    policy: &P,
    plan: &LiftedPlan,
    horizon: usize,
    gamma: f64,
    t: usize,
    x: usize,
    prob: f64,
    ret: f64,
    discount: f64,
    terms: &mut Vec<(f64, f64)>,
) -> Result<()>
where
    P: Policy<State = usize>,
{
    if t == horizon {
        if terms.len() >= MAX_PATHS {
            return Err(Error::ResourceLimit { limit: MAX_PATHS });
        }
        terms.push((prob, ret));
        return Ok(());
    }
    for (a, &pa) in policy.action_distribution(&x)?.iter().enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let next = plan.next(t, x, a);
        walk_plan(
            env,
            policy,
            plan,
            horizon,
            gamma,
            t + 1,
            next,
            prob * pa,
            ret + discount * env.reward_at(x, a),
            discount * gamma,
            terms,
        )?;
    }
    Ok(())
}

/// Monte-Carlo average over sampled plans of the exact per-plan
/// population fitness. Returns the estimate and its standard error.
pub fn averaged_population_fitness<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
    beta: f64,
    n_plans: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64)>
where
    P: Policy<State = usize>,
{
    if n_plans < 2 {
        return Err(Error::InvalidInput("need at least two plans".into()));
    }
    let mut values = Vec::with_capacity(n_plans);
    for _ in 0..n_plans {
        let plan = crate::mdp::sample_lifted_plan(env, horizon, rng);
        values.push(plan_population_fitness(
            env, policy, &plan, horizon, gamma, beta,
        )?);
    }
    let mean = values.iter().sum::<f64>() / n_plans as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n_plans as f64 - 1.0);
    Ok((mean, (var / n_plans as f64).sqrt()))
}

/// Exact expected return by forward dynamic programming over the state
/// distribution; no enumeration guard needed.
pub fn exact_expected_return<P>(
    env: &MdpSpec,
    policy: &P,
    horizon: usize,
    gamma: f64,
) -> Result<f64>
where
    P: Policy<State = usize>,
{
    let n = env.n_states();
    let mut dist: Vec<f64> = (0..n).map(|x| env.initial_prob(x)).collect();
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..horizon {
        let mut next = vec![0.0; n];
        for x in 0..n {
            if dist[x] == 0.0 {
                continue;
            }
            let probs = policy.action_distribution(&x)?;
            for (a, &pa) in probs.iter().enumerate() {
                if pa <= 0.0 {
                    continue;
                }
                total += discount * dist[x] * pa * env.reward_at(x, a);
                match env.transition_model() {
                    TransitionModel::Deterministic(map) => {
                        next[map[x * env.n_actions() + a]] += dist[x] * pa;
                    }
                    TransitionModel::Stochastic(kernel) => {
                        for (y, &pt) in kernel[x * env.n_actions() + a].iter().enumerate() {
                            next[y] += dist[x] * pa * pt;
                        }
                    }
                }
            }
        }
        dist = next;
        discount *= gamma;
    }
    Ok(total)
}

/// Draw a small random instance: 2-3 states, two actions, deterministic
/// transitions, rewards in [0, 1], and a tableau policy with every entry
/// bounded away from zero.
pub fn random_small_instance(
    rng: &mut ChaCha8Rng,
    horizon: usize,
    gamma: f64,
) -> (MdpSpec, TableauPolicy) {
    let n_states = 2 + (rng.random::<u32>() % 2) as usize;
    let n_actions = 2;
    let rewards: Vec<f64> = (0..n_states * n_actions)
        .map(|_| rng.random::<f64>())
        .collect();
    let next: Vec<usize> = (0..n_states * n_actions)
        .map(|_| (rng.random::<u32>() as usize) % n_states)
        .collect();
    let env = MdpSpec::new(
        n_states,
        n_actions,
        rewards,
        TransitionModel::Deterministic(next),
        crate::mdp::InitialState::Fixed(0),
        gamma,
        horizon,
    )
    .expect("random instance is valid");
    let rows: Vec<Vec<f64>> = (0..n_states)
        .map(|_| {
            let raw: Vec<f64> = (0..n_actions).map(|_| 0.25 + rng.random::<f64>()).collect();
            let sum: f64 = raw.iter().sum();
            raw.iter().map(|v| v / sum).collect()
        })
        .collect();
    let policy = TableauPolicy::new(rows).expect("rows normalized");
    (env, policy)
}
