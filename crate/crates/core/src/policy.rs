//! Parametric policies, their log-probability gradients, the empirical
//! parent policy, and the parent-imitation update rules.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::Trajectory;
use crate::rng::sample_categorical;

const ROW_SUM_TOL: f64 = 1e-12;

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A parametric policy over a state type.
///
/// Policies are immutable values; every update returns a new policy.
pub trait Policy: Clone + Send + Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;

    fn action_count(&self) -> usize;

    /// Probability vector over actions in `state`.
    fn action_distribution(&self, state: &Self::State) -> Result<Vec<f64>>;

    /// Gradient of `log pi(action | state)` with respect to the flat
    /// parameter vector.
    fn log_prob_grad(&self, state: &Self::State, action: usize) -> Result<Vec<f64>>;

    fn param_len(&self) -> usize;

    fn flat_params(&self) -> Vec<f64>;

    /// Rebuild a policy of the same shape from a flat parameter vector.
    fn with_flat_params(&self, params: &[f64]) -> Result<Self>;

    fn sample_action(&self, state: &Self::State, rng: &mut ChaCha8Rng) -> Result<usize> {
        let probs = self.action_distribution(state)?;
        Ok(sample_categorical(&probs, rng))
    }

    /// Gaussian mutation in the policy's unconstrained parameter space.
    fn mutate(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let (params, _) = perturb_params(&self.flat_params(), sigma, rng);
        self.with_flat_params(&params)
            .expect("perturbed parameters have the original shape")
    }

    /// One parent-imitation step from the parent's trajectory.
    ///
    /// The default is a plain gradient step along the ancestral
    /// estimator; probability-parameter tableaus override this with the
    /// Fisher-preconditioned update.
    fn ancestral_update(&self, parent: &Trajectory<Self::State>, alpha: f64) -> Result<Self> {
        let grad = crate::algorithms::ancestral_gradient(self, parent)?;
        let params: Vec<f64> = self
            .flat_params()
            .iter()
            .zip(&grad)
            .map(|(p, g)| p + alpha * g)
            .collect();
        self.with_flat_params(&params)
    }
}

/// Add `sigma * eps` with standard-normal `eps` to a parameter vector.
/// Returns the perturbed parameters and the noise for gradient estimates.
pub fn perturb_params(params: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    assert!(
        sigma >= 0.0 && sigma.is_finite(),
        "noise scale must be >= 0"
    );
    let noise: Vec<f64> = (0..params.len())
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    let perturbed = params
        .iter()
        .zip(&noise)
        .map(|(p, e)| p + sigma * e)
        .collect();
    (perturbed, noise)
}

/// Per-state action probabilities; the parameters are the probabilities
/// themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauPolicy {
    probs: Vec<Vec<f64>>,
}

impl TableauPolicy {
    pub fn new(probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.is_empty() || probs[0].is_empty() {
            return Err(Error::InvalidInput("tableau must be non-empty".into()));
        }
        let n_actions = probs[0].len();
        for (x, row) in probs.iter().enumerate() {
            if row.len() != n_actions {
                return Err(Error::InvalidInput(format!(
                    "tableau row {x} has inconsistent length"
                )));
            }
            if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "tableau row {x} has a negative or non-finite entry"
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "tableau row {x} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(TableauPolicy { probs })
    }

    /// Uniform policy over `n_actions` in each of `n_states` states.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        let row = vec![1.0 / n_actions as f64; n_actions];
        TableauPolicy {
            probs: vec![row; n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probs
    }

    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs[state][action]
    }
}

impl Policy for TableauPolicy {
    type State = usize;

    fn action_count(&self) -> usize {
        self.probs[0].len()
    }

    fn action_distribution(&self, state: &usize) -> Result<Vec<f64>> {
        self.probs
            .get(*state)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("state {state} out of range")))
    }

    fn log_prob_grad(&self, state: &usize, action: usize) -> Result<Vec<f64>> {
        let row = self
            .probs
            .get(*state)
            .ok_or_else(|| Error::InvalidInput(format!("state {state} out of range")))?;
        let p = row[action];
        if p <= 0.0 {
            return Err(Error::SingularGradient {
                state: state.to_string(),
                action,
            });
        }
        let mut grad = vec![0.0; self.param_len()];
        grad[state * self.action_count() + action] = 1.0 / p;
        Ok(grad)
    }

    fn param_len(&self) -> usize {
        self.probs.len() * self.probs[0].len()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.probs.iter().flatten().copied().collect()
    }

    fn with_flat_params(&self, params: &[f64]) -> Result<Self> {
        let n_actions = self.action_count();
        if params.len() != self.param_len() {
            return Err(Error::InvalidInput("parameter length mismatch".into()));
        }
        TableauPolicy::new(params.chunks(n_actions).map(|c| c.to_vec()).collect())
    }

    /// Mutation perturbs each row in log space and renormalizes, so
    /// rows stay on the simplex.
    fn mutate(&self, sigma: f64, rng: &mut ChaCha8Rng) -> Self {
        let probs = self
            .probs
            .iter()
            .map(|row| {
                let noisy: Vec<f64> = row
                    .iter()
                    .map(|&p| {
                        let eps: f64 = rng.sample(StandardNormal);
                        p * (sigma * eps).exp()
                    })
                    .collect();
                let sum: f64 = noisy.iter().sum();
                noisy.iter().map(|v| v / sum).collect()
            })
            .collect();
        TableauPolicy { probs }
    }

    fn ancestral_update(&self, parent: &Trajectory<usize>, alpha: f64) -> Result<Self> {
        natural_gradient_tableau(self, parent, alpha)
    }
}

/// Tableau of unconstrained logits; actions are drawn from the softmax
/// of the state's row. This is the tableau parametrization used when an
/// algorithm perturbs parameters with unbounded noise.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxTableauPolicy {
    logits: Vec<Vec<f64>>,
}

impl SoftmaxTableauPolicy {
    pub fn new(logits: Vec<Vec<f64>>) -> Result<Self> {
        if logits.is_empty() || logits[0].is_empty() {
            return Err(Error::InvalidInput("tableau must be non-empty".into()));
        }
        let n_actions = logits[0].len();
        for row in &logits {
            if row.len() != n_actions {
                return Err(Error::InvalidInput("inconsistent row length".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite logit".into()));
            }
        }
        Ok(SoftmaxTableauPolicy { logits })
    }

    /// Zero logits: uniform action choice everywhere.
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        SoftmaxTableauPolicy {
            logits: vec![vec![0.0; n_actions]; n_states],
        }
    }

    fn softmax(row: &[f64]) -> Vec<f64> {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        exps.iter().map(|e| e / sum).collect()
    }
}

impl Policy for SoftmaxTableauPolicy {
    type State = usize;

    fn action_count(&self) -> usize {
        self.logits[0].len()
    }

    fn action_distribution(&self, state: &usize) -> Result<Vec<f64>> {
        self.logits
            .get(*state)
            .map(|row| Self::softmax(row))
            .ok_or_else(|| Error::InvalidInput(format!("state {state} out of range")))
    }

    fn log_prob_grad(&self, state: &usize, action: usize) -> Result<Vec<f64>> {
        let probs = self.action_distribution(state)?;
        if probs[action] <= 0.0 {
            return Err(Error::SingularGradient {
                state: state.to_string(),
                action,
            });
        }
        let n_actions = self.action_count();
        let mut grad = vec![0.0; self.param_len()];
        for (a, &p) in probs.iter().enumerate() {
            let indicator = if a == action { 1.0 } else { 0.0 };
            grad[state * n_actions + a] = indicator - p;
        }
        Ok(grad)
    }

    fn param_len(&self) -> usize {
        self.logits.len() * self.logits[0].len()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.logits.iter().flatten().copied().collect()
    }

    fn with_flat_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.param_len() {
            return Err(Error::InvalidInput("parameter length mismatch".into()));
        }
        let n_actions = self.action_count();
        SoftmaxTableauPolicy::new(params.chunks(n_actions).map(|c| c.to_vec()).collect())
    }
}

/// Observation dimension of the linear policy.
pub const OBS_DIM: usize = 4;

/// Binary-action linear policy: `pi(a0 | x) = sigmoid(theta . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSigmoidPolicy {
    theta: [f64; OBS_DIM],
}

impl LinearSigmoidPolicy {
    pub fn new(theta: [f64; OBS_DIM]) -> Self {
        LinearSigmoidPolicy { theta }
    }

    pub fn theta(&self) -> &[f64; OBS_DIM] {
        &self.theta
    }

    fn logit(&self, x: &[f64; OBS_DIM]) -> f64 {
        self.theta.iter().zip(x.iter()).map(|(t, v)| t * v).sum()
    }
}

impl Policy for LinearSigmoidPolicy {
    type State = [f64; OBS_DIM];

    fn action_count(&self) -> usize {
        2
    }

    fn action_distribution(&self, state: &[f64; OBS_DIM]) -> Result<Vec<f64>> {
        if state.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite observation".into()));
        }
        let p = sigmoid(self.logit(state));
        Ok(vec![p, 1.0 - p])
    }

    fn log_prob_grad(&self, state: &[f64; OBS_DIM], action: usize) -> Result<Vec<f64>> {
        let p = sigmoid(self.logit(state));
        let prob = if action == 0 { p } else { 1.0 - p };
        if prob <= 0.0 {
            return Err(Error::SingularGradient {
                state: format!("{state:?}"),
                action,
            });
        }
        let coeff = if action == 0 { 1.0 - p } else { -p };
        Ok(state.iter().map(|v| coeff * v).collect())
    }

    fn param_len(&self) -> usize {
        OBS_DIM
    }

    fn flat_params(&self) -> Vec<f64> {
        self.theta.to_vec()
    }

    fn with_flat_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != OBS_DIM {
            return Err(Error::InvalidInput("parameter length mismatch".into()));
        }
        let mut theta = [0.0; OBS_DIM];
        theta.copy_from_slice(params);
        Ok(LinearSigmoidPolicy { theta })
    }
}

/// Visit counts of one parent trajectory, with the derived joint and
/// per-state conditional action frequencies.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalParentPolicy {
    counts: BTreeMap<(usize, usize), usize>,
    state_counts: BTreeMap<usize, usize>,
    steps: usize,
}

impl EmpiricalParentPolicy {
    pub fn from_trajectory(parent: &Trajectory<usize>) -> Self {
        let mut counts = BTreeMap::new();
        let mut state_counts = BTreeMap::new();
        for (&x, a) in parent.steps() {
            *counts.entry((x, a)).or_insert(0) += 1;
            *state_counts.entry(x).or_insert(0) += 1;
        }
        EmpiricalParentPolicy {
            counts,
            state_counts,
            steps: parent.len(),
        }
    }

    /// Total recorded steps `T`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Joint frequency `count(x, a) / T`.
    pub fn joint(&self, state: usize, action: usize) -> f64 {
        if self.steps == 0 {
            return 0.0;
        }
        *self.counts.get(&(state, action)).unwrap_or(&0) as f64 / self.steps as f64
    }

    /// Conditional frequency `count(x, a) / count(x)` for visited states.
    pub fn conditional(&self, state: usize, action: usize) -> Option<f64> {
        let n = *self.state_counts.get(&state)?;
        Some(*self.counts.get(&(state, action)).unwrap_or(&0) as f64 / n as f64)
    }

    pub fn visit_count(&self, state: usize) -> usize {
        *self.state_counts.get(&state).unwrap_or(&0)
    }

    pub fn visited_states(&self) -> impl Iterator<Item = usize> + '_ {
        self.state_counts.keys().copied()
    }
}

/// Build the empirical parent policy of a trajectory.
pub fn empirical_parent_policy(parent: &Trajectory<usize>) -> EmpiricalParentPolicy {
    EmpiricalParentPolicy::from_trajectory(parent)
}

/// Mix a tableau policy with the parent's conditional action frequencies:
/// for every state the parent visited, `pi'(a|x) = (pi(a|x) + alpha *
/// pi_B(a|x)) / (1 + alpha)`. States the parent never visited are left
/// unchanged.
pub fn mixture_update(
    policy: &TableauPolicy,
    parent: &EmpiricalParentPolicy,
    alpha: f64,
) -> Result<TableauPolicy> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let n_actions = policy.action_count();
    let mut rows = policy.rows().to_vec();
    for x in parent.visited_states() {
        if x >= rows.len() {
            return Err(Error::InvalidInput(format!(
                "trajectory state {x} out of range for the tableau"
            )));
        }
        let mixed: Vec<f64> = (0..n_actions)
            .map(|a| rows[x][a] + alpha * parent.conditional(x, a).unwrap_or(0.0))
            .collect();
        let sum: f64 = mixed.iter().sum();
        rows[x] = mixed.iter().map(|v| v / sum).collect();
    }
    TableauPolicy::new(rows)
}

/// Fisher-preconditioned ancestral step for probability-parameter
/// tableaus.
///
/// For each visited state the per-step log-probability gradients are
/// accumulated under the state's empirical visit measure and multiplied
/// by the inverse Fisher metric of the conditional distribution
/// (`I(pi)_{a,a'} = delta_{a,a'} / pi(a|x)`); the row is then
/// renormalized. The result coincides with [`mixture_update`] at the
/// same step size.
pub fn natural_gradient_tableau(
    policy: &TableauPolicy,
    parent: &Trajectory<usize>,
    alpha: f64,
) -> Result<TableauPolicy> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidInput(format!(
            "alpha must be >= 0, got {alpha}"
        )));
    }
    let n_actions = policy.action_count();
    let n_params = policy.param_len();
    let mut visits = vec![0usize; policy.n_states()];
    for (&x, _) in parent.steps() {
        if x >= policy.n_states() {
            return Err(Error::InvalidInput(format!(
                "trajectory state {x} out of range for the tableau"
            )));
        }
        visits[x] += 1;
    }
    // Ancestral gradient with each step weighted by 1/N_x, the state's
    // empirical visit measure.
    let mut grad = vec![0.0; n_params];
    for (&x, a) in parent.steps() {
        let g = policy.log_prob_grad(&x, a)?;
        let w = 1.0 / visits[x] as f64;
        for (acc, gi) in grad.iter_mut().zip(&g) {
            *acc += w * gi;
        }
    }
    let mut rows = policy.rows().to_vec();
    for (x, row) in rows.iter_mut().enumerate() {
        if visits[x] == 0 {
            continue;
        }
        let stepped: Vec<f64> = row
            .iter()
            .enumerate()
            .map(|(a, &p)| p + alpha * p * grad[x * n_actions + a])
            .collect();
        let sum: f64 = stepped.iter().sum();
        *row = stepped.iter().map(|v| v / sum).collect();
    }
    TableauPolicy::new(rows)
}

/// Serializable checkpoint of a policy: family tag plus flat parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PolicyCheckpoint {
    Tableau {
        n_states: usize,
        n_actions: usize,
        params: Vec<f64>,
    },
    SoftmaxTableau {
        n_states: usize,
        n_actions: usize,
        params: Vec<f64>,
    },
    LinearSigmoid {
        params: Vec<f64>,
    },
}

impl PolicyCheckpoint {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

impl From<&TableauPolicy> for PolicyCheckpoint {
    fn from(p: &TableauPolicy) -> Self {
        PolicyCheckpoint::Tableau {
            n_states: p.n_states(),
            n_actions: p.action_count(),
            params: p.flat_params(),
        }
    }
}

impl From<&SoftmaxTableauPolicy> for PolicyCheckpoint {
    fn from(p: &SoftmaxTableauPolicy) -> Self {
        PolicyCheckpoint::SoftmaxTableau {
            n_states: p.logits.len(),
            n_actions: p.action_count(),
            params: p.flat_params(),
        }
    }
}

impl From<&LinearSigmoidPolicy> for PolicyCheckpoint {
    fn from(p: &LinearSigmoidPolicy) -> Self {
        PolicyCheckpoint::LinearSigmoid {
            params: p.flat_params(),
        }
    }
}

impl TryFrom<&PolicyCheckpoint> for TableauPolicy {
    type Error = Error;

    fn try_from(c: &PolicyCheckpoint) -> Result<Self> {
        match c {
            PolicyCheckpoint::Tableau {
                n_actions, params, ..
            } => TableauPolicy::new(params.chunks(*n_actions).map(|c| c.to_vec()).collect()),
            _ => Err(Error::InvalidInput("checkpoint is not a tableau".into())),
        }
    }
}

impl TryFrom<&PolicyCheckpoint> for SoftmaxTableauPolicy {
    type Error = Error;

    fn try_from(c: &PolicyCheckpoint) -> Result<Self> {
        match c {
            PolicyCheckpoint::SoftmaxTableau {
                n_actions, params, ..
            } => SoftmaxTableauPolicy::new(params.chunks(*n_actions).map(|c| c.to_vec()).collect()),
            _ => Err(Error::InvalidInput(
                "checkpoint is not a softmax tableau".into(),
            )),
        }
    }
}

impl TryFrom<&PolicyCheckpoint> for LinearSigmoidPolicy {
    type Error = Error;

    fn try_from(c: &PolicyCheckpoint) -> Result<Self> {
        match c {
            PolicyCheckpoint::LinearSigmoid { params } => {
                LinearSigmoidPolicy::new([0.0; OBS_DIM]).with_flat_params(params)
            }
            _ => Err(Error::InvalidInput(
                "checkpoint is not a linear sigmoid policy".into(),
            )),
        }
    }
}
