//! MDP abstraction, trajectory recording, discounted returns, and the
//! lifted-transition-plan machinery for common-random-numbers simulation.

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::policy::Policy;

/// Transition rule of a finite MDP.
#[derive(Debug, Clone)]
pub enum TransitionModel {
    /// `next[x * n_actions + a]` is the successor state.
    Deterministic(Vec<usize>),
    /// `kernel[x * n_actions + a]` is a distribution over successor states.
    Stochastic(Vec<Vec<f64>>),
}

/// Initial-state rule. The tableau experiments use a fixed start state;
/// a full distribution is available for generality.
#[derive(Debug, Clone)]
pub enum InitialState {
    Fixed(usize),
    Distribution(Vec<f64>),
}

/// A finite Markov decision process.
///
/// States and actions are dense indices. Rewards are a function of
/// `(state, action)`, transitions either a deterministic map or a
/// stochastic kernel.
#[derive(Debug, Clone)]
pub struct MdpSpec {
    n_states: usize,
    n_actions: usize,
    rewards: Vec<f64>,
    transition: TransitionModel,
    initial: InitialState,
    gamma: f64,
    horizon: usize,
    terminal: Option<Vec<bool>>,
}

const ROW_SUM_TOL: f64 = 1e-12;

impl MdpSpec {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        rewards: Vec<f64>,
        transition: TransitionModel,
        initial: InitialState,
        gamma: f64,
        horizon: usize,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidInput(
                "state and action spaces must be non-empty".into(),
            ));
        }
        if rewards.len() != n_states * n_actions {
            return Err(Error::InvalidInput(format!(
                "reward table has {} entries, expected {}",
                rewards.len(),
                n_states * n_actions
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "gamma must be in (0, 1], got {gamma}"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidInput("horizon must be >= 1".into()));
        }
        match &transition {
            TransitionModel::Deterministic(next) => {
                if next.len() != n_states * n_actions {
                    return Err(Error::InvalidInput("transition map has wrong size".into()));
                }
                if next.iter().any(|&x| x >= n_states) {
                    return Err(Error::InvalidInput("transition target out of range".into()));
                }
            }
            TransitionModel::Stochastic(kernel) => {
                if kernel.len() != n_states * n_actions {
                    return Err(Error::InvalidInput(
                        "kernel has wrong number of rows".into(),
                    ));
                }
                for (i, row) in kernel.iter().enumerate() {
                    if row.len() != n_states {
                        return Err(Error::InvalidInput(format!(
                            "kernel row {i} has wrong length"
                        )));
                    }
                    if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "kernel row {i} has a negative or non-finite entry"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::InvalidInput(format!(
                            "kernel row {i} sums to {sum}, expected 1"
                        )));
                    }
                }
            }
        }
        match &initial {
            InitialState::Fixed(x) => {
                if *x >= n_states {
                    return Err(Error::InvalidInput("initial state out of range".into()));
                }
            }
            InitialState::Distribution(p) => {
                if p.len() != n_states {
                    return Err(Error::InvalidInput(
                        "initial distribution has wrong length".into(),
                    ));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidInput(
                        "initial distribution does not sum to 1".into(),
                    ));
                }
            }
        }
        Ok(MdpSpec {
            n_states,
            n_actions,
            rewards,
            transition,
            initial,
            gamma,
            horizon,
            terminal: None,
        })
    }

    /// Mark a subset of states as terminal; a rollout stops upon entering one.
    pub fn with_terminal_states(mut self, terminal: Vec<bool>) -> Result<Self> {
        if terminal.len() != self.n_states {
            return Err(Error::InvalidInput(
                "terminal flags have wrong length".into(),
            ));
        }
        self.terminal = Some(terminal);
        Ok(self)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn reward_at(&self, state: usize, action: usize) -> f64 {
        self.rewards[state * self.n_actions + action]
    }

    pub fn transition_model(&self) -> &TransitionModel {
        &self.transition
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.transition, TransitionModel::Deterministic(_))
    }

    /// Deterministic successor, if this MDP has a deterministic rule.
    pub fn deterministic_next(&self, state: usize, action: usize) -> Option<usize> {
        match &self.transition {
            TransitionModel::Deterministic(next) => Some(next[state * self.n_actions + action]),
            TransitionModel::Stochastic(_) => None,
        }
    }

    /// Probability of `next` given `(state, action)`.
    pub fn transition_prob(&self, state: usize, action: usize, next: usize) -> f64 {
        match &self.transition {
            TransitionModel::Deterministic(map) => {
                if map[state * self.n_actions + action] == next {
                    1.0
                } else {
                    0.0
                }
            }
            TransitionModel::Stochastic(kernel) => kernel[state * self.n_actions + action][next],
        }
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    /// Initial-state probability (used by the enumeration oracle).
    pub fn initial_prob(&self, state: usize) -> f64 {
        match &self.initial {
            InitialState::Fixed(x) => {
                if *x == state {
                    1.0
                } else {
                    0.0
                }
            }
            InitialState::Distribution(p) => p[state],
        }
    }
}

use crate::rng::sample_categorical as sample_index;

/// Paired state/action history with per-step rewards.
///
/// `states` always has one more entry than `actions` and `rewards`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub states: Vec<S>,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Time index at which the episode hit a terminal state, if it did.
    pub terminated_at: Option<usize>,
}

impl<S> Trajectory<S> {
    /// Number of recorded steps.
    pub fn len(&self) -> usize {
        self.actions.len()
    }

    /// True when no step was recorded.
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Iterate over `(state, action)` pairs of recorded steps.
    pub fn steps(&self) -> impl Iterator<Item = (&S, usize)> {
        self.states.iter().zip(self.actions.iter().copied())
    }
}

/// Discounted cumulative reward over the recorded steps.
pub fn discounted_return<S>(trajectory: &Trajectory<S>, gamma: f64) -> Result<f64> {
    if trajectory.is_empty() {
        return Err(Error::InvalidInput(
            "cannot compute the return of an empty trajectory".into(),
        ));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "gamma must be in (0, 1], got {gamma}"
        )));
    }
    let mut total = 0.0;
    let mut weight = 1.0;
    for &r in &trajectory.rewards {
        total += weight * r;
        weight *= gamma;
    }
    Ok(total)
}

/// A sampled initial state plus per-time deterministic transition maps.
///
/// Sampling a plan fixes every transition the environment could make, so
/// agents sharing a plan see action-dependent deterministic states: the
/// same `(t, x, a)` always lands in the same successor.
#[derive(Debug, Clone)]
pub struct LiftedPlan {
    initial_state: usize,
    n_actions: usize,
    /// `maps[t][x * n_actions + a]` is the successor at time `t`.
    maps: Vec<Vec<usize>>,
}

impl LiftedPlan {
    pub fn initial_state(&self) -> usize {
        self.initial_state
    }

    pub fn horizon(&self) -> usize {
        self.maps.len()
    }

    /// Successor fixed by the plan for `(t, x, a)`.
    pub fn next(&self, t: usize, state: usize, action: usize) -> usize {
        self.maps[t][state * self.n_actions + action]
    }
}

/// Draw a transition plan: the initial state plus, for every time step,
/// an independent realization of the kernel at every `(x, a)` pair.
/// Deterministic environments yield the trivial plan equal to their map.
pub fn sample_lifted_plan(env: &MdpSpec, horizon: usize, rng: &mut ChaCha8Rng) -> LiftedPlan {
    let initial_state = match env.initial() {
        InitialState::Fixed(x) => *x,
        InitialState::Distribution(p) => sample_index(p, rng),
    };
    let pairs = env.n_states() * env.n_actions();
    let maps = (0..horizon)
        .map(|_| {
            (0..pairs)
                .map(|idx| match env.transition_model() {
                    TransitionModel::Deterministic(next) => next[idx],
                    TransitionModel::Stochastic(kernel) => sample_index(&kernel[idx], rng),
                })
                .collect()
        })
        .collect();
    LiftedPlan {
        initial_state,
        n_actions: env.n_actions(),
        maps,
    }
}

/// Environments the population algorithms can drive.
///
/// Implementations are immutable specs; per-rollout state lives inside
/// the rollout call, so instances are safe to share across threads.
pub trait Environment: Sync {
    type State: Clone + Send + Sync + std::fmt::Debug;
    /// Frozen per-generation transition randomness (common random numbers).
    type Plan: Clone + Send + Sync;

    fn action_count(&self) -> usize;
    fn gamma(&self) -> f64;
    fn horizon(&self) -> usize;
    fn initial_state(&self, rng: &mut ChaCha8Rng) -> Self::State;
    fn reward(&self, state: &Self::State, action: usize) -> f64;
    fn step_live(&self, state: &Self::State, action: usize, rng: &mut ChaCha8Rng) -> Self::State;
    fn step_planned(
        &self,
        plan: &Self::Plan,
        t: usize,
        state: &Self::State,
        action: usize,
    ) -> Self::State;
    fn plan_initial_state(&self, plan: &Self::Plan) -> Self::State;
    fn sample_plan(&self, rng: &mut ChaCha8Rng) -> Self::Plan;
    fn is_terminal(&self, _state: &Self::State) -> bool {
        false
    }
}

impl Environment for MdpSpec {
    type State = usize;
    type Plan = LiftedPlan;

    fn action_count(&self) -> usize {
        self.n_actions
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> usize {
        match &self.initial {
            InitialState::Fixed(x) => *x,
            InitialState::Distribution(p) => sample_index(p, rng),
        }
    }

    fn reward(&self, state: &usize, action: usize) -> f64 {
        self.reward_at(*state, action)
    }

    fn step_live(&self, state: &usize, action: usize, rng: &mut ChaCha8Rng) -> usize {
        match &self.transition {
            TransitionModel::Deterministic(next) => next[state * self.n_actions + action],
            TransitionModel::Stochastic(kernel) => {
                sample_index(&kernel[state * self.n_actions + action], rng)
            }
        }
    }

    fn step_planned(&self, plan: &LiftedPlan, t: usize, state: &usize, action: usize) -> usize {
        plan.next(t, *state, action)
    }

    fn plan_initial_state(&self, plan: &LiftedPlan) -> usize {
        plan.initial_state()
    }

    fn sample_plan(&self, rng: &mut ChaCha8Rng) -> LiftedPlan {
        sample_lifted_plan(self, self.horizon, rng)
    }

    fn is_terminal(&self, state: &usize) -> bool {
        self.terminal.as_ref().is_some_and(|t| t[*state])
    }
}

/// Where a rollout takes its transition randomness from.
pub enum TransitionSource<'a, E: Environment + ?Sized> {
    /// Draw transitions live from the per-rollout stream.
    Live,
    /// Follow a frozen plan shared across rollouts.
    Plan(&'a E::Plan),
}

impl<'a, E: Environment + ?Sized> Clone for TransitionSource<'a, E> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<'a, E: Environment + ?Sized> Copy for TransitionSource<'a, E> {}

/// Run one episode of at most `horizon` steps.
///
/// Action sampling always draws from `rng`; transition randomness comes
/// from `rng` or from the plan depending on `source`. With a plan, the
/// initial state is the plan's.
pub fn rollout<P, E>(
    policy: &P,
    env: &E,
    horizon: usize,
    source: TransitionSource<'_, E>,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory<E::State>>
where
    P: Policy<State = E::State>,
    E: Environment,
{
    if policy.action_count() != env.action_count() {
        return Err(Error::Config(format!(
            "policy has {} actions but environment has {}",
            policy.action_count(),
            env.action_count()
        )));
    }
    let mut state = match source {
        TransitionSource::Live => env.initial_state(rng),
        TransitionSource::Plan(plan) => env.plan_initial_state(plan),
    };
    let mut states = Vec::with_capacity(horizon + 1);
    let mut actions = Vec::with_capacity(horizon);
    let mut rewards = Vec::with_capacity(horizon);
    let mut terminated_at = None;
    states.push(state.clone());
    for t in 0..horizon {
        if env.is_terminal(&state) {
            terminated_at = Some(t);
            break;
        }
        let action = policy.sample_action(&state, rng)?;
        let reward = env.reward(&state, action);
        let next = match source {
            TransitionSource::Live => env.step_live(&state, action, rng),
            TransitionSource::Plan(plan) => env.step_planned(plan, t, &state, action),
        };
        actions.push(action);
        rewards.push(reward);
        states.push(next.clone());
        state = next;
    }
    Ok(Trajectory {
        states,
        actions,
        rewards,
        terminated_at,
    })
}
