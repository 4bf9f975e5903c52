//! Concrete environments: the two-state tableau MDP, a self-contained
//! cart-pole simulation, and a synthetic quadratic black box for
//! estimator unit tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::{Environment, InitialState, MdpSpec, TransitionModel};

/// Two states, two actions: action 0 transits to the other state,
/// action 1 stays. Reward 1 while in state 0, else 0. Starts in state 0.
pub fn two_state_env(gamma: f64, horizon: usize) -> MdpSpec {
    MdpSpec::new(
        2,
        2,
        // r(x, a) = 1 iff x = x0, for both actions.
        vec![1.0, 1.0, 0.0, 0.0],
        // a0 swaps the state, a1 keeps it.
        TransitionModel::Deterministic(vec![1, 0, 0, 1]),
        InitialState::Fixed(0),
        gamma,
        horizon,
    )
    .expect("two-state spec is valid")
}

/// The two-state environment with its standard settings (gamma 0.9,
/// horizon 30).
pub fn two_state_default() -> MdpSpec {
    two_state_env(0.9, 30)
}

pub const CARTPOLE_OBS_DIM: usize = 4;

/// Cart-pole observation: cart position, cart velocity, pole angle,
/// pole angular velocity.
pub type CartPoleState = [f64; CARTPOLE_OBS_DIM];

/// Pole-balancing benchmark: a pole hinged on a friction-free cart, two
/// actions pushing the cart left or right with constant force, Euler
/// integration at 0.02 s. The episode ends when the pole tips past 12
/// degrees or the cart leaves the track; reward is 1 per surviving step.
#[derive(Debug, Clone)]
pub struct CartPoleEnv {
    pub gravity: f64,
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Half the pole's length.
    pub pole_half_length: f64,
    pub force_mag: f64,
    pub tau: f64,
    pub x_threshold: f64,
    pub theta_threshold: f64,
    pub reset_bound: f64,
    horizon: usize,
    gamma: f64,
}

impl Default for CartPoleEnv {
    fn default() -> Self {
        CartPoleEnv {
            gravity: 9.8,
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            force_mag: 10.0,
            tau: 0.02,
            x_threshold: 2.4,
            theta_threshold: 12.0 * std::f64::consts::PI / 180.0,
            reset_bound: 0.05,
            horizon: 500,
            gamma: 1.0,
        }
    }
}

impl CartPoleEnv {
    pub fn new(horizon: usize) -> Self {
        CartPoleEnv {
            horizon,
            ..CartPoleEnv::default()
        }
    }

    /// Duration-style returns use gamma = 1; other discounts are allowed
    /// for experimentation.
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn total_mass(&self) -> f64 {
        self.cart_mass + self.pole_mass
    }

    fn polemass_length(&self) -> f64 {
        self.pole_mass * self.pole_half_length
    }

    /// One Euler step; `action` 0 pushes left, 1 pushes right.
    /// Returns the next state, the per-step reward, and the done flag.
    pub fn step(&self, state: &CartPoleState, action: usize) -> (CartPoleState, f64, bool) {
        let [x, x_dot, theta, theta_dot] = *state;
        assert!(
            state.iter().all(|v| v.is_finite()),
            "non-finite cart-pole state"
        );
        let force = if action == 1 {
            self.force_mag
        } else {
            -self.force_mag
        };
        let cos_theta = theta.cos();
        let sin_theta = theta.sin();
        let temp = (force + self.polemass_length() * theta_dot * theta_dot * sin_theta)
            / self.total_mass();
        let theta_acc = (self.gravity * sin_theta - cos_theta * temp)
            / (self.pole_half_length
                * (4.0 / 3.0 - self.pole_mass * cos_theta * cos_theta / self.total_mass()));
        let x_acc = temp - self.polemass_length() * theta_acc * cos_theta / self.total_mass();
        let next = [
            x + self.tau * x_dot,
            x_dot + self.tau * x_acc,
            theta + self.tau * theta_dot,
            theta_dot + self.tau * theta_acc,
        ];
        let done = next[0].abs() > self.x_threshold || next[2].abs() > self.theta_threshold;
        (next, 1.0, done)
    }

    /// Initial state with every component uniform in the reset bound.
    pub fn reset(&self, rng: &mut ChaCha8Rng) -> CartPoleState {
        let b = self.reset_bound;
        [
            rng.random_range(-b..=b),
            rng.random_range(-b..=b),
            rng.random_range(-b..=b),
            rng.random_range(-b..=b),
        ]
    }

    pub fn out_of_bounds(&self, state: &CartPoleState) -> bool {
        state[0].abs() > self.x_threshold || state[2].abs() > self.theta_threshold
    }
}

/// A lifted transition plan for cart-pole reduces to the shared initial
/// state: the dynamics are deterministic.
#[derive(Debug, Clone, Copy)]
pub struct CartPolePlan {
    pub initial: CartPoleState,
}

impl Environment for CartPoleEnv {
    type State = CartPoleState;
    type Plan = CartPolePlan;

    fn action_count(&self) -> usize {
        2
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> CartPoleState {
        self.reset(rng)
    }

    fn reward(&self, _state: &CartPoleState, _action: usize) -> f64 {
        1.0
    }

    fn step_live(
        &self,
        state: &CartPoleState,
        action: usize,
        _rng: &mut ChaCha8Rng,
    ) -> CartPoleState {
        self.step(state, action).0
    }

    fn step_planned(
        &self,
        _plan: &CartPolePlan,
        _t: usize,
        state: &CartPoleState,
        action: usize,
    ) -> CartPoleState {
        self.step(state, action).0
    }

    fn plan_initial_state(&self, plan: &CartPolePlan) -> CartPoleState {
        plan.initial
    }

    fn sample_plan(&self, rng: &mut ChaCha8Rng) -> CartPolePlan {
        CartPolePlan {
            initial: self.reset(rng),
        }
    }

    fn is_terminal(&self, state: &CartPoleState) -> bool {
        self.out_of_bounds(state)
    }
}

/// Synthetic black-box objective `R(theta) = -||theta||^2`, maximized at
/// the origin. Anchors the zeroth-order estimator tests: the smoothed
/// gradient is exactly `-2 theta` for any noise scale.
#[derive(Debug, Clone)]
pub struct QuadraticBlackBox {
    pub dim: usize,
}

impl QuadraticBlackBox {
    pub fn new(dim: usize) -> Self {
        QuadraticBlackBox { dim }
    }

    pub fn reward(&self, theta: &[f64]) -> f64 {
        assert_eq!(theta.len(), self.dim, "dimension mismatch");
        -theta.iter().map(|t| t * t).sum::<f64>()
    }
}
