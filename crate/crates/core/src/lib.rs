//! Population-based policy optimization toolkit.
//!
//! Three algorithms share one MDP core:
//!
//! - zeroth-order optimization: a single master policy updated from
//!   return-weighted parameter perturbations,
//! - population optimization via selection: Gaussian mutation plus
//!   fitness-proportional resampling,
//! - ancestral learning: selection survivors take a gradient step toward
//!   their parent's observed behavior instead of mutating, turning
//!   survivorship bias into a gradient estimate.
//!
//! An exact enumeration oracle over small finite MDPs verifies the
//! identities behind the third algorithm: the backward (survivor
//! lineage) path distribution, the population-fitness gradient, the
//! KL-regularized Bellman recursion of the generalized value, its
//! variational representation, and replicator fixation. A lifted-plan
//! mechanism provides common random numbers so stochastic environments
//! behave identically for agents that act identically.
//!
//! The `examples/` directory has one runnable program per capability;
//! the `poprl` binary exposes `run`, `verify`, and `aggregate`
//! subcommands for experiments.

pub mod algorithms;
pub mod envs;
pub mod error;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod verify;

pub use error::{Error, Result};
