//! Hierarchical RNG streams.
//!
//! Every random draw in the toolkit comes from a stream derived from
//! `(master seed, trial, generation, agent, purpose)`. Streams are
//! independent of scheduling, so parallel evaluation order can never
//! change results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a derived stream is used for. Distinct purposes get distinct
/// streams even for the same (trial, generation, agent) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    /// Initial policy parameters.
    Init,
    /// Parameter mutation / ZOO perturbation noise.
    Mutation,
    /// Action sampling during a rollout.
    Action,
    /// Environment stochasticity during a live rollout.
    Transition,
    /// Multinomial selection of the next generation.
    Selection,
    /// Sampling a shared transition plan for a generation.
    Plan,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Init => 1,
            Purpose::Mutation => 2,
            Purpose::Action => 3,
            Purpose::Transition => 4,
            Purpose::Selection => 5,
            Purpose::Plan => 6,
        }
    }
}

/// Draw an index from a (possibly unnormalized up to rounding) finite
/// distribution by inverse CDF.
pub(crate) fn sample_categorical(probs: &[f64], rng: &mut ChaCha8Rng) -> usize {
    use rand::Rng;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Factory for derived RNG streams rooted at a master seed.
#[derive(Debug, Clone, Copy)]
pub struct Streams {
    master_seed: u64,
    trial: u64,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Streams {
            master_seed,
            trial: 0,
        }
    }

    /// Streams for one trial of a multi-trial experiment.
    pub fn trial(self, trial: u64) -> Self {
        Streams {
            master_seed: self.master_seed,
            trial,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Stream for a given agent at a given generation. The coordinate
    /// tuple maps injectively onto the 32-byte ChaCha seed, so distinct
    /// coordinates can never collide.
    pub fn agent(&self, generation: u64, agent: u64, purpose: Purpose) -> ChaCha8Rng {
        debug_assert!(agent < 1 << 56, "agent index too large for seed packing");
        let mut seed = [0u8; 32];
        seed[0..8].copy_from_slice(&self.master_seed.to_le_bytes());
        seed[8..16].copy_from_slice(&self.trial.to_le_bytes());
        seed[16..24].copy_from_slice(&generation.to_le_bytes());
        seed[24..32].copy_from_slice(&((agent << 8) | purpose.tag()).to_le_bytes());
        ChaCha8Rng::from_seed(seed)
    }

    /// Stream shared by a whole generation (plan sampling, selection).
    pub fn generation(&self, generation: u64, purpose: Purpose) -> ChaCha8Rng {
        self.agent(generation, 0, purpose)
    }
}
