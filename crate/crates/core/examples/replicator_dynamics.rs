//! Infinite-population selection dynamics: frequencies are reweighted
//! by exp(beta * lambda) each generation, so the policy with the top
//! population fitness fixates. Stronger selection fixates faster.
//!
//! ```bash
//! cargo run --example replicator_dynamics
//! ```

use poprl::envs::two_state_env;
use poprl::oracle::{
    enumerate_paths, infinite_population_step, population_fitness, FrequencyVector,
};
use poprl::policy::TableauPolicy;

fn main() -> poprl::Result<()> {
    let env = two_state_env(0.9, 10);
    let beta = 1.0;
    // Three competing policies: always stay in x0, mostly stay, uniform.
    let policies = [
        TableauPolicy::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]])?,
        TableauPolicy::new(vec![vec![0.2, 0.8], vec![0.8, 0.2]])?,
        TableauPolicy::uniform(2, 2),
    ];
    let lambdas: Vec<f64> = policies
        .iter()
        .map(|p| {
            Ok(population_fitness(
                &enumerate_paths(&env, p, 10, 0.9)?,
                beta,
            ))
        })
        .collect::<poprl::Result<_>>()?;
    println!("population fitness per policy: {lambdas:.4?}\n");

    for beta in [0.5, 1.0, 2.0] {
        let mut freqs = FrequencyVector::uniform(3);
        let mut fixated_at = None;
        for step in 1..=200 {
            freqs = infinite_population_step(&freqs, &lambdas, beta);
            if fixated_at.is_none() && freqs.as_slice()[0] >= 1.0 - 1e-6 {
                fixated_at = Some(step);
            }
        }
        println!(
            "beta {beta:>3}: frequencies after 200 steps = {:.6?}, maximizer above 1 - 1e-6 at step {:?}",
            freqs.as_slice(),
            fixated_at
        );
    }
    Ok(())
}
