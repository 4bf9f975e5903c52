//! Walk through the enumeration oracle on a small MDP: path table,
//! population fitness, backward distribution, generalized values, the
//! KL-regularized Bellman recursion, and the variational bound.
//!
//! ```bash
//! cargo run --example oracle_identities
//! ```

use poprl::envs::two_state_env;
use poprl::oracle::{
    backward_distribution, backward_suffix_distribution, bellman_residual, enumerate_paths,
    enumerate_suffixes, generalized_v, population_fitness, variational_value,
};
use poprl::policy::TableauPolicy;

fn main() -> poprl::Result<()> {
    let horizon = 5;
    let gamma = 0.9;
    let beta = 1.0;
    let env = two_state_env(gamma, horizon);
    let policy = TableauPolicy::new(vec![vec![0.3, 0.7], vec![0.6, 0.4]])?;

    let table = enumerate_paths(&env, &policy, horizon, gamma)?;
    println!(
        "enumerated {} paths, total forward probability {:.12}",
        table.entries.len(),
        table.total_forward()
    );
    println!("expected return J        = {:.6}", table.expected_return());
    for b in [0.1, 1.0, 5.0] {
        println!(
            "population fitness (beta {b:>3}) = {:.6}",
            population_fitness(&table, b)
        );
    }

    let backward = backward_distribution(&table, beta);
    let mut top: Vec<_> = backward.entries.iter().collect();
    top.sort_by(|a, b| b.backward_prob.total_cmp(&a.backward_prob));
    println!("\nmost likely survivor lineages at beta = {beta}:");
    for e in top.iter().take(3) {
        println!(
            "  states {:?} actions {:?}: forward {:.4} -> backward {:.4} (return {:.3})",
            e.states, e.actions, e.forward_prob, e.backward_prob, e.ret
        );
    }

    println!("\ngeneralized values:");
    for t in 0..=horizon {
        let v0 = generalized_v(&env, &policy, horizon, gamma, t, 0, beta)?;
        println!("  V^{t}(x0) = {v0:.6}");
    }
    println!(
        "V^0(x0) equals the population fitness: {:.2e} residual",
        (generalized_v(&env, &policy, horizon, gamma, 0, 0, beta)?
            - population_fitness(&table, beta))
        .abs()
    );

    let residual = bellman_residual(&env, &policy, beta, gamma, horizon)?;
    println!("KL-regularized Bellman recursion residual: {residual:.3e}");

    // The backward suffix distribution maximizes the variational
    // objective; a perturbed distribution falls short.
    let suffixes = enumerate_suffixes(&env, &policy, horizon, gamma, 1, 1)?;
    let pb = backward_suffix_distribution(&suffixes, beta);
    let at_max = variational_value(&suffixes, &pb, beta)?;
    let vpop = generalized_v(&env, &policy, horizon, gamma, 1, 1, beta)?;
    let mut perturbed: Vec<f64> = pb
        .iter()
        .enumerate()
        .map(|(i, p)| p * (1.0 + 0.3 * ((i % 3) as f64 - 1.0)))
        .collect();
    let sum: f64 = perturbed.iter().sum();
    perturbed.iter_mut().for_each(|p| *p /= sum);
    let off_max = variational_value(&suffixes, &perturbed, beta)?;
    println!("\nvariational objective at (t=1, x1):");
    println!("  V_pop        = {vpop:.6}");
    println!("  at maximizer = {at_max:.6}");
    println!("  perturbed    = {off_max:.6} (must not exceed V_pop)");
    Ok(())
}
