//! Train a linear sigmoid policy to balance the cart-pole with
//! ancestral learning, then checkpoint the best policy as JSON.
//!
//! ```bash
//! cargo run --release --example cartpole_balancing
//! ```

use poprl::algorithms::{arl_iteration, HyperParams, Population};
use poprl::envs::CartPoleEnv;
use poprl::mdp::{discounted_return, rollout, TransitionSource};
use poprl::policy::{LinearSigmoidPolicy, PolicyCheckpoint};
use poprl::rng::{Purpose, Streams};
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> poprl::Result<()> {
    let env = CartPoleEnv::new(500);
    let hp = HyperParams {
        beta: 0.05,
        alpha: 1.0,
        sigma: 0.05,
        pop_size: 300,
        generations: 250,
        gamma: 1.0,
        horizon: 500,
        arl_mutation: false,
    };
    let streams = Streams::new(11);

    // Every agent starts from its own random parameters; diversity is
    // the population's only initial exploration resource.
    let policies = (0..hp.pop_size)
        .map(|i| {
            let mut rng = streams.agent(0, i as u64, Purpose::Init);
            let theta = std::array::from_fn(|_| 0.5 * rng.sample::<f64, _>(StandardNormal));
            LinearSigmoidPolicy::new(theta)
        })
        .collect();
    let mut pop = Population::from_policies(policies);

    for generation in 0..hp.generations {
        let (next, stats) = arl_iteration(&pop, &env, &hp, &streams, None)?;
        pop = next;
        if generation % 25 == 0 || generation + 1 == hp.generations {
            println!(
                "gen {generation:>3}: best {:>5.0}  mean {:>7.1}",
                stats.best_return, stats.mean_return
            );
        }
    }

    // Single-episode returns are noisy for a stochastic policy, so pick
    // the checkpoint by re-evaluating the top agents over fresh episodes.
    let evaluate = |policy: &LinearSigmoidPolicy, tag: u64| -> poprl::Result<f64> {
        let mut total = 0.0;
        for episode in 0..10 {
            let traj = rollout(
                policy,
                &env,
                500,
                TransitionSource::Live,
                &mut streams.agent(tag, episode, Purpose::Action),
            )?;
            total += discounted_return(&traj, 1.0)?;
        }
        Ok(total / 10.0)
    };
    let mut ranked: Vec<&_> = pop.agents.iter().collect();
    ranked.sort_by(|a, b| b.last_return.total_cmp(&a.last_return));
    let mut champion = None;
    for (rank, agent) in ranked.iter().take(10).enumerate() {
        let score = evaluate(&agent.policy, 1_000 + rank as u64)?;
        if champion
            .as_ref()
            .is_none_or(|&(_, best_score): &(_, f64)| score > best_score)
        {
            champion = Some((agent.policy.clone(), score));
        }
    }
    let (policy, score) = champion.expect("population is non-empty");
    println!(
        "\nchampion theta = {:.4?} (mean return {score:.0} over 10 episodes)",
        policy.theta()
    );

    // Round-trip the checkpoint and confirm it still balances.
    let json = PolicyCheckpoint::from(&policy).to_json()?;
    let restored = LinearSigmoidPolicy::try_from(&PolicyCheckpoint::from_json(&json)?)?;
    let replay = evaluate(&restored, 9_999)?;
    println!("restored checkpoint: mean return {replay:.0} over 10 fresh episodes");
    Ok(())
}
