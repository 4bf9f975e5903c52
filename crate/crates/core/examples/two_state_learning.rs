//! Race the three algorithms on the two-state tableau MDP.
//!
//! Action 0 jumps between the states, action 1 stays; state 0 pays 1
//! per step. The optimum is to sit in state 0 forever, worth
//! (1 - 0.9^30) / 0.1, roughly 9.576.
//!
//! ```bash
//! cargo run --release --example two_state_learning
//! ```

use poprl::algorithms::{arl_iteration, poga_iteration, zoo_iteration, HyperParams, Population};
use poprl::envs::two_state_default;
use poprl::policy::{SoftmaxTableauPolicy, TableauPolicy};
use poprl::rng::Streams;

fn main() -> poprl::Result<()> {
    let env = two_state_default();
    let hp = HyperParams {
        beta: 0.05,
        alpha: 0.1,
        sigma: 0.01,
        pop_size: 1000,
        generations: 200,
        gamma: 0.9,
        horizon: 30,
        arl_mutation: false,
    };

    println!("optimum ~ 9.576\n");
    println!("{:>5} {:>12} {:>12} {:>12}", "gen", "zoo", "poga", "arl");

    let streams = Streams::new(7);
    let mut zoo_master = SoftmaxTableauPolicy::uniform(2, 2);
    let mut poga_pop = Population::from_policies(vec![TableauPolicy::uniform(2, 2); hp.pop_size]);
    let mut arl_pop = poga_pop.clone();
    let zoo_hp = HyperParams {
        sigma: 0.05,
        ..hp.clone()
    };

    for generation in 0..hp.generations {
        let zoo_step = zoo_iteration(&zoo_master, &env, &zoo_hp, &streams, generation as u64)?;
        zoo_master = zoo_step.policy;
        let (next_poga, poga_stats) = poga_iteration(&poga_pop, &env, &hp, &streams, None)?;
        poga_pop = next_poga;
        let (next_arl, arl_stats) = arl_iteration(&arl_pop, &env, &hp, &streams, None)?;
        arl_pop = next_arl;
        if generation % 25 == 0 || generation + 1 == hp.generations {
            println!(
                "{generation:>5} {:>12.4} {:>12.4} {:>12.4}",
                zoo_step.stats.best_return, poga_stats.best_return, arl_stats.best_return
            );
        }
    }

    let best = arl_pop
        .agents
        .iter()
        .max_by(|a, b| a.last_return.total_cmp(&b.last_return))
        .unwrap();
    println!("\nbest ancestral-learning policy (rows = states, cols = actions):");
    for (x, row) in best.policy.rows().iter().enumerate() {
        println!("  state {x}: {row:.4?}");
    }
    Ok(())
}
