//! Common random numbers for populations: sampling a transition plan
//! freezes the environment's stochasticity, so agents that act the same
//! see the same states, while the trajectory law matches live sampling.
//!
//! ```bash
//! cargo run --release --example lifted_plans
//! ```

use std::collections::BTreeMap;

type PathKey = (Vec<usize>, Vec<usize>);

use poprl::mdp::{rollout, Environment, InitialState, MdpSpec, TransitionModel, TransitionSource};
use poprl::oracle::{averaged_population_fitness, enumerate_paths};
use poprl::policy::TableauPolicy;
use poprl::rng::{Purpose, Streams};

fn main() -> poprl::Result<()> {
    let env = MdpSpec::new(
        2,
        2,
        vec![1.0, 1.0, 0.0, 0.0],
        TransitionModel::Stochastic(vec![
            vec![0.3, 0.7],
            vec![0.8, 0.2],
            vec![0.6, 0.4],
            vec![0.1, 0.9],
        ]),
        InitialState::Fixed(0),
        1.0,
        3,
    )?;
    let policy = TableauPolicy::uniform(2, 2);
    let streams = Streams::new(3);

    // Two agents under one plan, forced through the same actions.
    let plan = env.sample_plan(&mut streams.generation(0, Purpose::Plan));
    let forced = TableauPolicy::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]])?;
    let a = rollout(
        &forced,
        &env,
        3,
        TransitionSource::Plan(&plan),
        &mut streams.agent(0, 0, Purpose::Action),
    )?;
    let b = rollout(
        &forced,
        &env,
        3,
        TransitionSource::Plan(&plan),
        &mut streams.agent(0, 1, Purpose::Action),
    )?;
    println!("shared plan, identical actions:");
    println!("  agent 0 states {:?}", a.states);
    println!("  agent 1 states {:?}", b.states);
    println!("  identical: {}", a.states == b.states);

    // Path frequencies: one fresh plan per episode versus live sampling,
    // both against the exactly enumerated law.
    let n = 100_000;
    let mut lifted: BTreeMap<PathKey, usize> = BTreeMap::new();
    let mut live: BTreeMap<PathKey, usize> = BTreeMap::new();
    for i in 0..n {
        let plan = env.sample_plan(&mut streams.agent(1, i, Purpose::Plan));
        let t = rollout(
            &policy,
            &env,
            3,
            TransitionSource::Plan(&plan),
            &mut streams.agent(1, i, Purpose::Action),
        )?;
        *lifted.entry((t.states, t.actions)).or_insert(0) += 1;
        let t = rollout(
            &policy,
            &env,
            3,
            TransitionSource::Live,
            &mut streams.agent(2, i, Purpose::Action),
        )?;
        *live.entry((t.states, t.actions)).or_insert(0) += 1;
    }
    let exact: BTreeMap<PathKey, f64> = enumerate_paths(&env, &policy, 3, 1.0)?
        .entries
        .into_iter()
        .map(|e| ((e.states, e.actions), e.forward_prob))
        .collect();
    let tv = |counts: &BTreeMap<PathKey, usize>, other: &dyn Fn(&PathKey) -> f64| {
        exact
            .keys()
            .map(|k| ((*counts.get(k).unwrap_or(&0) as f64 / n as f64) - other(k)).abs())
            .sum::<f64>()
            / 2.0
    };
    println!("\npath-frequency total variation over {n} episodes:");
    println!("  lifted vs exact law: {:.4}", tv(&lifted, &|k| exact[k]));
    println!("  live   vs exact law: {:.4}", tv(&live, &|k| exact[k]));
    println!(
        "  lifted vs live:      {:.4}",
        tv(&lifted, &|k| *live.get(k).unwrap_or(&0) as f64 / n as f64)
    );

    // Per-plan population fitness is exact; averaging over plans
    // estimates the stochastic environment's fitness.
    let (mean, se) = averaged_population_fitness(
        &env,
        &policy,
        3,
        1.0,
        1.0,
        5_000,
        &mut streams.agent(3, 0, Purpose::Plan),
    )?;
    println!("averaged population fitness over 5000 plans: {mean:.4} +/- {se:.4}");
    Ok(())
}
