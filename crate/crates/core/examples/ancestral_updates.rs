//! The two faces of ancestral learning on a tableau policy: the mixture
//! with the parent's empirical conditionals and the Fisher-preconditioned
//! gradient step compute the same update through different algebra.
//!
//! ```bash
//! cargo run --example ancestral_updates
//! ```

use poprl::algorithms::ancestral_gradient;
use poprl::mdp::Trajectory;
use poprl::policy::{
    empirical_parent_policy, mixture_update, natural_gradient_tableau, TableauPolicy,
};

fn main() -> poprl::Result<()> {
    let policy = TableauPolicy::new(vec![vec![0.5, 0.5], vec![0.8, 0.2]])?;
    // A parent that stayed in state 0 with action 0 most of the time.
    let parent = Trajectory {
        states: vec![0, 0, 0, 1, 0, 0, 1, 1, 0],
        actions: vec![0, 0, 1, 0, 0, 0, 1, 0],
        rewards: vec![1.0; 8],
        terminated_at: None,
    };

    let pb = empirical_parent_policy(&parent);
    println!("parent visit statistics:");
    for x in pb.visited_states() {
        println!(
            "  state {x}: {} visits, conditional = [{:.3}, {:.3}], joint = [{:.3}, {:.3}]",
            pb.visit_count(x),
            pb.conditional(x, 0).unwrap(),
            pb.conditional(x, 1).unwrap(),
            pb.joint(x, 0),
            pb.joint(x, 1),
        );
    }

    let grad = ancestral_gradient(&policy, &parent)?;
    println!("\nancestral gradient (mean per-step log-policy gradient):");
    println!("  {grad:.4?}");

    let alpha = 0.5;
    let mixed = mixture_update(&policy, &pb, alpha)?;
    let natural = natural_gradient_tableau(&policy, &parent, alpha)?;
    println!("\nupdated rows at alpha = {alpha}:");
    println!(
        "{:>8} {:>24} {:>24}",
        "state", "mixture", "natural gradient"
    );
    let mut worst: f64 = 0.0;
    for x in 0..2 {
        println!(
            "{x:>8} {:>24} {:>24}",
            format!("[{:.6}, {:.6}]", mixed.prob(x, 0), mixed.prob(x, 1)),
            format!("[{:.6}, {:.6}]", natural.prob(x, 0), natural.prob(x, 1)),
        );
        for a in 0..2 {
            worst = worst.max((mixed.prob(x, a) - natural.prob(x, a)).abs());
        }
    }
    println!("\nlargest row discrepancy: {worst:.2e}");
    Ok(())
}
