//! Zeroth-order gradient estimation on the quadratic black box
//! R(theta) = -||theta||^2, whose smoothed gradient is exactly
//! -2 theta. Shows the estimate converging to the analytic value, then
//! runs gradient ascent to the optimum.
//!
//! ```bash
//! cargo run --release --example zoo_quadratic
//! ```

use poprl::algorithms::zoo_gradient_estimate;
use poprl::envs::QuadraticBlackBox;
use poprl::rng::Streams;

fn main() {
    let objective = QuadraticBlackBox::new(3);
    let streams = Streams::new(5);
    let theta = vec![1.0, -0.5, 0.25];
    let exact: Vec<f64> = theta.iter().map(|t| -2.0 * t).collect();

    println!("estimates of the gradient at theta = {theta:?} (exact {exact:?}):");
    for n in [100, 1_000, 10_000, 100_000] {
        let est =
            zoo_gradient_estimate(&theta, 0.1, n, |t| objective.reward(t), &streams, n as u64);
        println!(
            "  n = {n:>6}: {:?} (std errors {:?})",
            est.gradient
                .iter()
                .map(|g| format!("{g:+.3}"))
                .collect::<Vec<_>>(),
            est.std_error
                .iter()
                .map(|s| format!("{s:.3}"))
                .collect::<Vec<_>>(),
        );
    }

    // Plain ascent with the estimator.
    let mut params = vec![2.0, -1.5, 1.0];
    let alpha = 0.05;
    println!("\nascent from {params:?}:");
    for step in 0..=40 {
        if step % 10 == 0 {
            println!(
                "  step {step:>2}: R = {:>8.4}  theta = {params:.3?}",
                objective.reward(&params)
            );
        }
        let est = zoo_gradient_estimate(
            &params,
            0.1,
            2_000,
            |t| objective.reward(t),
            &streams,
            1_000_000 + step,
        );
        for (p, g) in params.iter_mut().zip(&est.gradient) {
            *p += alpha * g;
        }
    }
}
