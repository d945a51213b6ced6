//! The angular-margin target function ψ(θ), the λ annealing schedule, and
//! how the margin changes the loss of a fixed batch.
//!
//! ```bash
//! cargo run --release --example asoftmax_margin
//! ```

use std::f64::consts::PI;

use antispoof::asoftmax::{psi, ASoftmaxHead, LambdaSchedule};
use antispoof::tensor::Tensor;
use antispoof::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    println!("theta_deg   psi(m=1)  psi(m=2)  psi(m=4)");
    for deg in (0..=180).step_by(20) {
        let t = deg as f64 * PI / 180.0;
        println!(
            "{deg:>9} {:>10.4}{:>10.4}{:>10.4}",
            psi(t, 1)?,
            psi(t, 2)?,
            psi(t, 4)?
        );
    }

    let schedule = LambdaSchedule::default();
    let steps: Vec<String> = [0, 100, 300, 500, 1000]
        .iter()
        .map(|&i| format!("{i}: {:.1}", schedule.at(i)))
        .collect();
    println!("\nlambda by iteration  {}", steps.join("  "));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = Tensor::new(
        vec![8, 16],
        (0..128).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )?;
    let labels: Vec<usize> = (0..8).map(|i| i % 2).collect();
    println!("\nloss of one random batch");
    for m in [1, 2, 4] {
        let head = ASoftmaxHead::new(16, 2, m, &mut ChaCha8Rng::seed_from_u64(2))?;
        let by_lambda: Vec<String> = [1000.0, 5.0, 0.0]
            .iter()
            .map(|&l| {
                Ok(format!(
                    "lambda {l:>6}: {:.4}",
                    head.loss_with_lambda(&x, &labels, l)?.loss
                ))
            })
            .collect::<Result<_>>()?;
        println!("m = {m}  {}", by_lambda.join("  "));
    }
    Ok(())
}
