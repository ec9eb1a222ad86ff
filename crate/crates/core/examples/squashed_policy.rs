//! The tanh-squashed Gaussian policy head: sample actions from a raw network
//! output, check the log-density against a histogram, and compare with the
//! greedy action.

use ndarray::array;
use tasac::nn::{deterministic_action, sample_squashed_gaussian, GaussianHead, LogStdBounds};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    // one state, raw output [mean, log_std]
    let raw = array![[0.4, -0.7]];
    let head = GaussianHead::from_raw(raw.view(), LogStdBounds::default())?;
    let mut rng = Rng::new(42);

    let n = 200_000;
    let bins = 20;
    let mut counts = vec![0usize; bins];
    let mut mean_logp = 0.0;
    for _ in 0..n {
        let s = sample_squashed_gaussian(&head, &mut rng)?;
        let a = s.action[[0, 0]];
        counts[(((a + 1.0) / 2.0 * bins as f64) as usize).min(bins - 1)] += 1;
        mean_logp += s.log_prob[0] / n as f64;
    }
    println!(
        "greedy action tanh(mean) = {:.4}",
        deterministic_action(&head)[[0, 0]]
    );
    println!("entropy estimate -E[log pi] = {:.4}", -mean_logp);
    println!("{:>14} {:>9}", "bin", "density");
    for (k, c) in counts.iter().enumerate() {
        let lo = -1.0 + 2.0 * k as f64 / bins as f64;
        let density = *c as f64 / n as f64 / (2.0 / bins as f64);
        println!(
            "[{lo:>5.2},{:>5.2}) {density:>9.3} {}",
            lo + 0.1,
            "#".repeat((density * 20.0) as usize)
        );
    }
    Ok(())
}
