//! Fit a small ReLU network to `sin(3x)` with reverse-mode gradients and Adam.

use ndarray::Array2;
use tasac::nn::{AdamConfig, Mlp};
use tasac::Rng;

fn main() -> tasac::Result<()> {
    let mut rng = Rng::new(1);
    let mut net = Mlp::new(&[1, 32, 32, 1], &mut rng)?;
    let cfg = AdamConfig::default();
    let batch = 64;

    for step in 0..=3000 {
        let x = Array2::from_shape_simple_fn((batch, 1), || rng.uniform_range(-1.0, 1.0));
        let y = x.mapv(|v| (3.0 * v).sin());
        let (pred, tape) = net.forward_with_tape(x.view())?;
        let diff = &pred - &y;
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / batch as f64;
        let upstream = diff.mapv(|d| 2.0 * d / batch as f64);
        let (grads, _) = net.backward(&tape, upstream.view())?;
        net.adam_step(&grads, 3e-3, &cfg)?;
        if step % 500 == 0 {
            println!(
                "step {step:>4}  mse {loss:.5}  |grad| {:.4}",
                grads.global_norm()
            );
        }
    }
    for x in [-0.9f64, -0.3, 0.0, 0.5, 0.8] {
        println!(
            "x = {x:>5.2}  net {:>7.4}  sin(3x) {:>7.4}",
            net.forward_vec(&[x])?[0],
            (3.0 * x).sin()
        );
    }
    Ok(())
}
