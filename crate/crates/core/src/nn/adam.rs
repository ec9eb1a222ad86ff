use serde::{Deserialize, Serialize};

use super::mlp::Dense;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, shape-congruent with a network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<Dense>,
    pub v: Vec<Dense>,
    pub step: u64,
}

impl AdamMoments {
    pub fn new(layers: &[Dense]) -> Self {
        let zeros = || {
            layers
                .iter()
                .map(|d| Dense::zeros(d.inputs(), d.outputs()))
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(),
            v: zeros(),
            step: 0,
        }
    }

    pub(crate) fn matches(&self, layers: &[Dense]) -> bool {
        let same = |xs: &[Dense]| {
            xs.len() == layers.len()
                && xs
                    .iter()
                    .zip(layers)
                    .all(|(a, b)| a.weight.dim() == b.weight.dim() && a.bias.len() == b.bias.len())
        };
        same(&self.m) && same(&self.v)
    }
}

/// Adam kernel over flat slices. `step` is the 1-based step index used for
/// bias correction.
pub fn adam_update(
    theta: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grad: &[f64],
    step: u64,
    lr: f64,
    cfg: &AdamConfig,
) {
    let bc1 = 1.0 - cfg.beta1.powf(step as f64);
    let bc2 = 1.0 - cfg.beta2.powf(step as f64);
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Adam state for a single scalar parameter (the entropy temperature).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScalarAdam {
    pub m: f64,
    pub v: f64,
    pub step: u64,
}

impl ScalarAdam {
    pub fn step(&mut self, theta: &mut f64, grad: f64, lr: f64, cfg: &AdamConfig) -> Result<()> {
        if !grad.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        self.step += 1;
        let mut t = [*theta];
        let mut m = [self.m];
        let mut v = [self.v];
        adam_update(&mut t, &mut m, &mut v, &[grad], self.step, lr, cfg);
        *theta = t[0];
        self.m = m[0];
        self.v = v[0];
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Mlp;
    use crate::rng::Rng;

    #[test]
    fn zero_learning_rate_keeps_params_but_moves_moments() {
        let mut rng = Rng::new(0);
        let mut net = Mlp::new(&[2, 3, 1], &mut rng).unwrap();
        let before = net.params_flat();
        let mut g = net.zero_gradients();
        g.layers[0].weight.fill(0.5);
        net.adam_step(&g, 0.0, &AdamConfig::default()).unwrap();
        assert_eq!(net.params_flat(), before);
        assert_eq!(net.moments().step, 1);
        assert!((net.moments().m[0].weight[[0, 0]] - 0.05).abs() < 1e-15);
        assert!((net.moments().v[0].weight[[0, 0]] - 0.00025).abs() < 1e-15);
    }

    #[test]
    fn first_step_is_normalized_gradient() {
        let cfg = AdamConfig::default();
        for g in [3.0, -0.02, 1e-3] {
            let lr = 0.01;
            let mut theta = 1.0;
            let mut s = ScalarAdam::default();
            s.step(&mut theta, g, lr, &cfg).unwrap();
            // m_hat = g, v_hat = g^2 after bias correction
            let expected = 1.0 - lr * g / (f64::abs(g) + cfg.epsilon);
            assert!((theta - expected).abs() < 1e-15, "g={g}");
        }
    }

    #[test]
    fn constant_gradient_converges_to_signed_lr() {
        // with g constant, m_hat = g and v_hat = g^2 at every step, so each
        // update is lr * g / (|g| + eps) -> lr * sign(g)
        let cfg = AdamConfig::default();
        let lr = 1e-3;
        let mut theta = 0.0;
        let mut s = ScalarAdam::default();
        let mut last = 0.0;
        for _ in 0..2000 {
            let prev = theta;
            s.step(&mut theta, -0.7, lr, &cfg).unwrap();
            last = theta - prev;
        }
        assert!((last - lr).abs() < 1e-9, "last step {last}");
    }

    #[test]
    fn non_finite_gradient_rejected() {
        let mut rng = Rng::new(0);
        let mut net = Mlp::new(&[2, 3, 1], &mut rng).unwrap();
        let before = net.clone();
        let mut g = net.zero_gradients();
        g.layers[1].bias[0] = f64::NAN;
        assert!(matches!(
            net.adam_step(&g, 0.1, &AdamConfig::default()),
            Err(Error::NonFinite(_))
        ));
        assert_eq!(net, before);
        let mut s = ScalarAdam::default();
        let mut theta = 0.0;
        assert!(s
            .step(&mut theta, f64::INFINITY, 0.1, &AdamConfig::default())
            .is_err());
        assert_eq!(s.step, 0);
    }
}
