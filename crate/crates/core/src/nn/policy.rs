//! Tanh-squashed diagonal Gaussian policy head.

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogStdBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for LogStdBounds {
    fn default() -> Self {
        Self {
            min: -20.0,
            max: 2.0,
        }
    }
}

/// Per-sample mean and clamped log standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead {
    pub mean: Array2<f64>,
    pub log_std: Array2<f64>,
    /// True where the raw log-std fell outside the bounds; the clamp has zero
    /// derivative there.
    pub clamped: Array2<bool>,
}

impl GaussianHead {
    /// Splits a raw `B x 2d` network output into mean (first `d` columns)
    /// and log-std (last `d` columns), clamping the latter.
    pub fn from_raw(raw: ArrayView2<f64>, bounds: LogStdBounds) -> Result<Self> {
        if raw.ncols() % 2 != 0 || raw.ncols() == 0 {
            return Err(Error::config(format!(
                "policy output must have an even, non-zero width, got {}",
                raw.ncols()
            )));
        }
        if raw.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("policy head"));
        }
        let d = raw.ncols() / 2;
        let mean = raw.slice(s![.., ..d]).to_owned();
        let raw_log_std = raw.slice(s![.., d..]);
        let log_std = raw_log_std.mapv(|v| v.clamp(bounds.min, bounds.max));
        let clamped = raw_log_std.mapv(|v| v < bounds.min || v > bounds.max);
        Ok(Self {
            mean,
            log_std,
            clamped,
        })
    }

    pub fn action_dim(&self) -> usize {
        self.mean.ncols()
    }

    pub fn batch_size(&self) -> usize {
        self.mean.nrows()
    }
}

/// A reparameterized draw `action = tanh(mean + std * noise)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    pub noise: Array2<f64>,
    pub pre_tanh: Array2<f64>,
    pub action: Array2<f64>,
    /// Log-density of `action` under the squashed distribution, per sample.
    pub log_prob: Array1<f64>,
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` in the overflow-free form `2 (ln 2 - u - softplus(-2u))`.
pub fn tanh_log_det_jacobian(u: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - u - softplus(-2.0 * u))
}

/// Squash with caller-supplied standard-normal noise (common random numbers).
pub fn squash_with_noise(head: &GaussianHead, noise: Array2<f64>) -> Result<SquashedSample> {
    if noise.dim() != head.mean.dim() {
        return Err(Error::usage("noise shape does not match policy head"));
    }
    let mut pre_tanh = Array2::zeros(head.mean.dim());
    Zip::from(&mut pre_tanh)
        .and(&head.mean)
        .and(&head.log_std)
        .and(&noise)
        .for_each(|u, &mu, &ls, &xi| *u = mu + ls.exp() * xi);
    let action = pre_tanh.mapv(f64::tanh);
    let mut log_prob = Array1::zeros(head.batch_size());
    for (r, lp) in log_prob.iter_mut().enumerate() {
        let mut acc = 0.0;
        for c in 0..head.action_dim() {
            let xi = noise[[r, c]];
            acc += -0.5 * xi * xi
                - head.log_std[[r, c]]
                - HALF_LN_2PI
                - tanh_log_det_jacobian(pre_tanh[[r, c]]);
        }
        *lp = acc;
    }
    Ok(SquashedSample {
        noise,
        pre_tanh,
        action,
        log_prob,
    })
}

/// Draw `xi ~ N(0, I)` row by row and squash.
pub fn sample_squashed_gaussian(head: &GaussianHead, rng: &mut Rng) -> Result<SquashedSample> {
    let noise = Array2::from_shape_simple_fn(head.mean.dim(), || rng.normal());
    squash_with_noise(head, noise)
}

/// Greedy evaluation action `tanh(mean)`.
pub fn deterministic_action(head: &GaussianHead) -> Array2<f64> {
    head.mean.mapv(f64::tanh)
}
