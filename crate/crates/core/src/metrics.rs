//! Tracking-performance metrics.

use crate::error::{Error, Result};

/// Integral of time-weighted absolute error by the rectangle rule,
/// `sum_k t_k |e_k| dt`, over `(t, e)` samples taken every `dt` (all in the
/// same clock unit).
pub fn compute_itae(samples: &[(f64, f64)], dt: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::usage("ITAE of an empty trajectory"));
    }
    if samples.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::usage("ITAE trajectory is not time-ordered"));
    }
    Ok(samples.iter().map(|&(t, e)| t * e.abs() * dt).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reactor::reward_fn;
    use crate::rng::Rng;

    #[test]
    fn zero_error_zero_itae() {
        let s: Vec<(f64, f64)> = (1..=10).map(|k| (k as f64, 0.0)).collect();
        assert_eq!(compute_itae(&s, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn single_point() {
        assert_eq!(compute_itae(&[(10.0, 2.0)], 1.0).unwrap(), 20.0);
    }

    #[test]
    fn empty_and_unordered_rejected() {
        assert!(compute_itae(&[], 1.0).is_err());
        assert!(compute_itae(&[(2.0, 1.0), (1.0, 1.0)], 1.0).is_err());
    }

    #[test]
    fn equals_negative_reward_sum() {
        let mut rng = Rng::new(4);
        for _ in 0..50 {
            let dt = 1.0;
            let s: Vec<(f64, f64)> = (1..=120)
                .map(|k| (k as f64 * dt, rng.uniform_range(-10.0, 10.0)))
                .collect();
            let rewards: f64 = s.iter().map(|&(t, e)| reward_fn(e, t)).sum();
            assert_eq!(compute_itae(&s, dt).unwrap(), -dt * rewards);
        }
    }
}
