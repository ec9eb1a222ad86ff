//! Critic and actor objectives with their analytic parameter gradients.
//!
//! Kept free of agent state so the gradient oracle tests can drive them with
//! fixed inputs and common random numbers.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Zip};

use crate::error::{Error, Result};
use crate::nn::{
    hcat, squash_with_noise, GaussianHead, Gradients, LogStdBounds, Mlp, SquashedSample,
};

/// Mean squared Bellman error `mean_b (Q(s_b, a_b) - tv_b)^2` and its
/// gradient with respect to the critic parameters.
pub fn critic_loss_and_grad(
    critic: &Mlp,
    states: ArrayView2<f64>,
    actions: ArrayView2<f64>,
    targets: ArrayView1<f64>,
) -> Result<(f64, Gradients)> {
    let n = states.nrows();
    if n == 0 || actions.nrows() != n || targets.len() != n {
        return Err(Error::usage(
            "critic loss needs matching, non-empty batches",
        ));
    }
    let input = hcat(states, actions);
    let (q, tape) = critic.forward_with_tape(input.view())?;
    let diff = &q.column(0) - &targets;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n as f64;
    let upstream = diff
        .mapv(|d| 2.0 * d / n as f64)
        .insert_axis(ndarray::Axis(1));
    let (grads, _) = critic.backward(&tape, upstream.view())?;
    Ok((loss, grads))
}

/// Result of evaluating the actor objective on one batch.
#[derive(Debug, Clone)]
pub struct ActorObjective {
    pub loss: f64,
    pub grads: Gradients,
    pub sample: SquashedSample,
    /// `min_j Q_j(s, a~)` per sample.
    pub min_q: Array1<f64>,
}

/// Actor objective `mean_b (alpha log pi(a~_b | s_b) - min_j Q_j(s_b, a~_b))`
/// with `a~ = tanh(mu + sigma * noise)` and its gradient through the
/// reparameterized sample. The critics are read but not differentiated.
pub fn actor_loss_and_grad(
    actor: &Mlp,
    critics: &[&Mlp],
    states: ArrayView2<f64>,
    noise: Array2<f64>,
    alpha: f64,
    bounds: LogStdBounds,
) -> Result<ActorObjective> {
    let n = states.nrows();
    if n == 0 || critics.is_empty() {
        return Err(Error::usage(
            "actor loss needs a non-empty batch and at least one critic",
        ));
    }
    let (raw, actor_tape) = actor.forward_with_tape(states)?;
    let head = GaussianHead::from_raw(raw.view(), bounds)?;
    let d = head.action_dim();
    let sample = squash_with_noise(&head, noise)?;
    let critic_input = hcat(states, sample.action.view());

    // per-critic Q and tapes; the min is taken per sample
    let mut qs = Vec::with_capacity(critics.len());
    let mut tapes = Vec::with_capacity(critics.len());
    for c in critics {
        let (q, tape) = c.forward_with_tape(critic_input.view())?;
        qs.push(q);
        tapes.push(tape);
    }
    let mut min_q = Array1::from_elem(n, f64::INFINITY);
    let mut argmin = vec![0usize; n];
    for (j, q) in qs.iter().enumerate() {
        for b in 0..n {
            if q[[b, 0]] < min_q[b] {
                min_q[b] = q[[b, 0]];
                argmin[b] = j;
            }
        }
    }
    let loss = (0..n)
        .map(|b| alpha * sample.log_prob[b] - min_q[b])
        .sum::<f64>()
        / n as f64;

    // dLoss/da through the selected critic of each sample
    let obs_dim = states.ncols();
    let mut d_action = Array2::<f64>::zeros((n, d));
    for (j, c) in critics.iter().enumerate() {
        let upstream =
            Array2::from_shape_fn(
                (n, 1),
                |(b, _)| {
                    if argmin[b] == j {
                        -1.0 / n as f64
                    } else {
                        0.0
                    }
                },
            );
        if upstream.iter().all(|&g| g == 0.0) {
            continue;
        }
        let d_input = c.backward_input(&tapes[j], upstream.view())?;
        d_action += &d_input.slice(s![.., obs_dim..]);
    }

    // d(log pi)/du = 2 tanh(u) from the Jacobian term; ds/du = 1 - tanh^2
    let mut d_pre = Array2::<f64>::zeros((n, d));
    Zip::from(&mut d_pre)
        .and(&d_action)
        .and(&sample.action)
        .for_each(|g, &da, &a| *g = alpha / n as f64 * 2.0 * a + da * (1.0 - a * a));

    let mut upstream = Array2::<f64>::zeros((n, 2 * d));
    for b in 0..n {
        for k in 0..d {
            let du = d_pre[[b, k]];
            upstream[[b, k]] = du;
            if !head.clamped[[b, k]] {
                let sigma = head.log_std[[b, k]].exp();
                upstream[[b, d + k]] = -alpha / n as f64 + du * sigma * sample.noise[[b, k]];
            }
        }
    }
    let (grads, _) = actor.backward(&actor_tape, upstream.view())?;
    Ok(ActorObjective {
        loss,
        grads,
        sample,
        min_q,
    })
}
