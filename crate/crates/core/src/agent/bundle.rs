use ndarray::{Array1, Array2, ArrayView2};

use super::hyper::Hyperparameters;
use super::losses::{actor_loss_and_grad, critic_loss_and_grad};
use super::strategy::SelectionStrategy;
use crate::error::{Error, Result};
use crate::nn::{
    deterministic_action, hcat, sample_squashed_gaussian, squash_with_noise, GaussianHead, Mlp,
    ScalarAdam,
};
use crate::replay::Batch;
use crate::rng::Rng;

/// Actors, twin critics with their targets, and the entropy temperature.
///
/// Two actors give TASAC; a single actor is the SAC baseline, where action
/// selection is bypassed and targets use that actor alone.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentBundle {
    pub actors: Vec<Mlp>,
    pub critics: [Mlp; 2],
    pub target_critics: [Mlp; 2],
    pub log_alpha: f64,
    pub alpha_optimizer: ScalarAdam,
    pub strategy: SelectionStrategy,
    pub hyper: Hyperparameters,
    pub obs_dim: usize,
    pub action_dim: usize,
}

/// Which candidate was executed and why.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionDiagnostics {
    pub candidates: Vec<Vec<f64>>,
    /// `q[actor][critic]`; empty for a single actor.
    pub q_table: Vec<[f64; 2]>,
    pub chosen: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CriticStep {
    pub loss: f64,
    /// False when the step was skipped for a non-finite loss or gradient.
    pub applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorStep {
    pub loss: f64,
    pub applied: bool,
    /// Per-sample `log pi(a~ | s)` at the pre-update parameters.
    pub log_prob: Array1<f64>,
}

impl AgentBundle {
    pub fn new(
        obs_dim: usize,
        action_dim: usize,
        n_actors: usize,
        strategy: SelectionStrategy,
        hyper: Hyperparameters,
        rng: &mut Rng,
    ) -> Result<Self> {
        hyper.validate()?;
        if !(1..=2).contains(&n_actors) {
            return Err(Error::config(format!(
                "{n_actors} actors requested; 1 or 2 supported"
            )));
        }
        let actor_sizes = layer_sizes(obs_dim, &hyper.hidden_layers, 2 * action_dim);
        let critic_sizes = layer_sizes(obs_dim + action_dim, &hyper.hidden_layers, 1);
        let actors = (0..n_actors)
            .map(|_| Mlp::new(&actor_sizes, rng))
            .collect::<Result<Vec<_>>>()?;
        let c1 = Mlp::new(&critic_sizes, rng)?;
        let c2 = Mlp::new(&critic_sizes, rng)?;
        let target_critics = [c1.detached_copy(), c2.detached_copy()];
        Ok(Self {
            actors,
            critics: [c1, c2],
            target_critics,
            log_alpha: hyper.initial_log_alpha,
            alpha_optimizer: ScalarAdam::default(),
            strategy,
            hyper,
            obs_dim,
            action_dim,
        })
    }

    /// Twin-actor bundle built from `self` with the second actor an exact
    /// copy of the first and one noise draw shared between them.
    pub fn degenerate_twin(&self) -> Self {
        let mut twin = self.clone();
        twin.actors = vec![self.actors[0].clone(), self.actors[0].clone()];
        twin.hyper.shared_actor_noise = true;
        twin
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn is_twin(&self) -> bool {
        self.actors.len() == 2
    }

    /// Network input for an observation `[e, t/duration]`.
    pub fn features(&self, obs: &[f64]) -> Vec<f64> {
        let mut x = obs.to_vec();
        x[0] *= self.hyper.error_input_scale;
        x
    }

    fn scale_states(&self, states: ArrayView2<f64>) -> Array2<f64> {
        let mut x = states.to_owned();
        x.column_mut(0)
            .mapv_inplace(|v| v * self.hyper.error_input_scale);
        x
    }

    fn head(&self, actor: usize, states: ArrayView2<f64>) -> Result<GaussianHead> {
        let raw = self.actors[actor].forward(states)?;
        GaussianHead::from_raw(raw.view(), self.hyper.log_std_bounds)
    }

    /// Noise for every actor over `rows` samples; one shared draw when
    /// configured, otherwise independent draws in actor order.
    fn actor_noise(&self, rows: usize, rng: &mut Rng) -> Vec<Array2<f64>> {
        let draw =
            |rng: &mut Rng| Array2::from_shape_simple_fn((rows, self.action_dim), || rng.normal());
        if self.hyper.shared_actor_noise {
            let xi = draw(rng);
            vec![xi; self.actors.len()]
        } else {
            (0..self.actors.len()).map(|_| draw(rng)).collect()
        }
    }

    /// `Q_critic(s, a)` for a single state-action pair.
    pub fn q_value(critic: &Mlp, state: &[f64], action: &[f64]) -> Result<f64> {
        let x: Vec<f64> = state.iter().chain(action).copied().collect();
        Ok(critic.forward_vec(&x)?[0])
    }

    /// Sample one candidate per actor and keep the one the strategy picks.
    pub fn select_action(
        &self,
        obs: &[f64],
        rng: &mut Rng,
    ) -> Result<(Vec<f64>, SelectionDiagnostics)> {
        let x = self.features(obs);
        let state =
            ArrayView2::from_shape((1, x.len()), &x).map_err(|e| Error::config(e.to_string()))?;
        let noise = self.actor_noise(1, rng);
        let mut candidates = Vec::with_capacity(self.actors.len());
        for (i, xi) in noise.into_iter().enumerate() {
            let sample = squash_with_noise(&self.head(i, state)?, xi)?;
            candidates.push(sample.action.row(0).to_vec());
        }
        if candidates.len() == 1 {
            return Ok((
                candidates[0].clone(),
                SelectionDiagnostics {
                    candidates,
                    q_table: Vec::new(),
                    chosen: 0,
                },
            ));
        }
        let mut q_table = Vec::with_capacity(candidates.len());
        for a in &candidates {
            q_table.push([
                Self::q_value(&self.critics[0], &x, a)?,
                Self::q_value(&self.critics[1], &x, a)?,
            ]);
        }
        let chosen = self.strategy.select(&q_table, self.hyper.greedy_selection);
        Ok((
            candidates[chosen].clone(),
            SelectionDiagnostics {
                candidates,
                q_table,
                chosen,
            },
        ))
    }

    /// Stochastic draw from a single actor, for evaluation and inspection.
    pub fn sample_actor(&self, actor: usize, obs: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let x = self.features(obs);
        let state =
            ArrayView2::from_shape((1, x.len()), &x).map_err(|e| Error::config(e.to_string()))?;
        Ok(sample_squashed_gaussian(&self.head(actor, state)?, rng)?
            .action
            .row(0)
            .to_vec())
    }

    /// Greedy `tanh(mean)` of the first actor.
    pub fn deterministic_action(&self, obs: &[f64]) -> Result<Vec<f64>> {
        let x = self.features(obs);
        let state =
            ArrayView2::from_shape((1, x.len()), &x).map_err(|e| Error::config(e.to_string()))?;
        Ok(deterministic_action(&self.head(0, state)?).row(0).to_vec())
    }

    /// Bellman targets `r + gamma (1 - done) min_i (min_j Q_Tj(s', a~_i) - alpha log pi_i(a~_i | s'))`
    /// with fresh noise for the next-state actions.
    pub fn compute_targets(&self, batch: &Batch, rng: &mut Rng) -> Result<Array1<f64>> {
        if batch.is_empty() {
            return Err(Error::usage("target computation on an empty batch"));
        }
        let next = self.scale_states(batch.next_states.view());
        let alpha = self.alpha();
        let noise = self.actor_noise(batch.len(), rng);
        let mut best = Array1::from_elem(batch.len(), f64::INFINITY);
        for (i, xi) in noise.into_iter().enumerate() {
            let sample = squash_with_noise(&self.head(i, next.view())?, xi)?;
            let input = hcat(next.view(), sample.action.view());
            let q1 = self.target_critics[0].forward(input.view())?;
            let q2 = self.target_critics[1].forward(input.view())?;
            for b in 0..batch.len() {
                let q_tv = q1[[b, 0]].min(q2[[b, 0]]);
                let tv_i = q_tv - alpha * sample.log_prob[b];
                best[b] = best[b].min(tv_i);
            }
        }
        let scale = self.hyper.reward_scale;
        let gamma = self.hyper.gamma;
        Ok(Array1::from_shape_fn(batch.len(), |b| {
            scale * batch.rewards[b] + gamma * (1.0 - batch.dones[b]) * best[b]
        }))
    }

    /// One Adam step per critic on the mean squared error against `targets`.
    pub fn update_critics(
        &mut self,
        batch: &Batch,
        targets: &Array1<f64>,
    ) -> Result<[CriticStep; 2]> {
        let states = self.scale_states(batch.states.view());
        let mut out = [CriticStep::default(); 2];
        for (j, slot) in out.iter_mut().enumerate() {
            let (loss, mut grads) = critic_loss_and_grad(
                &self.critics[j],
                states.view(),
                batch.actions.view(),
                targets.view(),
            )?;
            slot.loss = loss;
            if !loss.is_finite() || !grads.is_finite() {
                log::warn!("critic {} update skipped: non-finite loss {loss}", j + 1);
                continue;
            }
            if let Some(c) = self.hyper.grad_clip {
                grads.clip_global_norm(c);
            }
            self.critics[j].adam_step(&grads, self.hyper.lr_critic, &self.hyper.adam)?;
            slot.applied = true;
        }
        Ok(out)
    }

    /// One Adam step per actor on `alpha log pi - min_j Q_j` through the
    /// reparameterized sample; critics are held fixed.
    pub fn update_actors(&mut self, batch: &Batch, rng: &mut Rng) -> Result<Vec<ActorStep>> {
        let states = self.scale_states(batch.states.view());
        let alpha = self.alpha();
        let noise = self.actor_noise(batch.len(), rng);
        let mut steps = Vec::with_capacity(self.actors.len());
        for (i, xi) in noise.into_iter().enumerate() {
            let critics = [&self.critics[0], &self.critics[1]];
            let obj = actor_loss_and_grad(
                &self.actors[i],
                &critics,
                states.view(),
                xi,
                alpha,
                self.hyper.log_std_bounds,
            )?;
            let mut grads = obj.grads;
            let applied = if obj.loss.is_finite() && grads.is_finite() {
                if let Some(c) = self.hyper.grad_clip {
                    grads.clip_global_norm(c);
                }
                self.actors[i].adam_step(&grads, self.hyper.lr_actor, &self.hyper.adam)?;
                true
            } else {
                log::warn!(
                    "actor {} update skipped: non-finite loss {}",
                    i + 1,
                    obj.loss
                );
                false
            };
            steps.push(ActorStep {
                loss: obj.loss,
                applied,
                log_prob: obj.sample.log_prob,
            });
        }
        Ok(steps)
    }

    /// One Adam step on `-log_alpha * mean(log pi + target_entropy)`, with the
    /// log-probabilities held constant. Each actor's batch mean is taken
    /// first, then averaged over actors.
    pub fn update_temperature(&mut self, log_probs: &[&Array1<f64>]) -> Result<f64> {
        if log_probs.is_empty() || log_probs.iter().any(|lp| lp.is_empty()) {
            return Err(Error::usage("temperature update needs log-probabilities"));
        }
        let per_actor: Vec<f64> = log_probs
            .iter()
            .map(|lp| {
                lp.iter()
                    .map(|l| l + self.hyper.target_entropy)
                    .sum::<f64>()
                    / lp.len() as f64
            })
            .collect();
        let mean = per_actor.iter().sum::<f64>() / per_actor.len() as f64;
        let grad = -mean;
        if self.hyper.lr_entropy > 0.0 {
            self.alpha_optimizer.step(
                &mut self.log_alpha,
                grad,
                self.hyper.lr_entropy,
                &self.hyper.adam,
            )?;
        }
        Ok(self.alpha())
    }

    /// `target <- tau * critic + (1 - tau) * target` for both critics.
    pub fn polyak_update(&mut self) -> Result<()> {
        let tau = self.hyper.tau;
        for (t, c) in self.target_critics.iter_mut().zip(&self.critics) {
            t.polyak_toward(c, tau)?;
        }
        Ok(())
    }
}

fn layer_sizes(inputs: usize, hidden: &[usize], outputs: usize) -> Vec<usize> {
    std::iter::once(inputs)
        .chain(hidden.iter().copied())
        .chain(std::iter::once(outputs))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::Transition;

    fn small_hyper() -> Hyperparameters {
        Hyperparameters {
            hidden_layers: vec![16, 16],
            batch_size: 8,
            ..Hyperparameters::default()
        }
    }

    fn bundle(n_actors: usize, seed: u64) -> AgentBundle {
        AgentBundle::new(
            2,
            1,
            n_actors,
            SelectionStrategy::MinMin,
            small_hyper(),
            &mut Rng::new(seed),
        )
        .unwrap()
    }

    fn batch(rng: &mut Rng, n: usize, done: bool) -> Batch {
        let items: Vec<Transition> = (0..n)
            .map(|_| Transition {
                state: vec![rng.uniform_range(-5.0, 5.0), rng.uniform()],
                action: vec![rng.uniform_range(-1.0, 1.0)],
                reward: rng.uniform_range(-3.0, 0.0),
                next_state: vec![rng.uniform_range(-5.0, 5.0), rng.uniform()],
                done,
            })
            .collect();
        Batch::from_transitions(&items).unwrap()
    }

    #[test]
    fn construction_invariants() {
        let b = bundle(2, 0);
        assert_eq!(b.target_critics[0].layers(), b.critics[0].layers());
        assert_eq!(b.target_critics[1].layers(), b.critics[1].layers());
        assert_ne!(b.actors[0].layers(), b.actors[1].layers());
        assert!(b.alpha() > 0.0);
        assert!(AgentBundle::new(
            2,
            1,
            3,
            SelectionStrategy::MinMin,
            small_hyper(),
            &mut Rng::new(0)
        )
        .is_err());
    }

    #[test]
    fn zero_critic_scores_zero() {
        let c = Mlp::zeros(&[3, 4, 1]).unwrap();
        assert_eq!(AgentBundle::q_value(&c, &[1.0, 0.5], &[0.3]).unwrap(), 0.0);
    }

    #[test]
    fn one_layer_critic_is_a_dot_product() {
        let c = Mlp::from_layers(vec![crate::nn::Dense {
            weight: ndarray::array![[2.0], [-1.0], [0.5]],
            bias: ndarray::array![0.1],
        }])
        .unwrap();
        let q = AgentBundle::q_value(&c, &[1.5, 0.25], &[-0.4]).unwrap();
        assert!((q - (3.0 - 0.25 - 0.2 + 0.1)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_twin_selects_shared_candidate() {
        let single = bundle(1, 4);
        let mut twin = single.degenerate_twin();
        for st in SelectionStrategy::ALL {
            twin.strategy = st;
            let (a, diag) = twin.select_action(&[1.2, 0.3], &mut Rng::new(77)).unwrap();
            let (b, _) = single
                .select_action(&[1.2, 0.3], &mut Rng::new(77))
                .unwrap();
            assert_eq!(diag.candidates[0], diag.candidates[1]);
            assert_eq!(diag.chosen, 0);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn selection_follows_strategy_on_live_q_values() {
        let b = bundle(2, 5);
        for st in SelectionStrategy::ALL {
            let mut t = b.clone();
            t.strategy = st;
            let (a, diag) = t.select_action(&[-3.0, 0.1], &mut Rng::new(1)).unwrap();
            assert_eq!(diag.chosen, st.select(&diag.q_table, false));
            assert_eq!(a, diag.candidates[diag.chosen]);
            // q_table is what the critics say about each candidate
            for (i, cand) in diag.candidates.iter().enumerate() {
                let x = t.features(&[-3.0, 0.1]);
                assert_eq!(
                    diag.q_table[i][0],
                    AgentBundle::q_value(&t.critics[0], &x, cand).unwrap()
                );
            }
        }
    }

    #[test]
    fn zero_gamma_or_terminal_targets_equal_reward() {
        let mut rng = Rng::new(2);
        let mut b = bundle(2, 1);
        b.hyper.gamma = 0.0;
        let bt = batch(&mut rng, 10, false);
        let tv = b.compute_targets(&bt, &mut rng).unwrap();
        for k in 0..10 {
            assert_eq!(tv[k], bt.rewards[k]);
        }
        let b = bundle(2, 1);
        let bt = batch(&mut rng, 10, true);
        let tv = b.compute_targets(&bt, &mut rng).unwrap();
        assert_eq!(tv, bt.rewards);
    }

    #[test]
    fn zero_alpha_twin_targets_by_hand() {
        let mut rng = Rng::new(3);
        let single = bundle(1, 9);
        let mut twin = single.degenerate_twin();
        twin.log_alpha = f64::NEG_INFINITY;
        twin.target_critics[1] = twin.target_critics[0].clone();
        let bt = batch(&mut rng, 1, false);
        let tv = twin.compute_targets(&bt, &mut Rng::new(50)).unwrap();
        // replay the single noise draw by hand
        let xi = Rng::new(50).normal();
        let s_next = bt.next_states.row(0).to_vec();
        let raw = twin.actors[0].forward_vec(&s_next).unwrap();
        let log_std = raw[1].clamp(-20.0, 2.0);
        let a = (raw[0] + log_std.exp() * xi).tanh();
        let q = AgentBundle::q_value(&twin.target_critics[0], &s_next, &[a]).unwrap();
        let expected = bt.rewards[0] + 0.99 * q;
        assert!((tv[0] - expected).abs() < 1e-12, "{} vs {expected}", tv[0]);
    }

    #[test]
    fn critic_update_moves_only_critics() {
        let mut rng = Rng::new(4);
        let mut b = bundle(2, 2);
        let before = b.clone();
        let bt = batch(&mut rng, 8, false);
        let tv = b.compute_targets(&bt, &mut rng).unwrap();
        let steps = b.update_critics(&bt, &tv).unwrap();
        assert!(steps.iter().all(|s| s.applied && s.loss > 0.0));
        assert_ne!(b.critics[0], before.critics[0]);
        assert_eq!(b.target_critics, before.target_critics);
        assert_eq!(b.actors, before.actors);
        let steps = b.update_actors(&bt, &mut rng).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(b.target_critics, before.target_critics);
    }

    #[test]
    fn non_finite_targets_skip_critic_step() {
        let mut rng = Rng::new(4);
        let mut b = bundle(2, 2);
        let before = b.clone();
        let bt = batch(&mut rng, 8, false);
        let tv = Array1::from_elem(8, f64::NAN);
        let steps = b.update_critics(&bt, &tv).unwrap();
        assert!(steps.iter().all(|s| !s.applied));
        assert_eq!(b.critics, before.critics);
    }

    #[test]
    fn temperature_fixed_point_and_direction() {
        let mut b = bundle(2, 0);
        let at_target = Array1::from_elem(16, 1.0); // log pi = -target_entropy
        let a0 = b.alpha();
        b.update_temperature(&[&at_target, &at_target]).unwrap();
        assert_eq!(b.alpha(), a0);

        let too_sure = Array1::from_elem(16, 3.0);
        for _ in 0..10 {
            let prev = b.alpha();
            b.update_temperature(&[&too_sure, &too_sure]).unwrap();
            assert!(b.alpha() > prev);
        }
        let mut frozen = bundle(2, 0);
        frozen.hyper.lr_entropy = 0.0;
        frozen.update_temperature(&[&too_sure]).unwrap();
        assert_eq!(frozen.alpha(), 1.0);
    }

    #[test]
    fn polyak_geometry() {
        let mut b = bundle(1, 6);
        let mut rng = Rng::new(1);
        // pull critics away from the targets, then freeze them
        for c in &mut b.critics {
            let p: Vec<f64> = c
                .params_flat()
                .iter()
                .map(|v| v + rng.uniform_range(-0.5, 0.5))
                .collect();
            c.set_params_flat(&p).unwrap();
        }
        let d0 = b.target_critics[0].distance(&b.critics[0]);
        for n in 1..=50 {
            b.polyak_update().unwrap();
            let d = b.target_critics[0].distance(&b.critics[0]);
            let expected = d0 * (1.0 - b.hyper.tau).powi(n);
            assert!((d - expected).abs() <= 1e-10 * expected, "n={n}");
        }
        let before = b.target_critics.clone();
        b.hyper.tau = 0.0;
        b.polyak_update().unwrap();
        assert_eq!(b.target_critics[0].layers(), before[0].layers());
        b.hyper.tau = 1.0;
        b.polyak_update().unwrap();
        assert_eq!(b.target_critics[0].layers(), b.critics[0].layers());
    }
}
