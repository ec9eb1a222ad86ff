use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};

use super::adam::{adam_update, AdamConfig, AdamMoments};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// One affine layer. `weight` is laid out `inputs x outputs` so a batch
/// `B x inputs` maps to `B x outputs` with a single product.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((inputs, outputs)),
            bias: Array1::zeros(outputs),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.ncols()
    }

    fn zeros_like(&self) -> Self {
        Self::zeros(self.inputs(), self.outputs())
    }
}

/// Feed-forward ReLU network. ReLU sits between layers; the last layer is
/// linear. Carries its own Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    moments: AdamMoments,
    generation: u64,
}

/// Activations recorded by a forward pass, consumed by [`Mlp::backward`].
#[derive(Debug, Clone)]
pub struct Tape {
    generation: u64,
    // acts[k] is the input to layer k
    acts: Vec<Array2<f64>>,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.acts[0].nrows()
    }
}

/// Parameter-shaped gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|d| {
                d.weight
                    .iter()
                    .chain(d.bias.iter())
                    .map(|g| g * g)
                    .sum::<f64>()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|d| d.weight.iter().chain(d.bias.iter()).all(|g| g.is_finite()))
    }

    pub fn scale(&mut self, factor: f64) {
        for d in &mut self.layers {
            d.weight.mapv_inplace(|g| g * factor);
            d.bias.mapv_inplace(|g| g * factor);
        }
    }

    /// Rescales so the global norm is at most `max_norm`; returns the norm
    /// before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm.is_finite() {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[Dense]) -> Vec<f64> {
    let mut out = Vec::new();
    for d in layers {
        out.extend(d.weight.iter());
        out.extend(d.bias.iter());
    }
    out
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

impl Mlp {
    /// Network with layer widths `sizes = [inputs, hidden.., outputs]`,
    /// weights and biases drawn uniformly from `±1/sqrt(fan_in)`.
    pub fn new(sizes: &[usize], rng: &mut Rng) -> Result<Self> {
        check_sizes(sizes)?;
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let mut d = Dense::zeros(w[0], w[1]);
                d.weight.mapv_inplace(|_| rng.uniform_range(-bound, bound));
                d.bias.mapv_inplace(|_| rng.uniform_range(-bound, bound));
                d
            })
            .collect();
        Self::from_layers(layers)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Self::from_layers(sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect())
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        let layers: Vec<Dense> = layers
            .into_iter()
            .map(|d| Dense {
                weight: standard(d.weight),
                bias: d.bias,
            })
            .collect();
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        for (k, d) in layers.iter().enumerate() {
            if d.bias.len() != d.outputs() {
                return Err(Error::config(format!(
                    "layer {k}: bias length {} does not match {} outputs",
                    d.bias.len(),
                    d.outputs()
                )));
            }
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::config(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        let moments = AdamMoments::new(&layers);
        Ok(Self {
            layers,
            moments,
            generation: 0,
        })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn moments(&self) -> &AdamMoments {
        &self.moments
    }

    pub(crate) fn set_moments(&mut self, moments: AdamMoments) -> Result<()> {
        if !moments.matches(&self.layers) {
            return Err(Error::Format(
                "adam moments do not match network shape".into(),
            ));
        }
        self.moments = moments;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer widths, `[inputs, hidden.., outputs]`.
    pub fn sizes(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::outputs))
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|d| d.weight.len() + d.bias.len())
            .sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_params_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut it = values.iter().copied();
        for d in &mut self.layers {
            d.weight.iter_mut().for_each(|w| *w = it.next().unwrap());
            d.bias.iter_mut().for_each(|b| *b = it.next().unwrap());
        }
        self.generation += 1;
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::config(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (k, d) in self.layers.iter().enumerate() {
            h = h.dot(&d.weight) + &d.bias;
            if k < last {
                h.mapv_inplace(relu);
            }
        }
        Ok(h)
    }

    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let view =
            ArrayView2::from_shape((1, x.len()), x).map_err(|e| Error::config(e.to_string()))?;
        Ok(self.forward(view)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_with_tape(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Tape)> {
        self.check_input(&x)?;
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (k, d) in self.layers.iter().enumerate() {
            let mut z = h.dot(&d.weight) + &d.bias;
            if k < last {
                z.mapv_inplace(relu);
            }
            acts.push(h);
            h = z;
        }
        let tape = Tape {
            generation: self.generation,
            acts,
        };
        Ok((h, tape))
    }

    /// Reverse accumulation of `upstream = dLoss/dOutput` (one row per
    /// sample) into parameter gradients summed over the batch, plus the
    /// gradient with respect to the input batch.
    pub fn backward(
        &self,
        tape: &Tape,
        upstream: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        let (grads, input) = self.reverse(tape, upstream, true)?;
        Ok((grads.expect("parameter gradients requested"), input))
    }

    /// Like [`Mlp::backward`] but only propagates to the input.
    pub fn backward_input(&self, tape: &Tape, upstream: ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(self.reverse(tape, upstream, false)?.1)
    }

    fn reverse(
        &self,
        tape: &Tape,
        upstream: ArrayView2<f64>,
        want_params: bool,
    ) -> Result<(Option<Gradients>, Array2<f64>)> {
        if tape.generation != self.generation || tape.acts.len() != self.layers.len() {
            return Err(Error::usage(
                "backward called without a forward pass on the current parameters",
            ));
        }
        if upstream.nrows() != tape.batch_size() || upstream.ncols() != self.output_dim() {
            return Err(Error::usage(format!(
                "upstream gradient is {}x{}, forward produced {}x{}",
                upstream.nrows(),
                upstream.ncols(),
                tape.batch_size(),
                self.output_dim()
            )));
        }
        let mut grads: Vec<Dense> = Vec::new();
        let mut delta = upstream.to_owned();
        for k in (0..self.layers.len()).rev() {
            let d = &self.layers[k];
            let input = &tape.acts[k];
            if want_params {
                grads.push(Dense {
                    weight: standard(input.t().dot(&delta)),
                    bias: delta.sum_axis(Axis(0)),
                });
            }
            let mut back = delta.dot(&d.weight.t());
            if k > 0 {
                // input to layer k is relu(z_{k-1}); its derivative is 1 where positive
                Zip::from(&mut back).and(input).for_each(|g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
            }
            delta = back;
        }
        let grads = want_params.then(|| {
            grads.reverse();
            Gradients { layers: grads }
        });
        Ok((grads, delta))
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self.layers.iter().map(Dense::zeros_like).collect(),
        }
    }

    /// One bias-corrected Adam step. Non-finite gradients leave the network
    /// and its moments untouched and return an error.
    pub fn adam_step(&mut self, grads: &Gradients, lr: f64, cfg: &AdamConfig) -> Result<()> {
        if grads.layers.len() != self.layers.len()
            || grads
                .layers
                .iter()
                .zip(&self.layers)
                .any(|(g, p)| g.weight.dim() != p.weight.dim() || g.bias.len() != p.bias.len())
        {
            return Err(Error::usage("gradient shapes do not match network"));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        self.moments.step += 1;
        let t = self.moments.step;
        for ((p, g), (m, v)) in self
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.moments.m.iter_mut().zip(self.moments.v.iter_mut()))
        {
            adam_update(
                p.weight.as_slice_mut().expect("standard layout"),
                m.weight.as_slice_mut().expect("standard layout"),
                v.weight.as_slice_mut().expect("standard layout"),
                g.weight.as_slice().expect("standard layout"),
                t,
                lr,
                cfg,
            );
            adam_update(
                p.bias.as_slice_mut().expect("standard layout"),
                m.bias.as_slice_mut().expect("standard layout"),
                v.bias.as_slice_mut().expect("standard layout"),
                g.bias.as_slice().expect("standard layout"),
                t,
                lr,
                cfg,
            );
        }
        self.generation += 1;
        Ok(())
    }

    /// `self <- tau * source + (1 - tau) * self`, element-wise.
    pub fn polyak_toward(&mut self, source: &Mlp, tau: f64) -> Result<()> {
        if source.sizes() != self.sizes() {
            return Err(Error::usage(
                "polyak update between differently shaped networks",
            ));
        }
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            Zip::from(&mut t.weight)
                .and(&s.weight)
                .for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
            Zip::from(&mut t.bias)
                .and(&s.bias)
                .for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
        }
        self.generation += 1;
        Ok(())
    }

    /// Euclidean distance between the parameter vectors of two networks.
    pub fn distance(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let w: f64 = a
                    .weight
                    .iter()
                    .zip(&b.weight)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                let c: f64 = a
                    .bias
                    .iter()
                    .zip(&b.bias)
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                w + c
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Copy of the parameters with fresh (zeroed) optimizer state.
    pub fn detached_copy(&self) -> Mlp {
        Mlp::from_layers(self.layers.clone()).expect("shape already validated")
    }
}

fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::config(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

/// Stack row vectors into a `B x n` batch.
pub(crate) fn stack_rows<'a>(rows: impl Iterator<Item = &'a [f64]>, width: usize) -> Array2<f64> {
    let mut data = Vec::new();
    let mut n = 0;
    for r in rows {
        debug_assert_eq!(r.len(), width);
        data.extend_from_slice(r);
        n += 1;
    }
    Array2::from_shape_vec((n, width), data).expect("row widths agree")
}

/// Horizontal concatenation `[a | b]`.
pub(crate) fn hcat(a: ArrayView2<f64>, b: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), a.ncols() + b.ncols()));
    out.slice_mut(s![.., ..a.ncols()]).assign(&a);
    out.slice_mut(s![.., a.ncols()..]).assign(&b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn scalar_loss(net: &Mlp, x: &Array2<f64>, weights: &Array2<f64>) -> f64 {
        (net.forward(x.view()).unwrap() * weights).sum()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(&[3, 5, 2]).unwrap();
        let y = net.forward(array![[1.0, -2.0, 3.5]].view()).unwrap();
        assert_eq!(y, array![[0.0, 0.0]]);
    }

    #[test]
    fn identity_layer_passes_input() {
        let d = Dense {
            weight: Array2::eye(3),
            bias: Array1::zeros(3),
        };
        let net = Mlp::from_layers(vec![d]).unwrap();
        assert_eq!(
            net.forward_vec(&[0.5, -1.0, 2.0]).unwrap(),
            vec![0.5, -1.0, 2.0]
        );
    }

    #[test]
    fn two_layer_matches_hand_evaluation() {
        // W1 = [[1,-1],[2,0.5]] (in x out), b1 = [0.1,-0.2]
        // W2 = [[0.3],[-0.7]], b2 = [0.05]
        let net = Mlp::from_layers(vec![
            Dense {
                weight: array![[1.0, -1.0], [2.0, 0.5]],
                bias: array![0.1, -0.2],
            },
            Dense {
                weight: array![[0.3], [-0.7]],
                bias: array![0.05],
            },
        ])
        .unwrap();
        // x = [1, 2]: z1 = [1+4+0.1, -1+1-0.2] = [5.1, -0.2]; h = [5.1, 0]
        // y = 5.1*0.3 + 0.05 = 1.58
        let y = net.forward_vec(&[1.0, 2.0]).unwrap();
        assert!((y[0] - 1.58).abs() < 1e-12);
        // x = [-1, 1]: z1 = [-1+2+0.1, 1+0.5-0.2] = [1.1, 1.3]
        // y = 0.33 - 0.91 + 0.05 = -0.53
        let y = net.forward_vec(&[-1.0, 1.0]).unwrap();
        assert!((y[0] + 0.53).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let net = Mlp::zeros(&[2, 4, 1]).unwrap();
        assert!(matches!(
            net.forward_vec(&[1.0, 2.0, 3.0]),
            Err(Error::Config(_))
        ));
        let bad = vec![Dense::zeros(2, 3), Dense::zeros(4, 1)];
        assert!(matches!(Mlp::from_layers(bad), Err(Error::Config(_))));
    }

    #[test]
    fn linear_gradient_row_equals_input() {
        let mut rng = Rng::new(1);
        let net = Mlp::new(&[3, 2], &mut rng).unwrap();
        let x = array![[0.4, -1.5, 2.0]];
        let (_, tape) = net.forward_with_tape(x.view()).unwrap();
        // loss = y[0]
        let (g, _) = net.backward(&tape, array![[1.0, 0.0]].view()).unwrap();
        // weight is in x out, so dLoss/dW[:, 0] = x
        assert_eq!(g.layers[0].weight.column(0).to_vec(), vec![0.4, -1.5, 2.0]);
        assert_eq!(g.layers[0].weight.column(1).to_vec(), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = Rng::new(2);
        let net = Mlp::new(&[2, 8, 8, 3], &mut rng).unwrap();
        let x = array![[0.3, 0.9], [-0.2, 0.1]];
        let (_, tape) = net.forward_with_tape(x.view()).unwrap();
        let (g, dx) = net.backward(&tape, Array2::zeros((2, 3)).view()).unwrap();
        assert_eq!(g.global_norm(), 0.0);
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_tape_is_usage_error() {
        let mut rng = Rng::new(3);
        let mut net = Mlp::new(&[2, 4, 1], &mut rng).unwrap();
        let x = array![[0.3, 0.9]];
        let (_, tape) = net.forward_with_tape(x.view()).unwrap();
        let (g, _) = net.backward(&tape, array![[1.0]].view()).unwrap();
        net.adam_step(&g, 1e-3, &AdamConfig::default()).unwrap();
        assert!(matches!(
            net.backward(&tape, array![[1.0]].view()),
            Err(Error::Usage(_))
        ));
        assert!(matches!(
            net.backward(
                &net.forward_with_tape(x.view()).unwrap().1,
                array![[1.0, 2.0]].view()
            ),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = Rng::new(11);
        for sizes in [
            vec![2, 1],
            vec![3, 6, 2],
            vec![3, 16, 16, 1],
            vec![2, 8, 8, 8, 8, 2],
        ] {
            let net = Mlp::new(&sizes, &mut rng).unwrap();
            let b = 4;
            let x = Array2::from_shape_fn((b, sizes[0]), |_| rng.uniform_range(-1.0, 1.0));
            let out = *sizes.last().unwrap();
            let w = Array2::from_shape_fn((b, out), |_| rng.uniform_range(-1.0, 1.0));
            let (_, tape) = net.forward_with_tape(x.view()).unwrap();
            let (g, dx) = net.backward(&tape, w.view()).unwrap();
            let analytic = g.flatten();
            let theta = net.params_flat();
            let h = 1e-5;
            for i in 0..theta.len() {
                let mut plus = net.clone();
                let mut minus = net.clone();
                let mut tp = theta.clone();
                tp[i] += h;
                plus.set_params_flat(&tp).unwrap();
                tp[i] -= 2.0 * h;
                minus.set_params_flat(&tp).unwrap();
                let fd = (scalar_loss(&plus, &x, &w) - scalar_loss(&minus, &x, &w)) / (2.0 * h);
                let err = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6);
                assert!(
                    err < 1e-4,
                    "sizes {sizes:?} param {i}: fd {fd} vs {}",
                    analytic[i]
                );
            }
            for r in 0..b {
                for c in 0..sizes[0] {
                    let mut xp = x.clone();
                    xp[[r, c]] += h;
                    let mut xm = x.clone();
                    xm[[r, c]] -= h;
                    let fd = (scalar_loss(&net, &xp, &w) - scalar_loss(&net, &xm, &w)) / (2.0 * h);
                    assert!((fd - dx[[r, c]]).abs() < 1e-6 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn bias_free_relu_net_is_positively_homogeneous() {
        let mut rng = Rng::new(5);
        let mut net = Mlp::new(&[2, 16, 16, 1], &mut rng).unwrap();
        let mut layers = net.layers().to_vec();
        for d in &mut layers {
            d.bias.fill(0.0);
        }
        net = Mlp::from_layers(layers).unwrap();
        for _ in 0..20 {
            let x = [rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0)];
            let lambda = rng.uniform_range(0.1, 5.0);
            let y = net.forward_vec(&x).unwrap()[0];
            let y_scaled = net.forward_vec(&[lambda * x[0], lambda * x[1]]).unwrap()[0];
            assert!((y_scaled - lambda * y).abs() < 1e-12 * (1.0 + y.abs() * lambda));
        }
    }

    #[test]
    fn polyak_extremes() {
        let mut rng = Rng::new(9);
        let a = Mlp::new(&[2, 4, 1], &mut rng).unwrap();
        let b = Mlp::new(&[2, 4, 1], &mut rng).unwrap();
        let mut t = b.clone();
        t.polyak_toward(&a, 0.0).unwrap();
        assert_eq!(t.layers(), b.layers());
        t.polyak_toward(&a, 1.0).unwrap();
        assert_eq!(t.layers(), a.layers());
    }

    #[test]
    fn clip_rescales_to_max_norm() {
        let mut rng = Rng::new(4);
        let net = Mlp::new(&[2, 4, 1], &mut rng).unwrap();
        let mut g = net.zero_gradients();
        g.layers[0].weight.fill(3.0);
        let before = g.clip_global_norm(1.0);
        assert!(before > 1.0);
        assert!((g.global_norm() - 1.0).abs() < 1e-12);
    }
}
