//! Dense ReLU layers with exact reverse-mode gradients, L1/L2 weight
//! penalties and Nesterov-momentum SGD.
//!
//! Batches are row-major: a batch of `m` inputs of width `k` is an `m × k`
//! matrix. Weights are stored `out × in`.

use ndarray::{Array, Array1, Array2, ArrayView2, Axis, Dimension, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>) -> Result<Self> {
        let (out, inp) = weights.dim();
        if out == 0 || inp == 0 || bias.len() != out {
            return Err(Error::dim(format!(
                "layer weights {out}x{inp} with bias of length {}",
                bias.len()
            )));
        }
        Ok(LayerParams { weights, bias })
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        LayerParams {
            weights: Array2::zeros((out_dim, in_dim)),
            bias: Array1::zeros(out_dim),
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn glorot<R: Rng>(out_dim: usize, in_dim: usize, rng: &mut R) -> Self {
        let limit = glorot_limit(in_dim, out_dim);
        let weights =
            Array2::from_shape_simple_fn((out_dim, in_dim), || rng.gen_range(-limit..=limit));
        LayerParams {
            weights,
            bias: Array1::zeros(out_dim),
        }
    }

    /// Identity map over a non-negative input of width `width`.
    pub fn identity(width: usize) -> Self {
        LayerParams {
            weights: Array2::eye(width),
            bias: Array1::zeros(width),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn same_shape(&self, other: &LayerParams) -> bool {
        self.weights.dim() == other.weights.dim() && self.bias.len() == other.bias.len()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.out_dim(), self.in_dim())
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

pub fn relu<D: Dimension>(x: &Array<f64, D>) -> Array<f64, D> {
    x.mapv(|v| v.max(0.0))
}

fn check_chain(layers: &[LayerParams], input_width: usize) -> Result<()> {
    let mut width = input_width;
    for (k, layer) in layers.iter().enumerate() {
        if layer.in_dim() != width {
            return Err(Error::dim(format!(
                "layer {k} expects input width {}, got {width}",
                layer.in_dim()
            )));
        }
        width = layer.out_dim();
    }
    Ok(())
}

/// Returns the post-activation output of every layer, `y^(1) … y^(K)`.
pub fn forward(layers: &[LayerParams], input: ArrayView2<f64>) -> Result<Vec<Array2<f64>>> {
    check_chain(layers, input.ncols())?;
    let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let x = outputs.last().map(|a| a.view()).unwrap_or(input);
        let mut y = x.dot(&layer.weights.t());
        Zip::from(y.rows_mut()).for_each(|mut row| {
            Zip::from(&mut row)
                .and(&layer.bias)
                .for_each(|v, &b| *v = (*v + b).max(0.0));
        });
        outputs.push(y);
    }
    Ok(outputs)
}

/// Output of the final layer for one input vector.
pub fn forward_vec(layers: &[LayerParams], x: &Array1<f64>) -> Result<Array1<f64>> {
    let input = x.view().insert_axis(Axis(0));
    let mut outputs = forward(layers, input)?;
    Ok(match outputs.pop() {
        Some(y) => y.row(0).to_owned(),
        None => x.clone(),
    })
}

#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerParams>,
    pub input: Array2<f64>,
}

/// Backpropagates `grad_output` (gradient w.r.t. the final layer's output)
/// through a network evaluated by [`forward`]. ReLU's derivative at 0 is 0.
pub fn backward(
    layers: &[LayerParams],
    input: ArrayView2<f64>,
    activations: &[Array2<f64>],
    grad_output: ArrayView2<f64>,
) -> Result<Gradients> {
    check_chain(layers, input.ncols())?;
    if activations.len() != layers.len() {
        return Err(Error::dim(format!(
            "{} activations for {} layers",
            activations.len(),
            layers.len()
        )));
    }
    for (k, (a, l)) in activations.iter().zip(layers).enumerate() {
        if a.dim() != (input.nrows(), l.out_dim()) {
            return Err(Error::dim(format!(
                "activation {k} has shape {:?}",
                a.dim()
            )));
        }
    }
    let expected = activations.last().map(|a| a.dim()).unwrap_or(input.dim());
    if grad_output.dim() != expected {
        return Err(Error::dim(format!(
            "output gradient {:?}, expected {expected:?}",
            grad_output.dim()
        )));
    }

    let mut grads = vec![None; layers.len()];
    let mut upstream = grad_output.to_owned();
    for k in (0..layers.len()).rev() {
        let y = &activations[k];
        Zip::from(&mut upstream).and(y).for_each(|g, &v| {
            if v <= 0.0 {
                *g = 0.0;
            }
        });
        let x = if k == 0 {
            input
        } else {
            activations[k - 1].view()
        };
        let weights = upstream.t().dot(&x);
        let bias = upstream.sum_axis(Axis(0));
        upstream = upstream.dot(&layers[k].weights);
        grads[k] = Some(LayerParams { weights, bias });
    }
    Ok(Gradients {
        layers: grads.into_iter().map(|g| g.expect("filled")).collect(),
        input: upstream,
    })
}

/// `ν1 Σ‖W‖₁ + ν2 Σ‖W‖²_F` over weight matrices (biases excluded) and its
/// gradient `ν1 sign(W) + 2 ν2 W`, with `sign(0) = 0`.
pub fn regularizer_value_and_grads<'a, I>(layers: I, nu1: f64, nu2: f64) -> (f64, Vec<LayerParams>)
where
    I: IntoIterator<Item = &'a LayerParams>,
{
    let mut value = 0.0;
    let mut grads = Vec::new();
    for layer in layers {
        let l1: f64 = layer.weights.iter().map(|w| w.abs()).sum();
        let l2: f64 = layer.weights.iter().map(|w| w * w).sum();
        value += nu1 * l1 + nu2 * l2;
        let weights = layer.weights.mapv(|w| {
            let sign = if w > 0.0 {
                1.0
            } else if w < 0.0 {
                -1.0
            } else {
                0.0
            };
            nu1 * sign + 2.0 * nu2 * w
        });
        grads.push(LayerParams {
            weights,
            bias: Array1::zeros(layer.bias.len()),
        });
    }
    (value, grads)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub base_lr: f64,
    pub momentum: f64,
    pub decay: f64,
}

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub velocities: Vec<LayerParams>,
    pub step_count: u64,
    pub config: SgdConfig,
}

impl OptimizerState {
    pub fn new<'a, I>(params: I, config: SgdConfig) -> Result<Self>
    where
        I: IntoIterator<Item = &'a LayerParams>,
    {
        if !(config.base_lr > 0.0)
            || !(0.0..1.0).contains(&config.momentum)
            || !(config.decay >= 0.0)
        {
            return Err(Error::config(format!(
                "invalid optimizer settings {config:?}"
            )));
        }
        Ok(OptimizerState {
            velocities: params.into_iter().map(LayerParams::zeros_like).collect(),
            step_count: 0,
            config,
        })
    }

    /// `base_lr / (1 + decay · step_count)`.
    pub fn learning_rate(&self) -> f64 {
        self.config.base_lr / (1.0 + self.config.decay * self.step_count as f64)
    }
}

/// One Nesterov update in parameter form:
/// `v ← μv − η g`, `θ ← θ + μv − η g`.
pub fn nesterov_step<'a, I>(
    params: I,
    grads: &[LayerParams],
    state: &mut OptimizerState,
) -> Result<()>
where
    I: IntoIterator<Item = &'a mut LayerParams>,
{
    let params: Vec<&mut LayerParams> = params.into_iter().collect();
    if params.len() != grads.len() || params.len() != state.velocities.len() {
        return Err(Error::dim(format!(
            "{} parameter tensors, {} gradients, {} velocities",
            params.len(),
            grads.len(),
            state.velocities.len()
        )));
    }
    for (k, ((p, g), v)) in params.iter().zip(grads).zip(&state.velocities).enumerate() {
        if !p.same_shape(g) || !p.same_shape(v) {
            return Err(Error::dim(format!("shape mismatch at layer {k}")));
        }
    }
    let lr = state.learning_rate();
    let mu = state.config.momentum;
    let update = |p: &mut f64, v: &mut f64, g: f64| {
        *v = mu * *v - lr * g;
        *p += mu * *v - lr * g;
    };
    for ((p, g), v) in params.into_iter().zip(grads).zip(&mut state.velocities) {
        Zip::from(&mut p.weights)
            .and(&mut v.weights)
            .and(&g.weights)
            .for_each(|p, v, &g| update(p, v, g));
        Zip::from(&mut p.bias)
            .and(&mut v.bias)
            .and(&g.bias)
            .for_each(|p, v, &g| update(p, v, g));
    }
    state.step_count += 1;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relu_definition() {
        assert_eq!(relu(&array![-1.0, 0.0, 2.0]), array![0.0, 0.0, 2.0]);
        assert_eq!(relu(&array![-1.0, -3.0]), array![0.0, 0.0]);
        let x = array![[-0.5, 1.5], [2.0, -2.0]];
        assert_eq!(relu(&relu(&x)), relu(&x));
    }

    #[test]
    fn forward_hand_cases() {
        let id = vec![LayerParams::identity(2)];
        assert_eq!(
            forward_vec(&id, &array![1.0, 2.0]).unwrap(),
            array![1.0, 2.0]
        );

        let sum = vec![LayerParams::new(array![[1.0, 1.0]], array![-3.0]).unwrap()];
        assert_eq!(forward_vec(&sum, &array![1.0, 2.0]).unwrap(), array![0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = vec![
            LayerParams::glorot(4, 3, &mut rng),
            LayerParams::glorot(2, 4, &mut rng),
        ];
        let acts = forward(&net, Array2::zeros((5, 3)).view()).unwrap();
        assert!(acts.iter().all(|a| a.iter().all(|&v| v == 0.0)));

        assert!(forward(&net, Array2::zeros((1, 4)).view()).is_err());
    }

    #[test]
    fn backward_linear_region_is_outer_product() {
        let layer = LayerParams::new(array![[1.0, 2.0], [0.5, 1.0]], array![0.1, 0.1]).unwrap();
        let x = array![[1.0, 3.0]];
        let acts = forward(std::slice::from_ref(&layer), x.view()).unwrap();
        let g = array![[0.7, -1.3]];
        let grads = backward(std::slice::from_ref(&layer), x.view(), &acts, g.view()).unwrap();
        assert_eq!(grads.layers[0].weights, g.t().dot(&x));
        assert_eq!(grads.layers[0].bias, array![0.7, -1.3]);
        assert_eq!(grads.input, g.dot(&layer.weights));
    }

    #[test]
    fn backward_zero_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = vec![
            LayerParams::glorot(4, 3, &mut rng),
            LayerParams::glorot(2, 4, &mut rng),
        ];
        let x = Array2::from_shape_fn((2, 3), |(i, j)| (i + j) as f64 * 0.3);
        let acts = forward(&net, x.view()).unwrap();
        let grads = backward(&net, x.view(), &acts, Array2::zeros((2, 2)).view()).unwrap();
        for g in &grads.layers {
            assert!(g.weights.iter().chain(g.bias.iter()).all(|&v| v == 0.0));
        }
        assert!(backward(&net, x.view(), &acts, Array2::zeros((2, 3)).view()).is_err());
    }

    #[test]
    fn regularizer_hand_cases() {
        let zero = LayerParams::zeros(2, 2);
        let (v, g) = regularizer_value_and_grads([&zero], 1.0, 1.0);
        assert_eq!(v, 0.0);
        assert!(g[0].weights.iter().all(|&x| x == 0.0));

        let single = LayerParams::new(array![[3.0]], array![5.0]).unwrap();
        let (v, g) = regularizer_value_and_grads([&single], 1.0, 1.0);
        assert_eq!(v, 12.0);
        assert_eq!(g[0].weights[[0, 0]], 7.0);
        assert_eq!(g[0].bias[0], 0.0);

        let (v1, _) = regularizer_value_and_grads([&single], 0.0, 0.5);
        let (v2, _) = regularizer_value_and_grads([&single], 0.0, 1.0);
        assert_eq!(v2, 2.0 * v1);
    }

    fn scalar_param(w: f64) -> LayerParams {
        LayerParams::new(array![[w]], array![0.0]).unwrap()
    }

    fn sgd(lr: f64, momentum: f64, decay: f64) -> SgdConfig {
        SgdConfig {
            base_lr: lr,
            momentum,
            decay,
        }
    }

    #[test]
    fn nesterov_hand_step() {
        // f(w) = w²/2, gradient w
        let mut p = scalar_param(1.0);
        let mut state = OptimizerState::new([&p], sgd(0.1, 0.99, 0.0)).unwrap();
        let g = scalar_param(1.0);
        nesterov_step([&mut p], std::slice::from_ref(&g), &mut state).unwrap();
        assert!((state.velocities[0].weights[[0, 0]] + 0.1).abs() < 1e-15);
        assert!((p.weights[[0, 0]] - 0.801).abs() < 1e-15);
        assert_eq!(state.step_count, 1);
    }

    #[test]
    fn zero_momentum_is_plain_sgd() {
        let mut p = scalar_param(2.0);
        let mut state = OptimizerState::new([&p], sgd(0.25, 0.0, 0.0)).unwrap();
        nesterov_step([&mut p], &[scalar_param(4.0)], &mut state).unwrap();
        assert_eq!(p.weights[[0, 0]], 1.0);
    }

    #[test]
    fn zero_gradient_settles() {
        let mut p = scalar_param(0.0);
        let mut state = OptimizerState::new([&p], sgd(0.1, 0.9, 0.0)).unwrap();
        nesterov_step([&mut p], &[scalar_param(1.0)], &mut state).unwrap();
        let mut last = p.weights[[0, 0]];
        for _ in 0..500 {
            nesterov_step([&mut p], &[scalar_param(0.0)], &mut state).unwrap();
            last = p.weights[[0, 0]];
        }
        nesterov_step([&mut p], &[scalar_param(0.0)], &mut state).unwrap();
        assert!((p.weights[[0, 0]] - last).abs() < 1e-12);
    }

    #[test]
    fn learning_rate_decays() {
        let p = scalar_param(0.0);
        let mut state = OptimizerState::new([&p], sgd(0.1, 0.5, 1e-3)).unwrap();
        let mut prev = state.learning_rate();
        for step in 1..100 {
            state.step_count = step;
            let lr = state.learning_rate();
            assert!(lr < prev);
            prev = lr;
        }
    }

    #[test]
    fn nesterov_shape_mismatch() {
        let mut p = scalar_param(0.0);
        let mut state = OptimizerState::new([&p], sgd(0.1, 0.5, 0.0)).unwrap();
        assert!(nesterov_step([&mut p], &[LayerParams::zeros(2, 1)], &mut state).is_err());
        assert!(nesterov_step([&mut p], &[], &mut state).is_err());
    }
}
