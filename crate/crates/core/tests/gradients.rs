use dyngem::graph::{Edge, GraphSnapshot};
use dyngem::model::{
    build_autoencoder, loss_net_batch, AutoencoderParams, Hyperparameters, TrainBatch,
};
use dyngem::nn::{backward, forward, LayerParams};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_layers(rng: &mut ChaCha8Rng, dims: &[usize]) -> Vec<LayerParams> {
    dims.windows(2)
        .map(|w| {
            let weights = Array2::from_shape_simple_fn((w[1], w[0]), || rng.gen_range(-1.0..1.0));
            let bias = Array1::from_shape_simple_fn(w[1], || rng.gen_range(-0.5..0.5));
            LayerParams::new(weights, bias).unwrap()
        })
        .collect()
}

/// Smallest |pre-activation| over the batch; finite differences are only
/// meaningful away from the ReLU kink.
fn min_margin(layers: &[LayerParams], x: &Array2<f64>) -> f64 {
    let mut margin = f64::INFINITY;
    let mut input = x.clone();
    for l in layers {
        let pre = input.dot(&l.weights.t()) + &l.bias;
        margin = margin.min(pre.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())));
        input = pre.mapv(|v| v.max(0.0));
    }
    margin
}

/// Loss `Σ c ⊙ f(x)` with fixed random coefficients `c`.
fn probe_loss(layers: &[LayerParams], x: &Array2<f64>, c: &Array2<f64>) -> f64 {
    let out = forward(layers, x.view()).unwrap();
    (out.last().unwrap() * c).sum()
}

fn each_param(
    layers: &mut [LayerParams],
    mut f: impl FnMut(&mut [LayerParams], usize, bool, usize),
) {
    for k in 0..layers.len() {
        for idx in 0..layers[k].weights.len() {
            f(layers, k, true, idx);
        }
        for idx in 0..layers[k].bias.len() {
            f(layers, k, false, idx);
        }
    }
}

fn slot(layers: &mut [LayerParams], k: usize, weight: bool, idx: usize) -> &mut f64 {
    if weight {
        let cols = layers[k].weights.ncols();
        &mut layers[k].weights[[idx / cols, idx % cols]]
    } else {
        &mut layers[k].bias[idx]
    }
}

#[test]
fn backward_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    while checked < 20 {
        let depth = rng.gen_range(1..=3);
        let dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=20)).collect();
        let layers = random_layers(&mut rng, &dims);
        let x = Array2::from_shape_simple_fn((4, dims[0]), || rng.gen_range(-1.0..1.0));
        if min_margin(&layers, &x) < 1e-3 {
            continue;
        }
        let c =
            Array2::from_shape_simple_fn((4, *dims.last().unwrap()), || rng.gen_range(-1.0..1.0));
        let acts = forward(&layers, x.view()).unwrap();
        let grads = backward(&layers, x.view(), &acts, c.view()).unwrap();

        let mut work = layers.clone();
        each_param(&mut work, |ls, k, weight, idx| {
            let orig = *slot(ls, k, weight, idx);
            *slot(ls, k, weight, idx) = orig + H;
            let up = probe_loss(ls, &x, &c);
            *slot(ls, k, weight, idx) = orig - H;
            let down = probe_loss(ls, &x, &c);
            *slot(ls, k, weight, idx) = orig;
            let numeric = (up - down) / (2.0 * H);
            let g = &grads.layers[k];
            let analytic = if weight {
                g.weights.as_slice().unwrap()[idx]
            } else {
                g.bias[idx]
            };
            assert!(
                rel_err(analytic, numeric) < REL_TOL,
                "layer {k} {} {idx}: analytic {analytic} numeric {numeric}",
                if weight { "weight" } else { "bias" }
            );
        });
        checked += 1;
    }
}

fn toy_graph(rng: &mut ChaCha8Rng, n: usize) -> GraphSnapshot {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen_bool(0.35) {
                edges.push(Edge::new(i, j, rng.gen_range(0.5..2.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push(Edge::new(0, 1, 1.0));
    }
    GraphSnapshot::from_edges(n, edges).unwrap()
}

fn perturbed_model(
    rng: &mut ChaCha8Rng,
    n: usize,
    hidden: &[usize],
    d: usize,
) -> AutoencoderParams {
    let mut p = build_autoencoder(n, hidden, d, rng.gen()).unwrap();
    for l in p.layers_mut() {
        l.bias.mapv_inplace(|_| rng.gen_range(-0.3..0.3));
        // keep clear of the L1 kink at zero
        l.weights.mapv_inplace(|w| {
            if w.abs() < 1e-2 {
                1e-2f64.copysign(w)
            } else {
                w
            }
        });
    }
    p
}

/// Entry `idx` of tensor `k` (encoder then decoder), weights before biases.
fn entry(p: &mut AutoencoderParams, k: usize, idx: usize) -> &mut f64 {
    let layer = p.layers_mut().nth(k).unwrap();
    let (rows, cols) = layer.weights.dim();
    if idx < rows * cols {
        &mut layer.weights[[idx / cols, idx % cols]]
    } else {
        &mut layer.bias[idx - rows * cols]
    }
}

fn batch_margin(p: &AutoencoderParams, batch: &TrainBatch) -> f64 {
    let enc = min_margin(&p.encoder, &batch.inputs);
    let y = p.encode(batch.inputs.view()).unwrap();
    enc.min(min_margin(&p.decoder, &y))
}

fn check_loss_net(hyper: &Hyperparameters, models: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < models {
        attempts += 1;
        assert!(attempts < 10_000, "could not draw kink-free toy models");
        let n = rng.gen_range(3..=20);
        let depth = rng.gen_range(0..=2);
        let hidden: Vec<usize> = (0..depth).map(|_| rng.gen_range(2..=12)).collect();
        let d = rng.gen_range(1..=6);
        let g = toy_graph(&mut rng, n);
        let params = perturbed_model(&mut rng, n, &hidden, d);
        let take = g.edge_count().min(rng.gen_range(1..=8));
        let batch = TrainBatch::new(&g, &g.edges()[..take], hyper.beta).unwrap();
        if batch_margin(&params, &batch) < 1e-3 {
            continue;
        }
        let (_, grads) = loss_net_batch(&params, &batch, hyper).unwrap();
        let loss = |p: &AutoencoderParams| loss_net_batch(p, &batch, hyper).unwrap().0.total;

        let mut work = params.clone();
        for (k, g) in grads.iter().enumerate() {
            let (rows, cols) = g.weights.dim();
            for idx in 0..rows * cols + g.bias.len() {
                let weight = idx < rows * cols;
                let orig = *entry(&mut work, k, idx);
                *entry(&mut work, k, idx) = orig + H;
                let up = loss(&work);
                *entry(&mut work, k, idx) = orig - H;
                let down = loss(&work);
                *entry(&mut work, k, idx) = orig;
                let numeric = (up - down) / (2.0 * H);
                let analytic = if weight {
                    g.weights[[idx / cols, idx % cols]]
                } else {
                    g.bias[idx - rows * cols]
                };
                assert!(
                    rel_err(analytic, numeric) < REL_TOL,
                    "tensor {k} entry {idx}: analytic {analytic} numeric {numeric}"
                );
            }
        }
        checked += 1;
    }
}

fn hyper(alpha: f64, nu1: f64, nu2: f64) -> Hyperparameters {
    Hyperparameters {
        alpha,
        nu1,
        nu2,
        ..Hyperparameters::default()
    }
}

#[test]
fn loss_net_gradient_combined() {
    check_loss_net(&hyper(0.7, 1e-2, 3e-2), 20, 1);
}

#[test]
fn loss_net_gradient_per_component() {
    // global only, global + local, global + each regularizer
    check_loss_net(&hyper(0.0, 0.0, 0.0), 5, 2);
    check_loss_net(&hyper(2.0, 0.0, 0.0), 5, 3);
    check_loss_net(&hyper(0.0, 0.1, 0.0), 5, 4);
    check_loss_net(&hyper(0.0, 0.0, 0.1), 5, 5);
}
