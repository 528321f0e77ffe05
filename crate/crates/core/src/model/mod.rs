//! The deep autoencoder: architecture, the composite objective
//! `L_glob + α L_loc + ν1 L1 + ν2 L2` with exact gradients, the minibatch
//! trainer over edges, and embedding/reconstruction extraction.

mod checkpoint;

use std::collections::HashMap;

use ndarray::{s, Array1, Array2, ArrayView1, Axis, Zip};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSnapshot};
use crate::nn::{self, LayerParams, OptimizerState, SgdConfig};
use crate::seed::{self, Stream};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};

/// Rows per block when scoring a whole graph.
const EVAL_BLOCK: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub alpha: f64,
    pub beta: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub rho: f64,
    pub d: usize,
    pub hidden: Vec<usize>,
    pub base_lr: f64,
    pub momentum: f64,
    pub decay: f64,
    pub batch_size: usize,
    pub epochs_first: usize,
    pub epochs_warm: usize,
    /// Uniform noise added to replicated units when widening.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            alpha: 1e-5,
            beta: 5.0,
            nu1: 1e-6,
            nu2: 1e-6,
            rho: 0.3,
            d: 100,
            hidden: vec![500, 300],
            base_lr: 5e-7,
            momentum: 0.99,
            decay: 1e-5,
            batch_size: 256,
            epochs_first: 50,
            epochs_warm: 20,
            noise_scale: 1e-4,
            seed: 0,
        }
    }
}

impl Hyperparameters {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m));
        if !(self.beta > 1.0) {
            return bad("beta must exceed 1");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho must lie in (0, 1)");
        }
        if !(self.alpha >= 0.0 && self.nu1 >= 0.0 && self.nu2 >= 0.0) {
            return bad("alpha, nu1 and nu2 must be non-negative");
        }
        if self.d == 0 || self.hidden.contains(&0) {
            return bad("layer widths must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.noise_scale >= 0.0) {
            return bad("noise_scale must be non-negative");
        }
        self.sgd().map(|_| ())
    }

    pub fn sgd(&self) -> Result<SgdConfig> {
        let config = SgdConfig {
            base_lr: self.base_lr,
            momentum: self.momentum,
            decay: self.decay,
        };
        if !(config.base_lr > 0.0)
            || !(0.0..1.0).contains(&config.momentum)
            || !(config.decay >= 0.0)
        {
            return Err(Error::config(format!(
                "invalid optimizer settings {config:?}"
            )));
        }
        Ok(config)
    }
}

/// Encoder `n → … → d` and mirrored decoder `d → … → n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoencoderParams {
    pub encoder: Vec<LayerParams>,
    pub decoder: Vec<LayerParams>,
}

impl AutoencoderParams {
    pub fn new(encoder: Vec<LayerParams>, decoder: Vec<LayerParams>) -> Result<Self> {
        let params = AutoencoderParams { encoder, decoder };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder.is_empty() || self.decoder.is_empty() {
            return Err(Error::dim("encoder and decoder need at least one layer"));
        }
        for (name, layers) in [("encoder", &self.encoder), ("decoder", &self.decoder)] {
            for (k, pair) in layers.windows(2).enumerate() {
                if pair[1].in_dim() != pair[0].out_dim() {
                    return Err(Error::dim(format!(
                        "{name} layers {k} and {} do not chain",
                        k + 1
                    )));
                }
            }
        }
        let enc = self.encoder_sizes();
        let mut dec = self.decoder_sizes();
        dec.reverse();
        if enc != dec {
            return Err(Error::dim(format!(
                "decoder sizes {:?} do not mirror encoder sizes {enc:?}",
                self.decoder_sizes()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.encoder[0].in_dim()
    }

    pub fn d(&self) -> usize {
        self.encoder.last().expect("non-empty").out_dim()
    }

    /// Number of encoder layers `K`.
    pub fn depth(&self) -> usize {
        self.encoder.len()
    }

    /// `[n, hidden…, d]`.
    pub fn encoder_sizes(&self) -> Vec<usize> {
        chain_sizes(&self.encoder)
    }

    /// `[d, …, n]`.
    pub fn decoder_sizes(&self) -> Vec<usize> {
        chain_sizes(&self.decoder)
    }

    pub fn hidden_sizes(&self) -> Vec<usize> {
        let sizes = self.encoder_sizes();
        sizes[1..sizes.len() - 1].to_vec()
    }

    pub fn layers(&self) -> impl Iterator<Item = &LayerParams> {
        self.encoder.iter().chain(self.decoder.iter())
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut LayerParams> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(LayerParams::param_count).sum()
    }

    /// Final-encoder output for each row of `inputs`.
    pub fn encode(&self, inputs: ndarray::ArrayView2<f64>) -> Result<Array2<f64>> {
        Ok(nn::forward(&self.encoder, inputs)?
            .pop()
            .expect("non-empty"))
    }

    /// Decoder output for each row of `inputs`.
    pub fn reconstruct(&self, inputs: ndarray::ArrayView2<f64>) -> Result<Array2<f64>> {
        let y = self.encode(inputs)?;
        Ok(nn::forward(&self.decoder, y.view())?
            .pop()
            .expect("non-empty"))
    }
}

fn chain_sizes(layers: &[LayerParams]) -> Vec<usize> {
    let mut sizes = vec![layers[0].in_dim()];
    sizes.extend(layers.iter().map(LayerParams::out_dim));
    sizes
}

/// Fresh autoencoder with encoder widths `[n, hidden…, d]`, Glorot-uniform
/// weights and zero biases.
pub fn build_autoencoder(
    n: usize,
    hidden: &[usize],
    d: usize,
    seed: u64,
) -> Result<AutoencoderParams> {
    if n == 0 || d == 0 || hidden.contains(&0) {
        return Err(Error::config(format!(
            "invalid autoencoder sizes n={n}, hidden={hidden:?}, d={d}"
        )));
    }
    let mut rng = seed::rng(seed, 0, Stream::Init);
    let mut sizes = vec![n];
    sizes.extend_from_slice(hidden);
    sizes.push(d);
    let encoder = sizes
        .windows(2)
        .map(|w| LayerParams::glorot(w[1], w[0], &mut rng))
        .collect();
    let decoder = sizes
        .windows(2)
        .rev()
        .map(|w| LayerParams::glorot(w[0], w[1], &mut rng))
        .collect();
    AutoencoderParams::new(encoder, decoder)
}

/// `b_ij = β` where `s_ij ≠ 0`, else 1.
pub fn penalty_matrix_row(s: ArrayView1<f64>, beta: f64) -> Result<Array1<f64>> {
    if !(beta > 1.0) {
        return Err(Error::config(format!("beta must exceed 1, got {beta}")));
    }
    Ok(s.mapv(|v| if v != 0.0 { beta } else { 1.0 }))
}

/// `Σ_j ((x̂_j − x_j) b_j)²`.
pub fn loss_global(x: ArrayView1<f64>, x_hat: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    if x.len() != x_hat.len() || x.len() != b.len() {
        return Err(Error::dim(format!(
            "lengths {}, {}, {}",
            x.len(),
            x_hat.len(),
            b.len()
        )));
    }
    Ok(Zip::from(&x)
        .and(&x_hat)
        .and(&b)
        .fold(0.0, |acc, &x, &xh, &b| acc + ((xh - x) * b).powi(2)))
}

/// `s_ij ‖y_i − y_j‖²`.
pub fn loss_local(y_i: ArrayView1<f64>, y_j: ArrayView1<f64>, s_ij: f64) -> Result<f64> {
    if y_i.len() != y_j.len() {
        return Err(Error::dim(format!(
            "lengths {} and {}",
            y_i.len(),
            y_j.len()
        )));
    }
    Ok(s_ij
        * Zip::from(&y_i)
            .and(&y_j)
            .fold(0.0, |acc, &a, &b| acc + (a - b).powi(2)))
}

/// Sampled edges with the dense neighbour vectors of their endpoints.
///
/// Endpoints shared between edges are stored once together with how many
/// times they occur, so each reconstruction is still counted per endpoint.
#[derive(Debug, Clone)]
pub struct TrainBatch {
    pub pairs: Vec<Edge>,
    /// Distinct endpoint nodes, in first-seen order.
    pub nodes: Vec<usize>,
    /// Row `r` is `s_{nodes[r]}`.
    pub inputs: Array2<f64>,
    /// Row `r` is `b_{nodes[r]}`.
    pub penalties: Array2<f64>,
    pub multiplicity: Vec<f64>,
    /// `(row of u, row of v)` for every pair.
    pub pair_rows: Vec<(usize, usize)>,
}

impl TrainBatch {
    pub fn new(snapshot: &GraphSnapshot, pairs: &[Edge], beta: f64) -> Result<Self> {
        let n = snapshot.node_count();
        let mut rows: HashMap<usize, usize> = HashMap::new();
        let mut nodes = Vec::new();
        let mut multiplicity = Vec::new();
        let mut pair_rows = Vec::with_capacity(pairs.len());
        for e in pairs {
            if !(e.weight > 0.0) {
                return Err(Error::config(format!(
                    "pair ({}, {}) has no edge weight",
                    e.u, e.v
                )));
            }
            let mut row_of = |node: usize| {
                let r = *rows.entry(node).or_insert_with(|| {
                    nodes.push(node);
                    multiplicity.push(0.0);
                    nodes.len() - 1
                });
                multiplicity[r] += 1.0;
                r
            };
            let ru = row_of(e.u);
            let rv = row_of(e.v);
            pair_rows.push((ru, rv));
        }
        let mut inputs = Array2::zeros((nodes.len(), n));
        for (r, &node) in nodes.iter().enumerate() {
            if node >= n {
                return Err(Error::IndexOutOfRange {
                    index: node,
                    len: n,
                });
            }
            for &(j, w) in snapshot.neighbors(node) {
                inputs[[r, j]] = w;
            }
        }
        if !(beta > 1.0) {
            return Err(Error::config(format!("beta must exceed 1, got {beta}")));
        }
        let penalties = inputs.mapv(|v| if v != 0.0 { beta } else { 1.0 });
        Ok(TrainBatch {
            pairs: pairs.to_vec(),
            nodes,
            inputs,
            penalties,
            multiplicity,
            pair_rows,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub global: f64,
    /// Unweighted first-order term.
    pub local: f64,
    pub l1: f64,
    pub l2: f64,
}

/// Batch objective and its gradient, ordered encoder layers then decoder layers.
pub fn loss_net_batch(
    params: &AutoencoderParams,
    batch: &TrainBatch,
    hyper: &Hyperparameters,
) -> Result<(LossBreakdown, Vec<LayerParams>)> {
    if batch.inputs.ncols() != params.n() {
        return Err(Error::dim(format!(
            "batch width {} but model input width {}",
            batch.inputs.ncols(),
            params.n()
        )));
    }
    let x = batch.inputs.view();
    let enc_acts = nn::forward(&params.encoder, x)?;
    let y = enc_acts.last().expect("non-empty");
    let dec_acts = nn::forward(&params.decoder, y.view())?;
    let x_hat = dec_acts.last().expect("non-empty");

    // L_glob weighted by endpoint multiplicity
    let mut global = 0.0;
    let mut grad_out = Array2::zeros(x_hat.raw_dim());
    for (r, mut g_row) in grad_out.axis_iter_mut(Axis(0)).enumerate() {
        let c = batch.multiplicity[r];
        Zip::from(&mut g_row)
            .and(x_hat.row(r))
            .and(x.row(r))
            .and(batch.penalties.row(r))
            .for_each(|g, &xh, &xv, &b| {
                let diff = xh - xv;
                let b2 = b * b;
                global += c * diff * diff * b2;
                *g = 2.0 * c * diff * b2;
            });
    }
    let dec_grads = nn::backward(&params.decoder, y.view(), &dec_acts, grad_out.view())?;

    let mut grad_y = dec_grads.input;
    let mut local = 0.0;
    for (e, &(ru, rv)) in batch.pairs.iter().zip(&batch.pair_rows) {
        let diff = &y.row(ru) - &y.row(rv);
        local += e.weight * diff.dot(&diff);
        let scaled = diff * (2.0 * hyper.alpha * e.weight);
        {
            let mut row = grad_y.row_mut(ru);
            row += &scaled;
        }
        let mut row = grad_y.row_mut(rv);
        row -= &scaled;
    }
    let enc_grads = nn::backward(&params.encoder, x, &enc_acts, grad_y.view())?;

    let (_, reg_grads) = nn::regularizer_value_and_grads(params.layers(), hyper.nu1, hyper.nu2);
    let (l1, _) = nn::regularizer_value_and_grads(params.layers(), 1.0, 0.0);
    let (l2, _) = nn::regularizer_value_and_grads(params.layers(), 0.0, 1.0);

    let mut grads: Vec<LayerParams> = enc_grads
        .layers
        .into_iter()
        .chain(dec_grads.layers)
        .collect();
    for (g, r) in grads.iter_mut().zip(&reg_grads) {
        g.weights += &r.weights;
    }

    let total = global + hyper.alpha * local + hyper.nu1 * l1 + hyper.nu2 * l2;
    Ok((
        LossBreakdown {
            total,
            global,
            local,
            l1,
            l2,
        },
        grads,
    ))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Sum of minibatch objectives per epoch.
    pub loss_trace: Vec<f64>,
    pub updates: usize,
}

/// Trains on every edge of `snapshot` for `epochs` passes, shuffling the edge
/// set each epoch with `hyper.seed` and taking a Nesterov step per minibatch.
pub fn train_snapshot(
    params: &mut AutoencoderParams,
    snapshot: &GraphSnapshot,
    hyper: &Hyperparameters,
    epochs: usize,
) -> Result<TrainReport> {
    hyper.validate()?;
    if params.n() != snapshot.node_count() {
        return Err(Error::dim(format!(
            "model input width {} but snapshot has {} nodes",
            params.n(),
            snapshot.node_count()
        )));
    }
    if snapshot.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut report = TrainReport::default();
    if epochs == 0 {
        return Ok(report);
    }
    let mut optimizer = OptimizerState::new(params.layers(), hyper.sgd()?)?;
    let mut rng = seed::rng(hyper.seed, 0, Stream::Shuffle);
    let mut edges = snapshot.edges().to_vec();
    for _ in 0..epochs {
        edges.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in edges.chunks(hyper.batch_size) {
            let batch = TrainBatch::new(snapshot, chunk, hyper.beta)?;
            let (loss, grads) = loss_net_batch(params, &batch, hyper)?;
            if !loss.total.is_finite() {
                return Err(Error::Numerical(format!(
                    "non-finite loss after {} updates; lower the learning rate",
                    report.updates
                )));
            }
            epoch_loss += loss.total;
            nn::nesterov_step(params.layers_mut(), &grads, &mut optimizer)?;
            report.updates += 1;
        }
        report.loss_trace.push(epoch_loss);
    }
    Ok(report)
}

/// Number of minibatch updates one epoch performs on `snapshot`.
pub fn batches_per_epoch(snapshot: &GraphSnapshot, batch_size: usize) -> usize {
    snapshot.edge_count().div_ceil(batch_size.max(1))
}

fn dense_rows(snapshot: &GraphSnapshot, rows: std::ops::Range<usize>) -> Array2<f64> {
    let mut block = Array2::zeros((rows.len(), snapshot.node_count()));
    for (r, i) in rows.enumerate() {
        for &(j, w) in snapshot.neighbors(i) {
            block[[r, j]] = w;
        }
    }
    block
}

fn check_width(params: &AutoencoderParams, snapshot: &GraphSnapshot) -> Result<()> {
    if params.n() != snapshot.node_count() {
        return Err(Error::dim(format!(
            "model input width {} but snapshot has {} nodes",
            params.n(),
            snapshot.node_count()
        )));
    }
    Ok(())
}

fn blockwise<F>(snapshot: &GraphSnapshot, width: usize, f: F) -> Result<Array2<f64>>
where
    F: Fn(Array2<f64>) -> Result<Array2<f64>> + Sync,
{
    let n = snapshot.node_count();
    let starts: Vec<usize> = (0..n).step_by(EVAL_BLOCK).collect();
    let blocks = starts
        .par_iter()
        .map(|&start| f(dense_rows(snapshot, start..(start + EVAL_BLOCK).min(n))))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Array2::zeros((n, width));
    for (&start, block) in starts.iter().zip(blocks) {
        out.slice_mut(s![start..start + block.nrows(), ..])
            .assign(&block);
    }
    Ok(out)
}

/// Row `i` is the encoder output for `s_i`.
pub fn embed(params: &AutoencoderParams, snapshot: &GraphSnapshot) -> Result<Array2<f64>> {
    check_width(params, snapshot)?;
    blockwise(snapshot, params.d(), |x| params.encode(x.view()))
}

/// Row `i` is the reconstruction `ŝ_i`.
pub fn reconstruct_scores(
    params: &AutoencoderParams,
    snapshot: &GraphSnapshot,
) -> Result<Array2<f64>> {
    check_width(params, snapshot)?;
    blockwise(snapshot, params.n(), |x| params.reconstruct(x.view()))
}

/// `(ŝ_ij + ŝ_ji) / 2` with a zero diagonal.
pub fn symmetrize(scores: &Array2<f64>) -> Array2<f64> {
    let mut sym = (scores + &scores.t()) * 0.5;
    sym.diag_mut().fill(0.0);
    sym
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn architecture_shapes() {
        let p = build_autoencoder(1000, &[500, 300], 100, 1).unwrap();
        assert_eq!(p.encoder_sizes(), vec![1000, 500, 300, 100]);
        assert_eq!(p.decoder_sizes(), vec![100, 300, 500, 1000]);
        let p = build_autoencoder(10, &[], 3, 1).unwrap();
        assert_eq!(p.encoder_sizes(), vec![10, 3]);
        assert_eq!(p.depth(), 1);
        assert_eq!(
            build_autoencoder(10, &[4], 3, 9).unwrap(),
            build_autoencoder(10, &[4], 3, 9).unwrap()
        );
        assert!(build_autoencoder(0, &[4], 3, 9).is_err());
        assert!(build_autoencoder(10, &[0], 3, 9).is_err());
        assert!(build_autoencoder(10, &[4], 0, 9).is_err());
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let p = build_autoencoder(40, &[20], 5, 3).unwrap();
        for layer in p.layers() {
            let limit = nn::glorot_limit(layer.in_dim(), layer.out_dim());
            assert!(layer.weights.iter().all(|w| w.abs() <= limit));
            assert!(layer.bias.iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn penalty_rows() {
        assert_eq!(
            penalty_matrix_row(array![0.0, 1.0, 0.0, 2.0].view(), 5.0).unwrap(),
            array![1.0, 5.0, 1.0, 5.0]
        );
        assert_eq!(
            penalty_matrix_row(array![0.0, 0.0].view(), 2.0).unwrap(),
            array![1.0, 1.0]
        );
        assert!(penalty_matrix_row(array![1.0].view(), 1.0).is_err());
    }

    #[test]
    fn loss_terms_hand_values() {
        let x = array![1.0, 0.0];
        assert_eq!(
            loss_global(x.view(), x.view(), array![5.0, 1.0].view()).unwrap(),
            0.0
        );
        assert_eq!(
            loss_global(x.view(), array![0.0, 0.0].view(), array![5.0, 1.0].view()).unwrap(),
            25.0
        );
        assert_eq!(
            loss_global(x.view(), array![0.0, 0.0].view(), array![15.0, 3.0].view()).unwrap(),
            9.0 * 25.0
        );
        assert!(loss_global(x.view(), array![0.0].view(), array![1.0, 1.0].view()).is_err());

        let (a, b) = (array![1.0, 0.0], array![0.0, 1.0]);
        assert_eq!(loss_local(a.view(), a.view(), 3.0).unwrap(), 0.0);
        assert_eq!(loss_local(a.view(), b.view(), 2.0).unwrap(), 4.0);
        assert_eq!(loss_local(b.view(), a.view(), 2.0).unwrap(), 4.0);
        assert!(loss_local(a.view(), array![1.0].view(), 1.0).is_err());
    }

    fn triangle_plus() -> GraphSnapshot {
        GraphSnapshot::from_edges(
            5,
            [
                Edge::new(0, 1, 1.0),
                Edge::new(1, 2, 2.0),
                Edge::new(0, 2, 1.0),
                Edge::new(3, 4, 0.5),
            ],
        )
        .unwrap()
    }

    #[test]
    fn batch_counts_endpoints() {
        let g = triangle_plus();
        let batch = TrainBatch::new(&g, g.edges(), 5.0).unwrap();
        assert_eq!(batch.nodes.len(), 5);
        let total: f64 = batch.multiplicity.iter().sum();
        assert_eq!(total, 8.0);
        let row0 = batch.nodes.iter().position(|&n| n == 0).unwrap();
        assert_eq!(batch.multiplicity[row0], 2.0);
        assert_eq!(
            batch.penalties.row(row0).to_vec(),
            vec![1.0, 5.0, 5.0, 1.0, 1.0]
        );
    }

    #[test]
    fn breakdown_sums_to_total() {
        let g = triangle_plus();
        let p = build_autoencoder(5, &[4], 2, 7).unwrap();
        let hyper = Hyperparameters {
            alpha: 0.3,
            nu1: 0.01,
            nu2: 0.02,
            ..Hyperparameters::default()
        };
        let batch = TrainBatch::new(&g, g.edges(), hyper.beta).unwrap();
        let (loss, grads) = loss_net_batch(&p, &batch, &hyper).unwrap();
        let recomposed =
            loss.global + hyper.alpha * loss.local + hyper.nu1 * loss.l1 + hyper.nu2 * loss.l2;
        assert!((loss.total - recomposed).abs() <= 1e-12 * loss.total.abs().max(1.0));
        assert_eq!(grads.len(), 4);
    }

    #[test]
    fn batch_loss_matches_per_edge_terms() {
        let g = triangle_plus();
        let p = build_autoencoder(5, &[4], 3, 2).unwrap();
        let hyper = Hyperparameters {
            alpha: 0.5,
            nu1: 0.0,
            nu2: 0.0,
            ..Hyperparameters::default()
        };
        let batch = TrainBatch::new(&g, g.edges(), hyper.beta).unwrap();
        let (loss, _) = loss_net_batch(&p, &batch, &hyper).unwrap();

        let mut global = 0.0;
        let mut local = 0.0;
        for e in g.edges() {
            let xi = g.neighbor_vector(e.u).unwrap();
            let xj = g.neighbor_vector(e.v).unwrap();
            for x in [&xi, &xj] {
                let xh =
                    nn::forward_vec(&p.decoder, &nn::forward_vec(&p.encoder, x).unwrap()).unwrap();
                let b = penalty_matrix_row(x.view(), hyper.beta).unwrap();
                global += loss_global(x.view(), xh.view(), b.view()).unwrap();
            }
            let yi = nn::forward_vec(&p.encoder, &xi).unwrap();
            let yj = nn::forward_vec(&p.encoder, &xj).unwrap();
            local += loss_local(yi.view(), yj.view(), e.weight).unwrap();
        }
        assert!((loss.global - global).abs() < 1e-10);
        assert!((loss.local - local).abs() < 1e-10);
    }

    #[test]
    fn perfect_reconstruction_zero_loss() {
        // identity autoencoder on non-negative inputs
        let p = AutoencoderParams::new(
            vec![LayerParams::identity(3)],
            vec![LayerParams::identity(3)],
        )
        .unwrap();
        let g = GraphSnapshot::from_edges(3, [Edge::new(0, 1, 1.0), Edge::new(1, 2, 2.0)]).unwrap();
        let hyper = Hyperparameters {
            alpha: 0.0,
            nu1: 0.0,
            nu2: 0.0,
            ..Hyperparameters::default()
        };
        let batch = TrainBatch::new(&g, g.edges(), hyper.beta).unwrap();
        assert_eq!(loss_net_batch(&p, &batch, &hyper).unwrap().0.total, 0.0);
        let scores = reconstruct_scores(&p, &g).unwrap();
        assert_eq!(scores, g.to_dense());
    }

    #[test]
    fn embed_shapes_and_isolated_nodes() {
        let g = triangle_plus().grow_to(7).unwrap();
        let p = build_autoencoder(7, &[5], 3, 4).unwrap();
        let y = embed(&p, &g).unwrap();
        assert_eq!(y.dim(), (7, 3));
        assert!(y.row(5).iter().all(|&v| v == 0.0));
        assert!(y.iter().all(|&v| v >= 0.0));
        assert!(embed(&p, &triangle_plus()).is_err());
    }

    #[test]
    fn identical_neighbourhoods_identical_rows() {
        // nodes 0 and 1 both connect only to 2 and 3
        let g = GraphSnapshot::from_edges(
            4,
            [
                Edge::new(0, 2, 1.0),
                Edge::new(0, 3, 1.0),
                Edge::new(1, 2, 1.0),
                Edge::new(1, 3, 1.0),
            ],
        )
        .unwrap();
        let p = build_autoencoder(4, &[3], 2, 5).unwrap();
        let y = embed(&p, &g).unwrap();
        assert_eq!(y.row(0), y.row(1));
    }

    #[test]
    fn reconstruct_and_symmetrize() {
        let g = triangle_plus();
        let p = build_autoencoder(5, &[4], 2, 8).unwrap();
        let raw = reconstruct_scores(&p, &g).unwrap();
        assert_eq!(raw.dim(), (5, 5));
        assert!(raw.iter().all(|&v| v >= 0.0));
        let sym = symmetrize(&raw);
        assert_eq!(sym, sym.t());
        assert!(sym.diag().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let g = triangle_plus();
        let mut p = build_autoencoder(5, &[4], 2, 8).unwrap();
        let before = p.clone();
        let report = train_snapshot(&mut p, &g, &Hyperparameters::default(), 0).unwrap();
        assert_eq!(p, before);
        assert!(report.loss_trace.is_empty());
        assert!(matches!(
            train_snapshot(
                &mut p,
                &GraphSnapshot::empty(5),
                &Hyperparameters::default(),
                1
            ),
            Err(Error::EmptyGraph)
        ));
    }
}
