//! Growing the autoencoder when the node set expands.
//!
//! Widths follow the rule `size(l_{k+1}) ≥ ρ · size(l_k)` along the encoder
//! (and, mirrored, along the decoder from the output inward). Violating
//! hidden widths are raised to the smallest satisfying integer; if the
//! embedding layer itself violates the rule, new layers are inserted in front
//! of it. Widening replicates units and splits their outgoing weights,
//! deepening inserts identity layers, and input/output expansion adds
//! columns/rows for the new nodes. All three preserve the network function on
//! the old nodes' (zero-extended) inputs.

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::AutoencoderParams;
use crate::nn::{glorot_limit, LayerParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Encoder,
    Decoder,
}

/// Raise the output width of `layer` on `side` from `old_width` to `new_width`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WidenOp {
    pub side: Side,
    pub layer: usize,
    pub old_width: usize,
    pub new_width: usize,
}

/// Insert an identity layer of `width` at layer index `position` on `side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeepenOp {
    pub side: Side,
    pub position: usize,
    pub width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthPlan {
    pub old_n: usize,
    pub new_n: usize,
    /// Encoder widths before the plan, `[n, hidden…, d]`.
    pub from_encoder_sizes: Vec<usize>,
    /// Encoder widths after the plan, `[new_n, hidden…, d]`.
    pub encoder_sizes: Vec<usize>,
    /// Decoder widths after the plan, `[d, …, new_n]`.
    pub decoder_sizes: Vec<usize>,
    /// Applied in order after input/output expansion.
    pub deepen_ops: Vec<DeepenOp>,
    /// Applied in order after all deepen ops; indices refer to the deepened network.
    pub widen_ops: Vec<WidenOp>,
}

impl GrowthPlan {
    pub fn is_empty(&self) -> bool {
        self.old_n == self.new_n && self.deepen_ops.is_empty() && self.widen_ops.is_empty()
    }
}

/// Smallest integer `w` with `w ≥ ρ · size`, tolerant of binary rounding in `ρ`.
pub fn min_width(rho: f64, size: usize) -> usize {
    let x = rho * size as f64;
    let r = x.round();
    let w = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (w as usize).max(1)
}

/// Whether every consecutive pair of `sizes` satisfies the width rule.
pub fn satisfies_rule(sizes: &[usize], rho: f64) -> bool {
    sizes.windows(2).all(|w| w[1] >= min_width(rho, w[0]))
}

/// Plans widths for an input of `new_n` nodes. `current` is `[n, hidden…]`
/// (without the embedding width `d`, which never changes).
pub fn propsize_plan(current: &[usize], new_n: usize, rho: f64, d: usize) -> Result<GrowthPlan> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::config(format!("rho must lie in (0, 1), got {rho}")));
    }
    let Some(&old_n) = current.first() else {
        return Err(Error::config("current sizes must include the input width"));
    };
    if new_n < old_n {
        return Err(Error::config(format!(
            "cannot shrink input from {old_n} to {new_n}"
        )));
    }
    if d == 0 || current.contains(&0) {
        return Err(Error::config("layer widths must be positive"));
    }

    let mut target = current.to_vec();
    target[0] = new_n;
    for k in 1..target.len() {
        target[k] = target[k].max(min_width(rho, target[k - 1]));
    }
    let mut inserted = Vec::new();
    let mut last = *target.last().expect("non-empty");
    while d < min_width(rho, last) {
        let width = min_width(rho, last);
        if width >= last {
            return Err(Error::config(format!(
                "no layer widths can step down from {last} to d={d} with rho={rho}"
            )));
        }
        inserted.push(width);
        last = width;
    }
    let hidden_count = current.len() - 1;
    let q = inserted.len();
    target.extend(&inserted);
    target.push(d);

    // network after deepening: each inserted layer starts as a d-wide identity
    let mut deepened = current.to_vec();
    deepened[0] = new_n;
    deepened.extend(std::iter::repeat_n(d, q + 1));

    let mut deepen_ops = Vec::new();
    for r in 0..q {
        deepen_ops.push(DeepenOp {
            side: Side::Encoder,
            position: hidden_count + 1 + r,
            width: d,
        });
    }
    for _ in 0..q {
        deepen_ops.push(DeepenOp {
            side: Side::Decoder,
            position: 0,
            width: d,
        });
    }

    let mut widen_ops = Vec::new();
    for k in 1..target.len() - 1 {
        if target[k] != deepened[k] {
            widen_ops.push(WidenOp {
                side: Side::Encoder,
                layer: k - 1,
                old_width: deepened[k],
                new_width: target[k],
            });
        }
    }
    let dec_target: Vec<usize> = target.iter().rev().copied().collect();
    let dec_deepened: Vec<usize> = deepened.iter().rev().copied().collect();
    for j in 1..dec_target.len() - 1 {
        if dec_target[j] != dec_deepened[j] {
            widen_ops.push(WidenOp {
                side: Side::Decoder,
                layer: j - 1,
                old_width: dec_deepened[j],
                new_width: dec_target[j],
            });
        }
    }

    let mut from_encoder_sizes = current.to_vec();
    from_encoder_sizes.push(d);
    Ok(GrowthPlan {
        old_n,
        new_n,
        from_encoder_sizes,
        encoder_sizes: target,
        decoder_sizes: dec_target,
        deepen_ops,
        widen_ops,
    })
}

fn side_layers(params: &AutoencoderParams, side: Side) -> &Vec<LayerParams> {
    match side {
        Side::Encoder => &params.encoder,
        Side::Decoder => &params.decoder,
    }
}

fn side_layers_mut(params: &mut AutoencoderParams, side: Side) -> &mut Vec<LayerParams> {
    match side {
        Side::Encoder => &mut params.encoder,
        Side::Decoder => &mut params.decoder,
    }
}

/// Net2WiderNet on the hidden output of `layer`. Returns the widened network
/// and the source unit of every output unit.
pub fn net2wider_with_mapping(
    params: &AutoencoderParams,
    side: Side,
    layer: usize,
    new_width: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<(AutoencoderParams, Vec<usize>)> {
    let layers = side_layers(params, side);
    if layer + 1 >= layers.len() {
        return Err(Error::config(format!(
            "{side:?} layer {layer} does not feed a hidden layer and cannot be widened"
        )));
    }
    let old_width = layers[layer].out_dim();
    if new_width < old_width {
        return Err(Error::config(format!(
            "cannot narrow {side:?} layer {layer} from {old_width} to {new_width}"
        )));
    }
    if !(noise_scale >= 0.0) {
        return Err(Error::config("noise_scale must be non-negative"));
    }
    let mut mapping: Vec<usize> = (0..old_width).collect();
    if new_width == old_width {
        return Ok((params.clone(), mapping));
    }

    let mut rng = seed::rng(seed, layer, seed::Stream::Growth);
    mapping.extend((old_width..new_width).map(|_| rng.gen_range(0..old_width)));
    let mut counts = vec![0usize; old_width];
    for &src in &mapping {
        counts[src] += 1;
    }

    let incoming = &layers[layer];
    let outgoing = &layers[layer + 1];
    let mut weights = Array2::zeros((new_width, incoming.in_dim()));
    let mut bias = Array1::zeros(new_width);
    for (unit, &src) in mapping.iter().enumerate() {
        let mut row = weights.row_mut(unit);
        row.assign(&incoming.weights.row(src));
        if unit >= old_width && noise_scale > 0.0 {
            row.mapv_inplace(|w| w + rng.gen_range(-noise_scale..=noise_scale));
        }
        bias[unit] = incoming.bias[src];
    }
    let mut next = Array2::zeros((outgoing.out_dim(), new_width));
    for (unit, &src) in mapping.iter().enumerate() {
        let scale = 1.0 / counts[src] as f64;
        next.column_mut(unit)
            .assign(&outgoing.weights.column(src).mapv(|w| w * scale));
    }

    let mut grown = params.clone();
    let layers = side_layers_mut(&mut grown, side);
    layers[layer] = LayerParams::new(weights, bias)?;
    layers[layer + 1].weights = next;
    Ok((grown, mapping))
}

pub fn net2wider(
    params: &AutoencoderParams,
    side: Side,
    layer: usize,
    new_width: usize,
    noise_scale: f64,
    seed: u64,
) -> Result<AutoencoderParams> {
    net2wider_with_mapping(params, side, layer, new_width, noise_scale, seed).map(|(p, _)| p)
}

/// Net2DeeperNet: inserts an identity layer at index `position`. The new
/// layer's input is always a ReLU output (or the embedding, for the decoder),
/// so `relu(I·x) = x` and the function is unchanged.
pub fn net2deeper(
    params: &AutoencoderParams,
    side: Side,
    position: usize,
) -> Result<AutoencoderParams> {
    let layers = side_layers(params, side);
    let valid = match side {
        Side::Encoder => (1..=layers.len()).contains(&position),
        Side::Decoder => position <= layers.len(),
    };
    if !valid {
        return Err(Error::config(format!(
            "cannot insert a layer at {side:?} position {position}"
        )));
    }
    let width = if position == 0 {
        layers[0].in_dim()
    } else {
        layers[position - 1].out_dim()
    };
    let mut grown = params.clone();
    side_layers_mut(&mut grown, side).insert(position, LayerParams::identity(width));
    Ok(grown)
}

/// Adds input columns to the first encoder layer and output rows to the last
/// decoder layer for `new_n − n` new nodes. Existing weights are untouched.
pub fn expand_input_output(
    params: &AutoencoderParams,
    new_n: usize,
    init_scale: f64,
    seed: u64,
) -> Result<AutoencoderParams> {
    let n = params.n();
    if new_n < n {
        return Err(Error::config(format!(
            "cannot shrink input from {n} to {new_n}"
        )));
    }
    if new_n == n {
        return Ok(params.clone());
    }
    let extra = new_n - n;
    let mut rng = seed::rng(seed, 0, seed::Stream::Growth);
    let mut grown = params.clone();

    let first = &mut grown.encoder[0];
    let limit = init_scale * glorot_limit(new_n, first.out_dim());
    let cols = Array2::from_shape_simple_fn((first.out_dim(), extra), || uniform(&mut rng, limit));
    first.weights = concatenate(Axis(1), &[first.weights.view(), cols.view()])?;

    let last = grown.decoder.last_mut().expect("non-empty");
    let limit = init_scale * glorot_limit(last.in_dim(), new_n);
    let rows = Array2::from_shape_simple_fn((extra, last.in_dim()), || uniform(&mut rng, limit));
    last.weights = concatenate(Axis(0), &[last.weights.view(), rows.view()])?;
    let mut bias = Array1::zeros(new_n);
    bias.slice_mut(s![..n]).assign(&last.bias);
    last.bias = bias;

    grown.validate()?;
    Ok(grown)
}

fn uniform<R: Rng>(rng: &mut R, limit: f64) -> f64 {
    if limit > 0.0 {
        rng.gen_range(-limit..=limit)
    } else {
        0.0
    }
}

impl From<ndarray::ShapeError> for Error {
    fn from(e: ndarray::ShapeError) -> Self {
        Error::Dimension(e.to_string())
    }
}

/// Executes a plan: input/output expansion, then deepen ops, then widen ops.
pub fn apply_plan(
    params: &AutoencoderParams,
    plan: &GrowthPlan,
    noise_scale: f64,
    seed: u64,
) -> Result<AutoencoderParams> {
    if params.encoder_sizes() != plan.from_encoder_sizes {
        return Err(Error::config(format!(
            "plan was computed for sizes {:?} but the model has {:?}",
            plan.from_encoder_sizes,
            params.encoder_sizes()
        )));
    }
    let mut grown = expand_input_output(params, plan.new_n, 1.0, seed)?;
    for op in &plan.deepen_ops {
        grown = net2deeper(&grown, op.side, op.position)?;
    }
    for (k, op) in plan.widen_ops.iter().enumerate() {
        let current = side_layers(&grown, op.side)
            .get(op.layer)
            .map(LayerParams::out_dim);
        if current != Some(op.old_width) {
            return Err(Error::config(format!(
                "widen op {op:?} does not match the model"
            )));
        }
        grown = net2wider(
            &grown,
            op.side,
            op.layer,
            op.new_width,
            noise_scale,
            seed::derive(seed, k, seed::Stream::Growth),
        )?;
    }
    if grown.encoder_sizes() != plan.encoder_sizes || grown.decoder_sizes() != plan.decoder_sizes {
        return Err(Error::config(
            "plan execution did not reach the planned sizes",
        ));
    }
    Ok(grown)
}
