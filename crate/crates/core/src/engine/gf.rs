//! Graph factorization baseline: `Σ_(i,j)∈E (s_ij − ⟨y_i, y_j⟩)² + λ‖Y‖²_F`
//! minimised by SGD over edges.

use ndarray::{s, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphSnapshot;
use crate::seed::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GfConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub lr: f64,
    pub d: usize,
}

impl GfConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !(self.lr > 0.0) || self.d == 0 {
            return Err(Error::config(format!("invalid GF settings {self:?}")));
        }
        Ok(())
    }
}

pub fn gf_objective(y: &Array2<f64>, snapshot: &GraphSnapshot, lambda: f64) -> f64 {
    let data: f64 = snapshot
        .edges()
        .iter()
        .map(|e| (e.weight - y.row(e.u).dot(&y.row(e.v))).powi(2))
        .sum();
    data + lambda * y.iter().map(|v| v * v).sum::<f64>()
}

/// Random rows in `[−a, a]` with `a = 1/√d`.
pub fn gf_init(rows: usize, d: usize, seed: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed, 0, Stream::Gf);
    let a = 1.0 / (d as f64).sqrt();
    Array2::from_shape_simple_fn((rows, d), || rng.gen_range(-a..=a))
}

/// Extends `previous` with freshly initialised rows for new nodes.
pub fn extend_rows(previous: &Array2<f64>, rows: usize, seed: u64) -> Array2<f64> {
    let mut y = gf_init(rows, previous.ncols(), seed);
    let m = previous.nrows().min(rows);
    y.slice_mut(s![..m, ..])
        .assign(&previous.slice(s![..m, ..]));
    y
}

#[derive(Debug, Clone, PartialEq)]
pub struct GfOutcome {
    /// Objective after each epoch.
    pub trace: Vec<f64>,
    pub updates: usize,
}

/// Trains `y` in place. The penalty is spread over a node's edges
/// (`λ y_i / deg_i` per edge visit) so an epoch's expected step follows the
/// gradient of the full objective.
pub fn train_gf(
    y: &mut Array2<f64>,
    snapshot: &GraphSnapshot,
    config: &GfConfig,
    seed: u64,
) -> Result<GfOutcome> {
    config.validate()?;
    if snapshot.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if y.dim() != (snapshot.node_count(), config.d) {
        return Err(Error::dim(format!(
            "factor matrix {:?} for {} nodes and d={}",
            y.dim(),
            snapshot.node_count(),
            config.d
        )));
    }
    let mut rng = seed::rng(seed, 1, Stream::Gf);
    let mut edges = snapshot.edges().to_vec();
    let mut trace = Vec::with_capacity(config.epochs);
    let mut updates = 0;
    let eta = config.lr;
    for _ in 0..config.epochs {
        edges.shuffle(&mut rng);
        for e in &edges {
            let yi = y.row(e.u).to_owned();
            let yj = y.row(e.v).to_owned();
            let err = e.weight - yi.dot(&yj);
            let reg_i = config.lambda / snapshot.degree(e.u) as f64;
            let reg_j = config.lambda / snapshot.degree(e.v) as f64;
            let gi = &yj * (-2.0 * err) + &yi * (2.0 * reg_i);
            let gj = &yi * (-2.0 * err) + &yj * (2.0 * reg_j);
            y.row_mut(e.u).scaled_add(-eta, &gi);
            y.row_mut(e.v).scaled_add(-eta, &gj);
            updates += 1;
        }
        let objective = gf_objective(y, snapshot, config.lambda);
        if !objective.is_finite() {
            return Err(Error::Numerical(
                "graph factorization diverged; lower gf_lr".into(),
            ));
        }
        trace.push(objective);
    }
    Ok(GfOutcome { trace, updates })
}

/// `⟨y_i, y_j⟩` for every pair.
pub fn gf_scores(y: &Array2<f64>) -> Array2<f64> {
    y.dot(&y.t())
}

pub fn row_norm(y: &Array2<f64>) -> f64 {
    y.map_axis(Axis(1), |r| r.dot(&r)).sum().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;

    #[test]
    fn extend_keeps_previous_rows() {
        let prev = gf_init(3, 2, 1);
        let y = extend_rows(&prev, 5, 2);
        assert_eq!(y.slice(s![..3, ..]), prev);
        assert_eq!(y.dim(), (5, 2));
    }

    #[test]
    fn rejects_bad_input() {
        let g = GraphSnapshot::from_edges(3, [Edge::new(0, 1, 1.0)]).unwrap();
        let cfg = GfConfig {
            lambda: 0.0,
            epochs: 1,
            lr: 0.01,
            d: 2,
        };
        let mut y = gf_init(2, 2, 0);
        assert!(train_gf(&mut y, &g, &cfg, 0).is_err());
        let mut y = gf_init(3, 2, 0);
        assert!(train_gf(&mut y, &GraphSnapshot::empty(3), &cfg, 0).is_err());
    }
}
