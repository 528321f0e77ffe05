use std::collections::HashSet;
use std::hash::Hash;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphSnapshot};
use crate::seed::{self, Stream};

/// One node's candidates ordered by descending score, ties by ascending index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    pub node: usize,
    pub candidates: Vec<(usize, f64)>,
}

fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> std::cmp::Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

impl RankedPrediction {
    pub fn new(node: usize, mut candidates: Vec<(usize, f64)>) -> Result<Self> {
        if let Some(&(j, s)) = candidates
            .iter()
            .find(|&&(j, s)| j == node || !s.is_finite())
        {
            return Err(Error::config(format!(
                "invalid candidate ({j}, {s}) for node {node}"
            )));
        }
        candidates.sort_by(by_score_then_index);
        Ok(RankedPrediction { node, candidates })
    }

    /// Ranks row `node` of `scores` over all `j ≠ node` that `keep` accepts.
    pub fn from_scores<F>(scores: ArrayView2<f64>, node: usize, keep: F) -> Result<Self>
    where
        F: Fn(usize) -> bool,
    {
        let row = scores.row(node);
        let candidates = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != node && keep(j))
            .map(|(j, &s)| (j, s))
            .collect();
        Self::new(node, candidates)
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.candidates.iter().map(|&(j, _)| j)
    }
}

/// Global ranking of unordered pairs `i < j` by `scores[i][j]`, ties broken by
/// ascending `(i, j)`.
pub fn rank_pairs<F>(scores: ArrayView2<f64>, keep: F) -> Vec<(usize, usize)>
where
    F: Fn(usize, usize) -> bool,
{
    let n = scores.nrows();
    let mut pairs: Vec<((usize, usize), f64)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if keep(i, j) {
                pairs.push(((i, j), scores[[i, j]]));
            }
        }
    }
    pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    pairs.into_iter().map(|(p, _)| p).collect()
}

/// Fraction of the first `k` ranked items found in `truth`.
pub fn precision_at_k<T: Eq + Hash>(ranked: &[T], truth: &HashSet<T>, k: usize) -> Result<f64> {
    if k == 0 || k > ranked.len() {
        return Err(Error::config(format!(
            "k = {k} outside 1..={}",
            ranked.len()
        )));
    }
    let hits = ranked[..k]
        .iter()
        .filter(|item| truth.contains(item))
        .count();
    Ok(hits as f64 / k as f64)
}

/// Average precision of a ranked id list, normalised by `|truth|`; `None`
/// when `truth` is empty.
pub fn average_precision<I>(ranked: I, truth: &HashSet<usize>) -> Option<f64>
where
    I: IntoIterator<Item = usize>,
{
    if truth.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, id) in ranked.into_iter().enumerate() {
        if truth.contains(&id) {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
            if hits == truth.len() {
                break;
            }
        }
    }
    Some(sum / truth.len() as f64)
}

/// Mean of per-node AP over nodes whose truth set is non-empty.
/// `truth[i]` holds the true neighbours of node `i`.
pub fn mean_average_precision(
    predictions: &[RankedPrediction],
    truth: &[HashSet<usize>],
) -> Result<f64> {
    let mut total = 0.0;
    let mut counted = 0usize;
    for p in predictions {
        let Some(t) = truth.get(p.node) else {
            return Err(Error::IndexOutOfRange {
                index: p.node,
                len: truth.len(),
            });
        };
        if let Some(ap) = average_precision(p.ids(), t) {
            total += ap;
            counted += 1;
        }
    }
    if counted == 0 {
        return Err(Error::UndefinedMetric(
            "no node has a true neighbour".into(),
        ));
    }
    Ok(total / counted as f64)
}

fn check_square(scores: ArrayView2<f64>, n: usize) -> Result<()> {
    if scores.dim() != (n, n) {
        return Err(Error::dim(format!(
            "score matrix {:?} for {n} nodes",
            scores.dim()
        )));
    }
    Ok(())
}

fn neighbour_sets(n: usize, edges: &[Edge]) -> Vec<HashSet<usize>> {
    let mut sets = vec![HashSet::new(); n];
    for e in edges {
        sets[e.u].insert(e.v);
        sets[e.v].insert(e.u);
    }
    sets
}

/// MAP of reconstructing the snapshot's edges from all non-self pairs.
pub fn eval_reconstruction(scores: ArrayView2<f64>, snapshot: &GraphSnapshot) -> Result<f64> {
    let n = snapshot.node_count();
    check_square(scores, n)?;
    let truth = neighbour_sets(n, snapshot.edges());
    let predictions = (0..n)
        .filter(|&i| !truth[i].is_empty())
        .map(|i| RankedPrediction::from_scores(scores, i, |_| true))
        .collect::<Result<Vec<_>>>()?;
    mean_average_precision(&predictions, &truth)
}

/// MAP of recovering `hidden` among pairs not observed in `train`.
pub fn eval_link_prediction(
    scores: ArrayView2<f64>,
    train: &GraphSnapshot,
    hidden: &[Edge],
) -> Result<f64> {
    if hidden.is_empty() {
        return Err(Error::UndefinedMetric("no hidden edges to predict".into()));
    }
    let n = train.node_count();
    check_square(scores, n)?;
    if let Some(e) = hidden.iter().find(|e| e.v >= n) {
        return Err(Error::IndexOutOfRange { index: e.v, len: n });
    }
    let truth = neighbour_sets(n, hidden);
    let predictions = (0..n)
        .filter(|&i| !truth[i].is_empty())
        .map(|i| RankedPrediction::from_scores(scores, i, |j| !train.has_edge(i, j)))
        .collect::<Result<Vec<_>>>()?;
    mean_average_precision(&predictions, &truth)
}

/// Uniform random scores; ranking them gives the chance-level MAP.
pub fn random_scores(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = seed::rng(seed, 0, Stream::Null);
    Array2::from_shape_simple_fn((n, n), || rng.gen::<f64>())
}
