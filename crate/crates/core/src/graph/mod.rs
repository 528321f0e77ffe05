//! Weighted undirected graph snapshots and dynamic series.

mod io;
mod sbm;

use ndarray::{Array1, Array2};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, Stream};

pub use io::{
    load_series, load_snapshot, parse_snapshot, save_series, save_snapshot, write_snapshot,
};
pub use sbm::{generate_sbm_series, MergeEvent, SbmConfig, SbmSeries};

/// An undirected edge with canonical orientation `u < v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

impl Edge {
    pub fn new(a: usize, b: usize, weight: f64) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Edge { u, v, weight }
    }
}

/// One weighted undirected graph `G_t`.
///
/// Edges are kept sorted by `(u, v)` with `u < v`, and a per-node adjacency
/// list sorted by neighbour index backs the row lookups.
#[derive(Debug, Clone)]
pub struct GraphSnapshot {
    node_count: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PartialEq for GraphSnapshot {
    fn eq(&self, other: &Self) -> bool {
        self.node_count == other.node_count && self.edges == other.edges
    }
}

impl GraphSnapshot {
    /// Builds a snapshot, rejecting self-loops, non-positive or non-finite
    /// weights, out-of-range indices and duplicate undirected pairs.
    pub fn from_edges<I>(node_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = Edge>,
    {
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|e| Edge::new(e.u, e.v, e.weight))
            .collect();
        for e in &edges {
            if e.u == e.v {
                return Err(Error::config(format!("self-loop on node {}", e.u)));
            }
            if e.v >= node_count {
                return Err(Error::IndexOutOfRange {
                    index: e.v,
                    len: node_count,
                });
            }
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(Error::config(format!(
                    "edge ({}, {}) has non-positive weight {}",
                    e.u, e.v, e.weight
                )));
            }
        }
        edges.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = edges
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(Error::config(format!(
                "duplicate edge ({}, {})",
                w[0].u, w[0].v
            )));
        }
        Ok(Self::from_sorted_unchecked(node_count, edges))
    }

    fn from_sorted_unchecked(node_count: usize, edges: Vec<Edge>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for e in &edges {
            adjacency[e.u].push((e.v, e.weight));
            adjacency[e.v].push((e.u, e.weight));
        }
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
        }
        GraphSnapshot {
            node_count,
            edges,
            adjacency,
        }
    }

    pub fn empty(node_count: usize) -> Self {
        Self::from_sorted_unchecked(node_count, Vec::new())
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edges sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Sorted `(neighbour, weight)` pairs of `node`.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// `s_ij`, zero where no edge exists.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        match self.adjacency.get(i) {
            Some(row) => row
                .binary_search_by_key(&j, |&(k, _)| k)
                .map(|pos| row[pos].1)
                .unwrap_or(0.0),
            None => 0.0,
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weight(i, j) > 0.0
    }

    /// Dense row `s_i` of the adjacency matrix.
    pub fn neighbor_vector(&self, node: usize) -> Result<Array1<f64>> {
        self.check_node(node)?;
        let mut row = Array1::zeros(self.node_count);
        for &(j, w) in &self.adjacency[node] {
            row[j] = w;
        }
        Ok(row)
    }

    /// Dense adjacency of the subgraph induced by `node_set`, rows and columns
    /// in the given order. `node_set` must be strictly increasing.
    pub fn induced_adjacency(&self, node_set: &[usize]) -> Result<Array2<f64>> {
        if node_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("node set must be sorted without duplicates"));
        }
        if let Some(&last) = node_set.last() {
            self.check_node(last)?;
        }
        let m = node_set.len();
        let mut out = Array2::zeros((m, m));
        for (a, &i) in node_set.iter().enumerate() {
            for &(j, w) in &self.adjacency[i] {
                if let Ok(b) = node_set.binary_search(&j) {
                    out[[a, b]] = w;
                }
            }
        }
        Ok(out)
    }

    /// Dense adjacency over nodes `0..m`.
    pub fn dense_prefix(&self, m: usize) -> Result<Array2<f64>> {
        let nodes: Vec<usize> = (0..m).collect();
        self.induced_adjacency(&nodes)
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.node_count, self.node_count));
        for e in &self.edges {
            out[[e.u, e.v]] = e.weight;
            out[[e.v, e.u]] = e.weight;
        }
        out
    }

    /// Removes `round(fraction * |E|)` edges chosen uniformly without
    /// replacement. Returns the remaining graph and the removed edges.
    pub fn hide_edges(&self, fraction: f64, seed: u64) -> Result<(GraphSnapshot, Vec<Edge>)> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::config(format!(
                "hide fraction {fraction} not in (0, 1)"
            )));
        }
        let count = (fraction * self.edges.len() as f64).round() as usize;
        let mut rng = seed::rng(seed, 0, Stream::Hide);
        let mut hidden_mask = vec![false; self.edges.len()];
        for pos in index::sample(&mut rng, self.edges.len(), count) {
            hidden_mask[pos] = true;
        }
        let (hidden, kept): (Vec<_>, Vec<_>) =
            self.edges.iter().zip(&hidden_mask).partition(|(_, &h)| h);
        let kept = kept.into_iter().map(|(e, _)| *e).collect();
        let hidden = hidden.into_iter().map(|(e, _)| *e).collect();
        Ok((Self::from_sorted_unchecked(self.node_count, kept), hidden))
    }

    /// Same edges over a larger node set; the added nodes are isolated.
    pub fn grow_to(&self, n: usize) -> Result<GraphSnapshot> {
        if n < self.node_count {
            return Err(Error::config(format!(
                "cannot shrink snapshot from {} to {n} nodes",
                self.node_count
            )));
        }
        Ok(Self::from_sorted_unchecked(n, self.edges.clone()))
    }

    /// Squared Frobenius norm of the dense adjacency restricted to `0..m`.
    pub fn prefix_norm_sq(&self, m: usize) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.v < m)
            .map(|e| 2.0 * e.weight * e.weight)
            .sum()
    }

    /// `||S_other(0..m) - S_self(0..m)||_F^2` computed from the edge lists.
    pub fn prefix_diff_norm_sq(&self, other: &GraphSnapshot, m: usize) -> f64 {
        let mine = self.edges.iter().filter(|e| e.v < m);
        let theirs = other.edges.iter().filter(|e| e.v < m);
        let mut total = 0.0;
        let mut a = mine.peekable();
        let mut b = theirs.peekable();
        loop {
            let (wa, wb) = match (a.peek(), b.peek()) {
                (None, None) => break,
                (Some(x), None) => {
                    let w = x.weight;
                    a.next();
                    (w, 0.0)
                }
                (None, Some(y)) => {
                    let w = y.weight;
                    b.next();
                    (0.0, w)
                }
                (Some(x), Some(y)) => match (x.u, x.v).cmp(&(y.u, y.v)) {
                    std::cmp::Ordering::Less => {
                        let w = x.weight;
                        a.next();
                        (w, 0.0)
                    }
                    std::cmp::Ordering::Greater => {
                        let w = y.weight;
                        b.next();
                        (0.0, w)
                    }
                    std::cmp::Ordering::Equal => {
                        let r = (x.weight, y.weight);
                        a.next();
                        b.next();
                        r
                    }
                },
            };
            total += 2.0 * (wa - wb) * (wa - wb);
        }
        total
    }

    fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.node_count {
            return Err(Error::IndexOutOfRange {
                index: node,
                len: self.node_count,
            });
        }
        Ok(())
    }
}

/// Time-ordered snapshots whose node sets only grow.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicGraph {
    snapshots: Vec<GraphSnapshot>,
}

impl DynamicGraph {
    pub fn new(snapshots: Vec<GraphSnapshot>) -> Result<Self> {
        if snapshots.is_empty() {
            return Err(Error::config("a dynamic graph needs at least one snapshot"));
        }
        if let Some(t) = snapshots
            .windows(2)
            .position(|w| w[1].node_count() < w[0].node_count())
        {
            return Err(Error::config(format!(
                "node count shrinks from step {t} to step {}",
                t + 1
            )));
        }
        Ok(DynamicGraph { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn snapshots(&self) -> &[GraphSnapshot] {
        &self.snapshots
    }

    pub fn get(&self, t: usize) -> Option<&GraphSnapshot> {
        self.snapshots.get(t)
    }

    pub fn last(&self) -> &GraphSnapshot {
        self.snapshots.last().expect("non-empty by construction")
    }

    pub fn node_counts(&self) -> Vec<usize> {
        self.snapshots.iter().map(|g| g.node_count()).collect()
    }

    /// Replaces the final snapshot, keeping the growth invariant.
    pub fn with_last(&self, last: GraphSnapshot) -> Result<Self> {
        let mut snapshots = self.snapshots.clone();
        *snapshots.last_mut().expect("non-empty") = last;
        Self::new(snapshots)
    }

    /// The series truncated to its first `len` steps.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        Self::new(self.snapshots[..len.min(self.snapshots.len())].to_vec())
    }
}

impl std::ops::Index<usize> for DynamicGraph {
    type Output = GraphSnapshot;

    fn index(&self, t: usize) -> &GraphSnapshot {
        &self.snapshots[t]
    }
}
