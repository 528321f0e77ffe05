//! Stochastic block model series with community migration.
//!
//! The first snapshot is a plain SBM draw. At every later step a handful of
//! nodes switch community and only the pairs whose block probability may have
//! changed are re-sampled; all other edges carry over unchanged. Optional
//! extras: a linearly growing node set and a one-off merge of two communities.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DynamicGraph, Edge, GraphSnapshot};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Community `absorbed` is relabelled as `into` from snapshot `step` onward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub step: usize,
    pub absorbed: usize,
    pub into: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmConfig {
    pub node_count: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub migrate_per_step: usize,
    pub steps: usize,
    pub edge_weight: f64,
    /// Active nodes at step 0; grows linearly to `node_count` by the last step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_node_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge: Option<MergeEvent>,
}

impl Default for SbmConfig {
    fn default() -> Self {
        SbmConfig {
            node_count: 1000,
            communities: 3,
            p_in: 0.2,
            p_out: 0.01,
            migrate_per_step: 5,
            steps: 40,
            edge_weight: 1.0,
            initial_node_count: None,
            merge: None,
        }
    }
}

impl SbmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.node_count == 0 {
            return bad("node_count must be positive".into());
        }
        if self.communities == 0 || self.communities > self.node_count {
            return bad(format!(
                "communities must be in 1..={}, got {}",
                self.node_count, self.communities
            ));
        }
        if !(0.0..=1.0).contains(&self.p_in) || !(0.0..=1.0).contains(&self.p_out) {
            return bad(format!(
                "probabilities must lie in [0, 1] (p_in={}, p_out={})",
                self.p_in, self.p_out
            ));
        }
        if self.p_out > self.p_in {
            return bad(format!("p_out {} exceeds p_in {}", self.p_out, self.p_in));
        }
        if self.migrate_per_step
            >= self
                .node_count
                .min(self.initial_node_count.unwrap_or(usize::MAX))
        {
            return bad(format!(
                "migrate_per_step {} must be below the node count",
                self.migrate_per_step
            ));
        }
        if self.migrate_per_step > 0 && self.communities < 2 {
            return bad("migration needs at least two communities".into());
        }
        if self.steps == 0 {
            return bad("steps must be at least 1".into());
        }
        if !(self.edge_weight > 0.0 && self.edge_weight.is_finite()) {
            return bad(format!(
                "edge_weight must be positive, got {}",
                self.edge_weight
            ));
        }
        if let Some(n0) = self.initial_node_count {
            if n0 == 0 || n0 > self.node_count {
                return bad(format!(
                    "initial_node_count must be in 1..={}",
                    self.node_count
                ));
            }
        }
        if let Some(m) = self.merge {
            if m.absorbed == m.into || m.absorbed >= self.communities || m.into >= self.communities
            {
                return bad(format!(
                    "invalid merge communities {} -> {}",
                    m.absorbed, m.into
                ));
            }
            if m.step == 0 || m.step >= self.steps {
                return bad(format!("merge step must be in 1..{}", self.steps));
            }
        }
        Ok(())
    }

    /// Number of active nodes at step `t`.
    pub fn active_nodes(&self, t: usize) -> usize {
        match self.initial_node_count {
            None => self.node_count,
            Some(n0) if self.steps <= 1 => n0,
            Some(n0) => {
                let extra = (self.node_count - n0) as f64 * t as f64 / (self.steps - 1) as f64;
                n0 + extra.round() as usize
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct SbmSeries {
    pub graph: DynamicGraph,
    /// `labels[t][i]` is the community of node `i` at step `t`.
    pub labels: Vec<Vec<usize>>,
}

struct Sampler<'a> {
    config: &'a SbmConfig,
    rng: ChaCha8Rng,
    edges: BTreeMap<(usize, usize), f64>,
}

impl Sampler<'_> {
    fn draw_pair(&mut self, i: usize, j: usize, labels: &[usize]) {
        let key = if i < j { (i, j) } else { (j, i) };
        let p = if labels[i] == labels[j] {
            self.config.p_in
        } else {
            self.config.p_out
        };
        if self.rng.gen::<f64>() < p {
            self.edges.insert(key, self.config.edge_weight);
        } else {
            self.edges.remove(&key);
        }
    }

    fn snapshot(&self, n: usize) -> GraphSnapshot {
        let edges = self
            .edges
            .iter()
            .map(|(&(u, v), &w)| Edge { u, v, weight: w })
            .collect();
        GraphSnapshot::from_sorted_unchecked(n, edges)
    }
}

/// Generates the series and the per-step community labels.
pub fn generate_sbm_series(config: &SbmConfig, seed: u64) -> Result<SbmSeries> {
    config.validate()?;
    let mut rng = seed::rng(seed, 0, Stream::Sbm);

    // balanced communities over a random permutation so node index carries no block information
    let mut order: Vec<usize> = (0..config.node_count).collect();
    order.shuffle(&mut rng);
    let mut labels = vec![0; config.node_count];
    for (rank, &node) in order.iter().enumerate() {
        labels[node] = rank * config.communities / config.node_count;
    }

    let mut sampler = Sampler {
        config,
        rng,
        edges: BTreeMap::new(),
    };
    let mut live = vec![true; config.communities];

    let mut active = config.active_nodes(0);
    for i in 0..active {
        for j in (i + 1)..active {
            sampler.draw_pair(i, j, &labels);
        }
    }
    let mut snapshots = vec![sampler.snapshot(active)];
    let mut label_history = vec![labels[..active].to_vec()];

    for t in 1..config.steps {
        let prev_active = active;
        active = config.active_nodes(t);

        if let Some(m) = config.merge.filter(|m| m.step == t) {
            let absorbed: Vec<usize> = (0..prev_active)
                .filter(|&i| labels[i] == m.absorbed)
                .collect();
            let target: Vec<usize> = (0..prev_active).filter(|&i| labels[i] == m.into).collect();
            for &i in &absorbed {
                labels[i] = m.into;
            }
            for &i in &absorbed {
                for &j in &target {
                    sampler.draw_pair(i, j, &labels);
                }
            }
            live[m.absorbed] = false;
            // future arrivals of the absorbed block join the merged one
            for l in labels.iter_mut().skip(prev_active) {
                if *l == m.absorbed {
                    *l = m.into;
                }
            }
        }

        let movers =
            index::sample(&mut sampler.rng, prev_active, config.migrate_per_step).into_vec();
        for &node in &movers {
            let choices: Vec<usize> = (0..config.communities)
                .filter(|&c| c != labels[node] && live[c])
                .collect();
            if let Some(&c) = choices.choose(&mut sampler.rng) {
                labels[node] = c;
            }
        }
        let mut movers = movers;
        movers.sort_unstable();
        for (k, &i) in movers.iter().enumerate() {
            for j in 0..prev_active {
                // pairs of two movers are drawn once
                if j != i && movers[..k].binary_search(&j).is_err() {
                    sampler.draw_pair(i, j, &labels);
                }
            }
        }

        for i in prev_active..active {
            for j in 0..i {
                sampler.draw_pair(i, j, &labels);
            }
        }

        snapshots.push(sampler.snapshot(active));
        label_history.push(labels[..active].to_vec());
    }

    Ok(SbmSeries {
        graph: DynamicGraph::new(snapshots)?,
        labels: label_history,
    })
}
