use log::warn;
use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DynamicGraph;

fn frobenius_diff(a: ArrayView2<f64>, b: ArrayView2<f64>) -> f64 {
    ndarray::Zip::from(&a)
        .and(&b)
        .fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
        .sqrt()
}

fn frobenius(a: ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn check_pair(a: ArrayView2<f64>, b: ArrayView2<f64>, what: &str) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::dim(format!(
            "{what} shapes {:?} and {:?} differ",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// `‖F_next − F_curr‖_F / ‖S_next − S_curr‖_F`, `None` when the adjacency is unchanged.
pub fn stability_absolute(
    f_next: ArrayView2<f64>,
    f_curr: ArrayView2<f64>,
    s_next: ArrayView2<f64>,
    s_curr: ArrayView2<f64>,
) -> Result<Option<f64>> {
    check_pair(f_next, f_curr, "embedding")?;
    check_pair(s_next, s_curr, "adjacency")?;
    Ok(ratio(
        frobenius_diff(f_next, f_curr),
        frobenius_diff(s_next, s_curr),
    ))
}

fn relative_from_norms(f_diff: f64, f_curr: f64, s_diff: f64, s_curr: f64) -> Option<f64> {
    let f_rel = ratio(f_diff, f_curr)?;
    let s_rel = ratio(s_diff, s_curr)?;
    ratio(f_rel, s_rel)
}

/// Size-normalised stability; `None` when any denominator vanishes.
pub fn stability_relative(
    f_next: ArrayView2<f64>,
    f_curr: ArrayView2<f64>,
    s_next: ArrayView2<f64>,
    s_curr: ArrayView2<f64>,
) -> Result<Option<f64>> {
    check_pair(f_next, f_curr, "embedding")?;
    check_pair(s_next, s_curr, "adjacency")?;
    Ok(relative_from_norms(
        frobenius_diff(f_next, f_curr),
        frobenius(f_curr),
        frobenius_diff(s_next, s_curr),
        frobenius(s_curr),
    ))
}

/// Stability of the transition into `step` (from `step − 1`), over the nodes
/// of the earlier snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityStep {
    pub step: usize,
    pub absolute: Option<f64>,
    pub relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub steps: Vec<StabilityStep>,
    /// Range of the defined relative stabilities.
    pub constant: f64,
    pub skipped: Vec<usize>,
}

/// Relative stabilities of every transition and their range `K_S`.
/// Transitions without adjacency change (or with an all-zero previous
/// embedding or adjacency) are skipped.
pub fn stability_constant(
    embeddings: &[Array2<f64>],
    graphs: &DynamicGraph,
) -> Result<StabilityReport> {
    if embeddings.len() != graphs.len() {
        return Err(Error::dim(format!(
            "{} embeddings for {} snapshots",
            embeddings.len(),
            graphs.len()
        )));
    }
    let mut steps = Vec::new();
    let mut skipped = Vec::new();
    for t in 1..graphs.len() {
        let m = graphs[t - 1].node_count();
        let (prev, next) = (&embeddings[t - 1], &embeddings[t]);
        if prev.nrows() != m || next.nrows() < m || prev.ncols() != next.ncols() {
            return Err(Error::dim(format!(
                "embeddings at steps {} and {t} do not cover {m} nodes",
                t - 1
            )));
        }
        let f_next = next.slice(s![..m, ..]);
        let f_diff = frobenius_diff(f_next, prev.view());
        let s_diff = graphs[t - 1].prefix_diff_norm_sq(&graphs[t], m).sqrt();
        let s_curr = graphs[t - 1].prefix_norm_sq(m).sqrt();
        let absolute = ratio(f_diff, s_diff);
        let relative = relative_from_norms(f_diff, frobenius(prev.view()), s_diff, s_curr);
        if relative.is_none() {
            warn!(
                "stability undefined for transition {} -> {t}; skipped",
                t - 1
            );
            skipped.push(t);
        }
        steps.push(StabilityStep {
            step: t,
            absolute,
            relative,
        });
    }
    let defined: Vec<f64> = steps.iter().filter_map(|s| s.relative).collect();
    if defined.len() < 2 {
        return Err(Error::UndefinedMetric(format!(
            "stability constant needs two defined transitions, found {}",
            defined.len()
        )));
    }
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(StabilityReport {
        steps,
        constant: max - min,
        skipped,
    })
}
