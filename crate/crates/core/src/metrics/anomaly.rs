use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Embedding drift `Δ` over the transition into `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyScore {
    pub step: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyReport {
    pub scores: Vec<AnomalyScore>,
    pub threshold: Option<f64>,
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum ThresholdRule {
    /// `mean + c · std` of the scores (population standard deviation).
    MeanPlusStd {
        c: f64,
    },
    Absolute {
        threshold: f64,
    },
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule::MeanPlusStd { c: 2.0 }
    }
}

/// `Δ_t = ‖F_t(V_{t−1}) − F_{t−1}(V_{t−1})‖_F` for every `t ≥ 1`, where the
/// common node set is the first `n_{t−1}` rows.
pub fn anomaly_series(embeddings: &[Array2<f64>]) -> Result<AnomalyReport> {
    if embeddings.len() < 2 {
        return Err(Error::config("anomaly scores need at least two steps"));
    }
    let mut scores = Vec::with_capacity(embeddings.len() - 1);
    for t in 1..embeddings.len() {
        let (prev, next) = (&embeddings[t - 1], &embeddings[t]);
        let m = prev.nrows();
        if next.nrows() < m || next.ncols() != prev.ncols() {
            return Err(Error::dim(format!(
                "step {t} embedding {:?} does not extend step {} embedding {:?}",
                next.dim(),
                t - 1,
                prev.dim()
            )));
        }
        let delta = ndarray::Zip::from(next.slice(s![..m, ..]))
            .and(prev)
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
            .sqrt();
        scores.push(AnomalyScore { step: t, delta });
    }
    Ok(AnomalyReport {
        scores,
        threshold: None,
        flagged: Vec::new(),
    })
}

/// Steps whose score strictly exceeds the rule's threshold.
pub fn flag_anomalies(scores: &[AnomalyScore], rule: ThresholdRule) -> Result<(f64, Vec<usize>)> {
    let threshold = match rule {
        ThresholdRule::Absolute { threshold } => threshold,
        ThresholdRule::MeanPlusStd { c } => {
            if scores.len() < 2 {
                return Err(Error::UndefinedMetric(
                    "mean + c·std needs at least two scores".into(),
                ));
            }
            let n = scores.len() as f64;
            let mean = scores.iter().map(|s| s.delta).sum::<f64>() / n;
            let var = scores.iter().map(|s| (s.delta - mean).powi(2)).sum::<f64>() / n;
            mean + c * var.sqrt()
        }
    };
    let flagged = scores
        .iter()
        .filter(|s| s.delta > threshold)
        .map(|s| s.step)
        .collect();
    Ok((threshold, flagged))
}

impl AnomalyReport {
    pub fn flag(mut self, rule: ThresholdRule) -> Result<Self> {
        let (threshold, flagged) = flag_anomalies(&self.scores, rule)?;
        self.threshold = Some(threshold);
        self.flagged = flagged;
        Ok(self)
    }

    pub fn deltas(&self) -> Vec<f64> {
        self.scores.iter().map(|s| s.delta).collect()
    }
}
