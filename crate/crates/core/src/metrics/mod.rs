//! Evaluation: ranking metrics, stability of a dynamic embedding, embedding
//! drift for anomaly detection, and the expected warm-start speedup.

mod anomaly;
mod ranking;
mod stability;

pub use anomaly::{anomaly_series, flag_anomalies, AnomalyReport, AnomalyScore, ThresholdRule};
pub use ranking::{
    average_precision, eval_link_prediction, eval_reconstruction, mean_average_precision,
    precision_at_k, random_scores, rank_pairs, RankedPrediction,
};
pub use stability::{
    stability_absolute, stability_constant, stability_relative, StabilityReport, StabilityStep,
};

use crate::error::{Error, Result};

/// `T·n_s / (n_s + (T−1)·n_i)` for `n_s` from-scratch iterations and `n_i`
/// warm-started iterations per snapshot.
pub fn expected_speedup(n_s: u64, n_i: u64, steps: u64) -> Result<f64> {
    if n_s == 0 || n_i == 0 || steps == 0 {
        return Err(Error::config("speedup inputs must be positive"));
    }
    let (n_s, n_i, t) = (n_s as f64, n_i as f64, steps as f64);
    Ok(t * n_s / (n_s + (t - 1.0) * n_i))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn speedup_formula() {
        for t in [1, 2, 40] {
            assert_eq!(expected_speedup(30, 30, t).unwrap(), 1.0);
        }
        assert_eq!(expected_speedup(50, 10, 1).unwrap(), 1.0);
        assert!((expected_speedup(50, 10, 40).unwrap() - 2000.0 / 440.0).abs() < 1e-12);
        assert!((expected_speedup(50, 10, 10).unwrap() - 500.0 / 140.0).abs() < 1e-12);
        assert!(expected_speedup(0, 10, 10).is_err());
    }
}
