//! Novelty baseline trained on human rows alone.

use serde::{Deserialize, Serialize};

use super::knn::nearest;
use crate::error::{Error, Result};
use crate::synth::stats::percentile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OneClassConfig {
    pub k: usize,
    /// Quantile of the leave-one-out training scores used as the bot threshold.
    pub quantile: f64,
}

impl Default for OneClassConfig {
    fn default() -> Self {
        OneClassConfig { k: 10, quantile: 0.95 }
    }
}

/// Scores a row by its mean distance to the `k` nearest human rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneClass {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub threshold: f64,
}

fn mean_dist(nn: &[(usize, f64)]) -> f64 {
    nn.iter().map(|p| p.1).sum::<f64>() / nn.len() as f64
}

impl OneClass {
    pub fn fit(humans: Vec<Vec<f64>>, cfg: OneClassConfig) -> Result<OneClass> {
        if cfg.k == 0 || !(0.0..=1.0).contains(&cfg.quantile) {
            return Err(Error::Config(format!("bad one-class config k={} q={}", cfg.k, cfg.quantile)));
        }
        if humans.len() <= cfg.k {
            return Err(Error::InvalidInput(format!("need more than k = {} human rows, got {}", cfg.k, humans.len())));
        }
        let mut loo: Vec<f64> = (0..humans.len())
            .map(|i| {
                // k + 1 nearest includes the row itself at distance zero; drop that entry
                let nn = nearest(&humans, &humans[i], cfg.k + 1);
                let pos = nn.iter().position(|p| p.0 == i).unwrap_or(cfg.k);
                let others: Vec<(usize, f64)> = nn.iter().enumerate().filter(|(j, _)| *j != pos).map(|(_, p)| *p).take(cfg.k).collect();
                mean_dist(&others)
            })
            .collect();
        loo.sort_by(f64::total_cmp);
        let threshold = percentile(&loo, cfg.quantile);
        Ok(OneClass { k: cfg.k, rows: humans, threshold })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        mean_dist(&nearest(&self.rows, x, self.k))
    }

    pub fn is_bot(&self, x: &[f64]) -> bool {
        self.score(x) > self.threshold
    }

    /// Monotone map of the novelty score onto [0, 1]; exactly 0.5 at the
    /// threshold so the shared decision rule agrees with [`Self::is_bot`].
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let s = self.score(x);
        if self.threshold + s == 0.0 {
            1.0
        } else {
            self.threshold / (self.threshold + s)
        }
    }
}
