//! Supervised detectors, a one-class baseline, metrics and evaluation protocols.
//!
//! Human is the positive class everywhere: every model returns the
//! probability that a row is human and [`metrics::THRESHOLD`] turns it into
//! a label.

mod dataset;
pub mod forest;
pub mod knn;
pub mod metrics;
pub mod mlp;
pub mod oneclass;
pub mod protocol;

use serde::{Deserialize, Serialize};

pub use dataset::{standardize, LabeledDataset, Sample, Scaler};
pub use forest::{train_random_forest, ForestConfig, RandomForest};
pub use knn::Knn;
pub use metrics::{auc, evaluate, summarize, Confusion, Metrics, Summary, THRESHOLD};
pub use mlp::{train_mlp, Activation, Mlp, MlpConfig};
pub use oneclass::{OneClass, OneClassConfig};
pub use protocol::{
    group_rows, run_grouped, run_learning_curve, run_protocol, run_recurrent_protocol, CurvePoint, GroupBy, GroupResult, LearningCurve, ProtocolConfig,
};

use crate::error::Result;

/// Which model to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Rf(ForestConfig),
    Knn {
        k: usize,
    },
    Mlp(MlpConfig),
    #[serde(rename = "oneclass")]
    OneClass(OneClassConfig),
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Rf(_) => "rf",
            ModelSpec::Knn { .. } => "knn",
            ModelSpec::Mlp(_) => "mlp",
            ModelSpec::OneClass(_) => "oneclass",
        }
    }

    /// Default hyperparameters for a model name.
    pub fn by_name(name: &str) -> Result<ModelSpec> {
        Ok(match name {
            "rf" => ModelSpec::Rf(ForestConfig::default()),
            "knn" => ModelSpec::Knn { k: 10 },
            "mlp" => ModelSpec::Mlp(MlpConfig::default()),
            "oneclass" => ModelSpec::OneClass(OneClassConfig::default()),
            other => return Err(crate::Error::Lookup(format!("unknown model '{other}'"))),
        })
    }

    /// Whether the model may see human rows only, scaling included.
    pub fn humans_only(&self) -> bool {
        matches!(self, ModelSpec::OneClass(_))
    }

    /// Fits a scaler and the model on the rows `idx` of `ds`.
    pub fn fit_rows(&self, ds: &LabeledDataset, idx: &[usize], seed: u64) -> Result<(Scaler, Detector)> {
        let labels = ds.labels();
        let idx: Vec<usize> = idx.iter().copied().filter(|&i| labels[i] || !self.humans_only()).collect();
        let scaler = Scaler::fit(&ds.rows(&idx))?;
        let x = scaler.apply_all(&ds.rows(&idx))?;
        let y: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        Ok((scaler, self.fit(&x, &y, seed)?))
    }

    /// Trains on standardized rows. `seed` replaces any seed in the config;
    /// the one-class model keeps only the human rows.
    pub fn fit(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Detector> {
        Ok(match self {
            ModelSpec::Rf(cfg) => Detector::Forest(train_random_forest(x, y, &ForestConfig { seed, ..cfg.clone() })?),
            ModelSpec::Knn { k } => Detector::Knn(Knn::fit(x.to_vec(), y.to_vec(), *k)?),
            ModelSpec::Mlp(cfg) => Detector::Mlp(train_mlp(x, y, &MlpConfig { seed, ..cfg.clone() })?),
            ModelSpec::OneClass(cfg) => {
                let humans = x.iter().zip(y).filter(|p| *p.1).map(|p| p.0.clone()).collect();
                Detector::OneClass(OneClass::fit(humans, *cfg)?)
            }
        })
    }
}

/// A trained feature-based model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Detector {
    #[serde(rename = "rf")]
    Forest(RandomForest),
    Knn(Knn),
    Mlp(Mlp),
    #[serde(rename = "oneclass")]
    OneClass(OneClass),
}

impl Detector {
    /// Probability that `x` (already standardized) is human.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            Detector::Forest(m) => m.predict_proba(x),
            Detector::Knn(m) => m.predict_proba(x),
            Detector::Mlp(m) => m.predict_proba(x),
            Detector::OneClass(m) => m.predict_proba(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Detector::Forest(_) => "rf",
            Detector::Knn(_) => "knn",
            Detector::Mlp(_) => "mlp",
            Detector::OneClass(_) => "oneclass",
        }
    }
}
