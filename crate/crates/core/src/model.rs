//! Trained detectors as versioned files, and the single-trajectory scoring path.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::classify::{Detector, LabeledDataset, ModelSpec, Scaler, THRESHOLD};
use crate::error::{Error, Result};
use crate::features::{extract, FeatureSet, FeatureVector};
use crate::gan::{train_recurrent_detector, DetectorConfig, RecurrentDetector};
use crate::lognormal::{decompose_trajectory, Decomposition, FitConfig};
use crate::trajectory::Trajectory;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TrainedModel {
    /// Feature pipeline: decompose, extract, standardize, score.
    Features { feature_set: FeatureSet, fit: FitConfig, spec: ModelSpec, scaler: Scaler, detector: Detector },
    /// Scores the resampled coordinate sequence directly.
    Recurrent { detector: RecurrentDetector },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub model: TrainedModel,
}

/// Result of scoring one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub score: f64,
    pub human: bool,
    pub decomposition: Decomposition,
    pub features: FeatureVector,
}

impl TrainedModel {
    /// Fits `spec` on every row of `ds`.
    pub fn train_features(ds: &LabeledDataset, spec: &ModelSpec, fit: &FitConfig, seed: u64) -> Result<TrainedModel> {
        let all: Vec<usize> = (0..ds.len()).collect();
        let (scaler, detector) = spec.fit_rows(ds, &all, seed)?;
        Ok(TrainedModel::Features { feature_set: ds.set, fit: fit.clone(), spec: spec.clone(), scaler, detector })
    }

    pub fn train_recurrent(trajs: &[Trajectory], humans: &[bool], cfg: &DetectorConfig) -> Result<TrainedModel> {
        Ok(TrainedModel::Recurrent { detector: train_recurrent_detector(trajs, humans, cfg)? })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrainedModel::Features { detector, .. } => detector.name(),
            TrainedModel::Recurrent { .. } => "rnn",
        }
    }

    pub fn feature_set(&self) -> Option<FeatureSet> {
        match self {
            TrainedModel::Features { feature_set, .. } => Some(*feature_set),
            TrainedModel::Recurrent { .. } => None,
        }
    }

    /// Probability that an already extracted feature row is human.
    pub fn score_features(&self, row: &[f64]) -> Result<f64> {
        match self {
            TrainedModel::Features { scaler, detector, .. } => Ok(detector.predict_proba(&scaler.apply(row)?)),
            TrainedModel::Recurrent { .. } => Err(Error::InvalidInput("the recurrent detector scores trajectories, not feature rows".into())),
        }
    }

    /// Scores `traj` and returns the decomposition and `display` features
    /// alongside. The score always uses the model's own inputs; `display`
    /// only picks which features are reported (default: the model's set,
    /// or the combined set for the recurrent detector).
    pub fn predict(&self, traj: &Trajectory, display: Option<FeatureSet>) -> Result<Prediction> {
        let fit = match self {
            TrainedModel::Features { fit, .. } => fit.clone(),
            TrainedModel::Recurrent { .. } => FitConfig::default(),
        };
        let dec = decompose_trajectory(traj, &fit)?;
        let score = match self {
            TrainedModel::Features { feature_set, .. } => self.score_features(&extract(*feature_set, traj, Some(&dec))?.values)?,
            TrainedModel::Recurrent { detector } => detector.predict_proba(traj)?,
        };
        let shown = display.or(self.feature_set()).unwrap_or(FeatureSet::Combined);
        let features = extract(shown, traj, Some(&dec))?;
        Ok(Prediction { score, human: score >= THRESHOLD, decomposition: dec, features })
    }
}

impl ModelFile {
    pub fn new(model: TrainedModel) -> ModelFile {
        ModelFile { schema_version: MODEL_SCHEMA_VERSION, model }
    }

    pub fn save(&self, w: impl Write) -> Result<()> {
        serde_json::to_writer(w, self)?;
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<ModelFile> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let v: serde_json::Value = serde_json::from_str(&text)?;
        let found = v.get("schema_version").and_then(|s| s.as_u64()).ok_or_else(|| Error::Schema("model file has no schema_version".into()))?;
        if found != u64::from(MODEL_SCHEMA_VERSION) {
            return Err(Error::Version { found: found as u32, expected: MODEL_SCHEMA_VERSION });
        }
        let file: ModelFile = serde_json::from_value(v)?;
        if let TrainedModel::Recurrent { detector } = &file.model {
            detector.validate()?;
        }
        if let TrainedModel::Features { feature_set, scaler, .. } = &file.model {
            if scaler.dim() != feature_set.dim() {
                return Err(Error::Schema(format!("scaler width {} does not match {} features", scaler.dim(), feature_set)));
            }
        }
        Ok(file)
    }
}
