//! Fixed-size descriptors of one movement.
//!
//! The neuromotor set summarises the strokes of a decomposition: for each
//! half of the movement (split at half its duration, strokes assigned by peak
//! time) and each stroke parameter it records the maximum, minimum and mean,
//! followed by the stroke count. Halves without strokes contribute zeros. The
//! global set holds six path descriptors; the combined set concatenates both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lognormal::{decompose_trajectory, Decomposition, FitConfig, LognormalStroke};
use crate::trajectory::{path_stats, Trajectory};

/// Efficiency reported for movements that end where they started.
pub const EFFICIENCY_CAP: f64 = 1e6;

/// Version of the feature order; bump when names or order change.
pub const FEATURE_SCHEMA_VERSION: u32 = 1;

const PARAMS: [&str; 6] = ["d", "t0", "mu", "sigma", "theta_s", "theta_e"];
const STATS: [&str; 3] = ["max", "min", "mean"];
const GLOBAL: [&str; 6] = ["duration", "distance", "displacement", "mean_angle", "mean_speed", "efficiency"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSet {
    #[serde(alias = "neuromotor37")]
    Neuromotor,
    #[serde(alias = "global6")]
    Global,
    #[serde(alias = "combined43")]
    Combined,
}

impl FeatureSet {
    pub const ALL: [FeatureSet; 3] = [FeatureSet::Neuromotor, FeatureSet::Global, FeatureSet::Combined];

    pub fn dim(self) -> usize {
        match self {
            FeatureSet::Neuromotor => 37,
            FeatureSet::Global => 6,
            FeatureSet::Combined => 43,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureSet::Neuromotor => "neuromotor",
            FeatureSet::Global => "global",
            FeatureSet::Combined => "combined",
        }
    }

    /// Canonical feature names in vector order.
    pub fn names(self) -> Vec<String> {
        let neuro = || {
            let mut v: Vec<String> =
                ["h1", "h2"].iter().flat_map(|h| PARAMS.iter().flat_map(move |p| STATS.iter().map(move |s| format!("{h}_{p}_{s}")))).collect();
            v.push("n_strokes".into());
            v
        };
        let global = || GLOBAL.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        match self {
            FeatureSet::Neuromotor => neuro(),
            FeatureSet::Global => global(),
            FeatureSet::Combined => {
                let mut v = neuro();
                v.extend(global());
                v
            }
        }
    }

    pub fn needs_decomposition(self) -> bool {
        self != FeatureSet::Global
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neuromotor" | "neuromotor37" => Ok(FeatureSet::Neuromotor),
            "global" | "global6" => Ok(FeatureSet::Global),
            "combined" | "combined43" => Ok(FeatureSet::Combined),
            other => Err(Error::Lookup(format!("unknown feature set '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub set: FeatureSet,
    pub values: Vec<f64>,
}

impl FeatureVector {
    fn new(set: FeatureSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != set.dim() {
            return Err(Error::Schema(format!("{set} expects {} values, got {}", set.dim(), values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("feature {} is not finite", set.names()[i])));
        }
        Ok(FeatureVector { set, values })
    }

    pub fn names(&self) -> Vec<String> {
        self.set.names()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn params(s: &LognormalStroke) -> [f64; 6] {
    [s.d, s.t0, s.mu, s.sigma, s.theta_s, s.theta_e]
}

/// 37 stroke statistics; `traj` supplies the duration that splits the halves.
pub fn neuromotor_features(dec: &Decomposition, traj: &Trajectory) -> Result<FeatureVector> {
    let mid = 0.5 * traj.duration();
    let mut values = Vec::with_capacity(37);
    for first in [true, false] {
        let half: Vec<[f64; 6]> = dec.strokes.iter().filter(|s| (s.peak_time() < mid) == first).map(params).collect();
        for p in 0..6 {
            if half.is_empty() {
                values.extend([0.0; 3]);
                continue;
            }
            let (mut hi, mut lo, mut sum) = (f64::NEG_INFINITY, f64::INFINITY, 0.0);
            for s in &half {
                hi = hi.max(s[p]);
                lo = lo.min(s[p]);
                sum += s[p];
            }
            values.extend([hi, lo, sum / half.len() as f64]);
        }
    }
    values.push(dec.n() as f64);
    FeatureVector::new(FeatureSet::Neuromotor, values)
}

/// Duration, distance, displacement, mean angle, mean speed and efficiency
/// (distance over displacement, capped at [`EFFICIENCY_CAP`]).
pub fn global_features(traj: &Trajectory) -> Result<FeatureVector> {
    let ps = path_stats(traj)?;
    let efficiency = if ps.displacement > 0.0 { (ps.path_length / ps.displacement).min(EFFICIENCY_CAP) } else { EFFICIENCY_CAP };
    FeatureVector::new(FeatureSet::Global, vec![ps.duration, ps.path_length, ps.displacement, ps.mean_angle, ps.mean_speed, efficiency])
}

pub fn combined_features(traj: &Trajectory, dec: &Decomposition) -> Result<FeatureVector> {
    let mut values = neuromotor_features(dec, traj)?.values;
    values.extend(global_features(traj)?.values);
    FeatureVector::new(FeatureSet::Combined, values)
}

/// Dispatches on `set`; `dec` may be `None` only for the global set.
pub fn extract(set: FeatureSet, traj: &Trajectory, dec: Option<&Decomposition>) -> Result<FeatureVector> {
    let need = || Error::InvalidInput(format!("{set} features need a decomposition"));
    match set {
        FeatureSet::Global => global_features(traj),
        FeatureSet::Neuromotor => neuromotor_features(dec.ok_or_else(need)?, traj),
        FeatureSet::Combined => combined_features(traj, dec.ok_or_else(need)?),
    }
}

/// Decomposes `traj` when `set` needs strokes, then extracts.
pub fn featurize(set: FeatureSet, traj: &Trajectory, fit: &FitConfig) -> Result<(FeatureVector, Option<Decomposition>)> {
    let dec = if set.needs_decomposition() { Some(decompose_trajectory(traj, fit)?) } else { None };
    Ok((extract(set, traj, dec.as_ref())?, dec))
}
