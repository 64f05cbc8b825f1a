//! Event-log ingestion, dataset files and benchmark assembly.

pub mod bench;
pub mod jsonl;
pub mod raw;

use rayon::prelude::*;

pub use bench::{build_benchmark, BenchmarkSpec, Manifest};
pub use jsonl::{
    load_decompositions, load_features, load_trajectories, save_decompositions, save_features, save_trajectories, DecompositionRecord, LabeledTrajectory,
};
pub use raw::{parse_raw_events, RawParse, MIN_TRAJECTORY_POINTS};

use crate::classify::{LabeledDataset, Sample};
use crate::error::Result;
use crate::features::{featurize, FeatureSet};
use crate::lognormal::FitConfig;

/// Feature rows for every record, computed in parallel. Records whose
/// decomposition fails are skipped and counted.
pub fn featurize_all(records: &[LabeledTrajectory], set: FeatureSet, fit: &FitConfig) -> Result<(LabeledDataset, usize)> {
    let rows: Vec<Option<Sample>> = records
        .par_iter()
        .map(|r| match featurize(set, &r.traj, fit) {
            Ok((fv, _)) => Some(Sample { id: r.id.clone(), features: fv.values, attack: r.attack, direction: r.traj.direction() }),
            Err(e) => {
                log::warn!("skipping '{}': {e}", r.id);
                None
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.is_none()).count();
    Ok((LabeledDataset::new(set, rows.into_iter().flatten().collect())?, failed))
}
