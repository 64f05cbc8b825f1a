//! Line-delimited JSON with a versioned header line.
//!
//! The first line of a non-empty file is
//! `{"schema_version":1,"kind":"<kind>", ...}`; every following line is one
//! record. A zero-byte file reads as an empty collection.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classify::{LabeledDataset, Sample};
use crate::error::{Error, Result};
use crate::features::{FeatureSet, FEATURE_SCHEMA_VERSION};
use crate::lognormal::{Decomposition, FitQuality, LognormalStroke};
use crate::tags::{AttackType, Direction};
use crate::trajectory::{Point, Trajectory, TrajectoryMeta};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feature_set: Option<FeatureSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl Header {
    pub fn new(kind: &str) -> Header {
        Header { schema_version: SCHEMA_VERSION, kind: kind.into(), feature_set: None, names: None }
    }
}

/// Writes the header and one compact JSON object per record.
pub fn write_jsonl<T: Serialize>(mut w: impl Write, header: &Header, records: &[T]) -> Result<()> {
    serde_json::to_writer(&mut w, header)?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_jsonl`], checking version and kind.
/// Returns `None` for the header of an empty input.
pub fn read_jsonl<T: DeserializeOwned>(r: impl BufRead, kind: &str) -> Result<(Option<Header>, Vec<T>)> {
    let mut header: Option<Header> = None;
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match &header {
            None => {
                let h: Header = serde_json::from_str(&line).map_err(|e| Error::Parse { line: n, msg: format!("bad header: {e}") })?;
                if h.schema_version != SCHEMA_VERSION {
                    return Err(Error::Version { found: h.schema_version, expected: SCHEMA_VERSION });
                }
                if h.kind != kind {
                    return Err(Error::Schema(format!("expected a '{kind}' file, found '{}'", h.kind)));
                }
                header = Some(h);
            }
            Some(_) => out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: n, msg: e.to_string() })?),
        }
    }
    Ok((header, out))
}

/// A trajectory with its ground-truth tag.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTrajectory {
    pub id: String,
    pub attack: AttackType,
    pub traj: Trajectory,
}

impl LabeledTrajectory {
    pub fn new(id: impl Into<String>, attack: AttackType, traj: Trajectory) -> LabeledTrajectory {
        let direction = traj.direction();
        LabeledTrajectory { id: id.into(), attack, traj: traj.with_meta(TrajectoryMeta { direction, source: Some(attack.source()) }) }
    }

    pub fn is_human(&self) -> bool {
        self.attack.is_human()
    }
}

/// On-disk trajectory record; `label` is 1 for human, 0 for bot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryRecord {
    id: String,
    label: u8,
    attack_type: AttackType,
    direction: Option<Direction>,
    points: Vec<(f64, f64, i64)>,
}

fn label_of(attack: AttackType) -> u8 {
    u8::from(attack.is_human())
}

fn check_label(id: &str, label: u8, attack: AttackType) -> Result<()> {
    if label > 1 || label != label_of(attack) {
        return Err(Error::Schema(format!("record '{id}': label {label} contradicts attack_type {attack}")));
    }
    Ok(())
}

impl TrajectoryRecord {
    fn from_labeled(r: &LabeledTrajectory) -> Result<TrajectoryRecord> {
        let points: Vec<(f64, f64, i64)> = r.traj.points().iter().map(|p| (p.x, p.y, (p.t * 1000.0).round() as i64)).collect();
        if points.windows(2).any(|w| w[1].2 <= w[0].2) {
            return Err(Error::InvalidTrajectory(format!("record '{}': timestamps collide at millisecond precision", r.id)));
        }
        Ok(TrajectoryRecord { id: r.id.clone(), label: label_of(r.attack), attack_type: r.attack, direction: r.traj.direction(), points })
    }

    fn into_labeled(self) -> Result<LabeledTrajectory> {
        check_label(&self.id, self.label, self.attack_type)?;
        let traj = Trajectory::new(self.points.iter().map(|&(x, y, t)| Point::new(x, y, t as f64 / 1000.0)).collect())
            .map_err(|e| Error::Schema(format!("record '{}': {e}", self.id)))?
            .with_direction(self.direction);
        Ok(LabeledTrajectory::new(self.id, self.attack_type, traj))
    }
}

pub fn save_trajectories(w: impl Write, records: &[LabeledTrajectory]) -> Result<()> {
    let recs: Vec<TrajectoryRecord> = records.iter().map(TrajectoryRecord::from_labeled).collect::<Result<_>>()?;
    write_jsonl(w, &Header::new("trajectories"), &recs)
}

pub fn load_trajectories(r: impl BufRead) -> Result<Vec<LabeledTrajectory>> {
    let (_, recs) = read_jsonl::<TrajectoryRecord>(r, "trajectories")?;
    recs.into_iter().map(TrajectoryRecord::into_labeled).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FeatureRecord {
    id: String,
    label: u8,
    attack_type: AttackType,
    direction: Option<Direction>,
    features: Vec<f64>,
}

/// Writes a feature table; the header records the set and its column names.
pub fn save_features(w: impl Write, ds: &LabeledDataset) -> Result<()> {
    let header = Header { feature_set: Some(ds.set), names: Some(ds.set.names()), ..Header::new("features") };
    let recs: Vec<FeatureRecord> = ds
        .samples
        .iter()
        .map(|s| FeatureRecord { id: s.id.clone(), label: label_of(s.attack), attack_type: s.attack, direction: s.direction, features: s.features.clone() })
        .collect();
    write_jsonl(w, &header, &recs)
}

pub fn load_features(r: impl BufRead) -> Result<LabeledDataset> {
    let (header, recs) = read_jsonl::<FeatureRecord>(r, "features")?;
    let Some(header) = header else {
        return Err(Error::InvalidInput("feature file is empty".into()));
    };
    let set = header.feature_set.ok_or_else(|| Error::Schema("feature header lacks 'feature_set'".into()))?;
    if header.names.as_ref().is_some_and(|n| *n != set.names()) {
        return Err(Error::Schema(format!("feature names differ from feature schema version {FEATURE_SCHEMA_VERSION}")));
    }
    let samples = recs
        .into_iter()
        .map(|r| {
            check_label(&r.id, r.label, r.attack_type)?;
            Ok(Sample { id: r.id, features: r.features, attack: r.attack_type, direction: r.direction })
        })
        .collect::<Result<_>>()?;
    LabeledDataset::new(set, samples)
}

/// One decomposed trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRecord {
    pub id: String,
    pub label: u8,
    pub attack_type: AttackType,
    pub direction: Option<Direction>,
    pub n: usize,
    pub snr_db: f64,
    pub strokes: Vec<LognormalStroke>,
    pub quality: FitQuality,
}

impl DecompositionRecord {
    pub fn new(r: &LabeledTrajectory, dec: &Decomposition) -> DecompositionRecord {
        DecompositionRecord {
            id: r.id.clone(),
            label: label_of(r.attack),
            attack_type: r.attack,
            direction: r.traj.direction(),
            n: dec.n(),
            snr_db: dec.snr_db,
            strokes: dec.strokes.clone(),
            quality: dec.quality.clone(),
        }
    }

    /// The stored decomposition; residuals are not persisted.
    pub fn decomposition(&self) -> Decomposition {
        Decomposition { strokes: self.strokes.clone(), snr_db: self.snr_db, residual: Vec::new(), quality: self.quality.clone() }
    }
}

pub fn save_decompositions(w: impl Write, recs: &[DecompositionRecord]) -> Result<()> {
    write_jsonl(w, &Header::new("decompositions"), recs)
}

pub fn load_decompositions(r: impl BufRead) -> Result<Vec<DecompositionRecord>> {
    let (_, recs) = read_jsonl::<DecompositionRecord>(r, "decompositions")?;
    for d in &recs {
        check_label(&d.id, d.label, d.attack_type)?;
        if d.n != d.strokes.len() {
            return Err(Error::Schema(format!("record '{}': n = {} but {} strokes", d.id, d.n, d.strokes.len())));
        }
    }
    Ok(recs)
}
