//! Repeated stratified hold-out evaluation and learning curves.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::LabeledDataset;
use super::metrics::{evaluate, summarize, Metrics, Summary};
use super::ModelSpec;
use crate::error::{Error, Result};
use crate::gan::{train_recurrent_detector, DetectorConfig};
use crate::tags::{AttackType, Direction};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    pub train_frac: f64,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig { train_frac: 0.7, repeats: 5, seed: 0 }
    }
}

impl ProtocolConfig {
    fn validate(&self) -> Result<()> {
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) || self.repeats == 0 {
            return Err(Error::Config(format!("train_frac {} / repeats {} out of range", self.train_frac, self.repeats)));
        }
        Ok(())
    }

    /// Seed for repeat `r`; shared by the split and the model so curves and
    /// protocol runs line up.
    pub fn repeat_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupBy {
    #[default]
    None,
    Direction,
    Attack,
}

impl std::str::FromStr for GroupBy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(GroupBy::None),
            "direction" => Ok(GroupBy::Direction),
            "attack" => Ok(GroupBy::Attack),
            other => Err(Error::Lookup(format!("unknown grouping '{other}'"))),
        }
    }
}

/// Class-wise shuffle, keeping `round(frac * n_class)` of each class for
/// training. Both index lists come back sorted.
pub fn stratified_split(labels: &[bool], frac: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(rng);
        let k = (frac * idx.len() as f64).round() as usize;
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

/// `l / 2` humans and `l / 2` bots drawn from `pool`, returned sorted.
pub fn balanced_subset(pool: &[usize], labels: &[bool], l: usize, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
    if l < 2 || !l.is_multiple_of(2) {
        return Err(Error::Config(format!("L = {l} must be even and at least 2")));
    }
    let mut out = Vec::with_capacity(l);
    for class in [true, false] {
        let mut idx: Vec<usize> = pool.iter().copied().filter(|&i| labels[i] == class).collect();
        if idx.len() < l / 2 {
            return Err(Error::InvalidInput(format!(
                "L = {l} needs {} {} training rows, only {} available",
                l / 2,
                if class { "human" } else { "bot" },
                idx.len()
            )));
        }
        idx.shuffle(rng);
        out.extend_from_slice(&idx[..l / 2]);
    }
    out.sort_unstable();
    Ok(out)
}

/// Runs `fit_score(train, test, seed)` on each repeat's split and summarises
/// the returned `(score, is_human)` pairs. `subset_l` narrows the training
/// split to a balanced subset of that size.
pub fn repeat_splits<F>(labels: &[bool], cfg: &ProtocolConfig, subset_l: Option<usize>, mut fit_score: F) -> Result<(Summary, Vec<Metrics>)>
where
    F: FnMut(&[usize], &[usize], u64) -> Result<Vec<(f64, bool)>>,
{
    cfg.validate()?;
    let humans = labels.iter().filter(|&&l| l).count();
    if humans == 0 || humans == labels.len() {
        return Err(Error::InvalidInput("protocol needs both classes".into()));
    }
    let mut runs = Vec::with_capacity(cfg.repeats);
    for r in 0..cfg.repeats {
        let seed = cfg.repeat_seed(r);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut train, test) = stratified_split(labels, cfg.train_frac, &mut rng);
        if let Some(l) = subset_l {
            let mut sub = ChaCha8Rng::seed_from_u64(seed);
            sub.set_stream(1);
            train = balanced_subset(&train, labels, l, &mut sub)?;
        }
        let scores = fit_score(&train, &test, seed)?;
        runs.push(evaluate(&scores)?);
    }
    Ok((summarize(&runs)?, runs))
}

fn fit_and_score(ds: &LabeledDataset, spec: &ModelSpec, train: &[usize], test: &[usize], seed: u64) -> Result<Vec<(f64, bool)>> {
    let labels = ds.labels();
    let (scaler, model) = spec.fit_rows(ds, train, seed)?;
    let xte = scaler.apply_all(&ds.rows(test))?;
    Ok(xte.iter().zip(test).map(|(x, &i)| (model.predict_proba(x), labels[i])).collect())
}

/// Mean and spread of the held-out metrics over `cfg.repeats` stratified splits.
pub fn run_protocol(ds: &LabeledDataset, spec: &ModelSpec, cfg: &ProtocolConfig) -> Result<Summary> {
    repeat_splits(&ds.labels(), cfg, None, |tr, te, seed| fit_and_score(ds, spec, tr, te, seed)).map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupResult {
    pub group: String,
    pub n: usize,
    pub summary: Summary,
}

/// Row indices of each evaluation group: every direction present (all its
/// rows), or every attack present (its bots plus all humans).
pub fn group_rows(attacks: &[AttackType], directions: &[Option<Direction>], by: GroupBy) -> Vec<(String, Vec<usize>)> {
    let pick = |keep: &dyn Fn(usize) -> bool| (0..attacks.len()).filter(|&i| keep(i)).collect::<Vec<usize>>();
    match by {
        GroupBy::None => vec![("all".into(), (0..attacks.len()).collect())],
        GroupBy::Direction => Direction::all().map(|d| (d.to_string(), pick(&|i| directions[i] == Some(d)))).filter(|(_, g)| !g.is_empty()).collect(),
        GroupBy::Attack => AttackType::bots()
            .into_iter()
            .filter(|a| attacks.contains(a))
            .map(|a| (a.to_string(), pick(&|i| attacks[i] == a || attacks[i].is_human())))
            .collect(),
    }
}

pub fn run_grouped(ds: &LabeledDataset, spec: &ModelSpec, cfg: &ProtocolConfig, by: GroupBy) -> Result<Vec<GroupResult>> {
    let attacks: Vec<AttackType> = ds.samples.iter().map(|s| s.attack).collect();
    let dirs: Vec<Option<Direction>> = ds.samples.iter().map(|s| s.direction).collect();
    group_rows(&attacks, &dirs, by)
        .into_iter()
        .map(|(group, idx)| Ok(GroupResult { n: idx.len(), summary: run_protocol(&ds.select(&idx), spec, cfg)?, group }))
        .collect()
}

/// [`run_protocol`] for the recurrent detector, which reads trajectories
/// rather than feature rows. The repeat seed replaces `cfg.seed`.
pub fn run_recurrent_protocol(trajs: &[Trajectory], humans: &[bool], cfg: &DetectorConfig, pcfg: &ProtocolConfig, subset_l: Option<usize>) -> Result<Summary> {
    if trajs.len() != humans.len() {
        return Err(Error::InvalidInput(format!("{} trajectories for {} labels", trajs.len(), humans.len())));
    }
    let pick = |idx: &[usize]| -> (Vec<Trajectory>, Vec<bool>) { (idx.iter().map(|&i| trajs[i].clone()).collect(), idx.iter().map(|&i| humans[i]).collect()) };
    repeat_splits(humans, pcfg, subset_l, |tr, te, seed| {
        let (xtr, ytr) = pick(tr);
        let det = train_recurrent_detector(&xtr, &ytr, &DetectorConfig { seed, ..cfg.clone() })?;
        te.iter().map(|&i| Ok((det.predict_proba(&trajs[i])?, humans[i]))).collect()
    })
    .map(|r| r.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub model: String,
    pub l: usize,
    pub acc: f64,
    pub acc_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    pub fn for_model<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a CurvePoint> + 'a {
        self.points.iter().filter(move |p| p.model == model)
    }

    /// Whether the last accuracy of each model is no more than `slack` below its first.
    pub fn trend_ok(&self, slack: f64) -> Vec<(String, bool)> {
        let mut models: Vec<String> = self.points.iter().map(|p| p.model.clone()).collect();
        models.dedup();
        models
            .into_iter()
            .map(|m| {
                let pts: Vec<&CurvePoint> = self.for_model(&m).collect();
                let ok = pts.last().unwrap().acc >= pts[0].acc - slack;
                (m, ok)
            })
            .collect()
    }
}

/// Held-out accuracy for each model trained on `l` balanced samples, with
/// the same splits and test sets as [`run_protocol`].
pub fn run_learning_curve(ds: &LabeledDataset, specs: &[ModelSpec], ls: &[usize], cfg: &ProtocolConfig) -> Result<LearningCurve> {
    let max_train = (cfg.train_frac * ds.len() as f64).floor() as usize;
    if let Some(&big) = ls.iter().find(|&&l| l > max_train) {
        return Err(Error::InvalidInput(format!("L = {big} exceeds the {max_train} training rows")));
    }
    let mut points = Vec::new();
    for spec in specs {
        for &l in ls {
            let (s, _) = repeat_splits(&ds.labels(), cfg, Some(l), |tr, te, seed| fit_and_score(ds, spec, tr, te, seed))?;
            points.push(CurvePoint { model: spec.name().into(), l, acc: s.mean.acc, acc_std: s.std.acc });
        }
    }
    Ok(LearningCurve { points })
}
