//! Seeded assembly of labelled benchmark corpora.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::jsonl::{LabeledTrajectory, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::gan::{nearest_direction, GanBundle};
use crate::surrogate::{human_surrogate, SurrogateConfig};
use crate::synth::{generate_function_bot, SynthConfig};
use crate::tags::{AttackType, Direction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkSpec {
    pub n_human: usize,
    /// Count per bot tag; tags left out are not generated.
    pub attacks: BTreeMap<AttackType, usize>,
    pub synth: SynthConfig,
    pub surrogate: SurrogateConfig,
    pub seed: u64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            n_human: 100,
            attacks: AttackType::function_bots().into_iter().map(|a| (a, 100)).collect(),
            synth: SynthConfig::default(),
            surrogate: SurrogateConfig::default(),
            seed: 0,
        }
    }
}

impl BenchmarkSpec {
    /// `n` of every bot tag (GAN included) and `10 n` humans.
    pub fn balanced(n: usize, seed: u64) -> BenchmarkSpec {
        BenchmarkSpec { n_human: 10 * n, attacks: AttackType::bots().into_iter().map(|a| (a, n)).collect(), seed, ..Default::default() }
    }

    pub fn total(&self) -> usize {
        self.n_human + self.attacks.values().sum::<usize>()
    }

    fn wants_gan(&self) -> bool {
        self.attacks.get(&AttackType::Gan).is_some_and(|&n| n > 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub seed: u64,
    pub total: usize,
    pub humans: usize,
    pub bots: usize,
    pub counts: BTreeMap<String, usize>,
}

impl Manifest {
    pub fn of(records: &[LabeledTrajectory], seed: u64) -> Manifest {
        let mut counts = BTreeMap::new();
        for r in records {
            *counts.entry(r.attack.to_string()).or_insert(0) += 1;
        }
        let humans = records.iter().filter(|r| r.is_human()).count();
        Manifest { schema_version: SCHEMA_VERSION, seed, total: records.len(), humans, bots: records.len() - humans, counts }
    }
}

fn record_rng(seed: u64, tag: usize, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 32) | i as u64);
    rng
}

fn tag_index(a: AttackType) -> usize {
    std::iter::once(AttackType::Human).chain(AttackType::bots()).position(|b| b == a).expect("closed tag set")
}

/// Generates every requested sample. Record `i` of each tag draws from its
/// own random stream and cycles through the eight directions, so output does
/// not depend on thread count. `humans`, when given, replaces surrogate
/// generation and must hold at least `n_human` trajectories.
pub fn build_benchmark(spec: &BenchmarkSpec, humans: Option<&[LabeledTrajectory]>, gan: Option<&GanBundle>) -> Result<Vec<LabeledTrajectory>> {
    spec.synth.validate()?;
    if spec.wants_gan() && gan.is_none() {
        return Err(Error::Config("GAN attacks requested but no bundle supplied".into()));
    }
    if let Some(g) = gan {
        g.validate()?;
    }
    let dirs: Vec<Direction> = Direction::all().collect();
    let mut out: Vec<LabeledTrajectory> = match humans {
        Some(h) => {
            let pool: Vec<&LabeledTrajectory> = h.iter().filter(|r| r.is_human()).collect();
            if pool.len() < spec.n_human {
                return Err(Error::InvalidInput(format!("{} human trajectories requested, {} supplied", spec.n_human, pool.len())));
            }
            pool[..spec.n_human].iter().map(|r| (*r).clone()).collect()
        }
        None => (0..spec.n_human)
            .into_par_iter()
            .map(|i| {
                let mut rng = record_rng(spec.seed, 0, i);
                let t = human_surrogate(dirs[i % 8], &spec.surrogate, &mut rng)?;
                Ok(LabeledTrajectory::new(format!("human-{i:05}"), AttackType::Human, t))
            })
            .collect::<Result<_>>()?,
    };
    for (&tag, &n) in &spec.attacks {
        if tag.is_human() {
            return Err(Error::Config("'human' is not an attack tag".into()));
        }
        let ti = tag_index(tag);
        let recs: Vec<LabeledTrajectory> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = record_rng(spec.seed, ti, i);
                let traj = match (tag, gan) {
                    (AttackType::Function(s, v), _) => generate_function_bot(s, v, dirs[i % 8], &spec.synth, &mut rng)?,
                    (AttackType::Gan, Some(g)) => {
                        let t = g.generate(&g.noise(&mut rng))?;
                        let d = nearest_direction(&t, &spec.synth.layout);
                        t.with_direction(Some(d))
                    }
                    _ => unreachable!("checked above"),
                };
                Ok(LabeledTrajectory::new(format!("{tag}-{i:05}"), tag, traj))
            })
            .collect::<Result<_>>()?;
        out.extend(recs);
    }
    Ok(out)
}
