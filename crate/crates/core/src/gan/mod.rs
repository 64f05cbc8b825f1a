//! Adversarial trajectory generator and recurrent detectors.
//!
//! Both networks are stacks of long short-term memory layers trained with
//! Adam and exact backpropagation through time. Coordinates are mapped to
//! `[-1, 1]` per axis with bounds taken from the training corpus; generated
//! sequences are mapped back to pixels and timestamped at a fixed rate.

mod lstm;
mod net;

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::metrics::{evaluate, Metrics};
use crate::classify::mlp::{bce_logit, sigmoid};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::synth::KeypointLayout;
use crate::tags::{Direction, Source};
use crate::trajectory::{resample_to_len, Point, Trajectory};

pub(crate) use net::{DiscNet, GenNet};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    /// Noise length.
    pub r: usize,
    /// Output points per trajectory.
    pub m: usize,
    pub gen_layers: Vec<usize>,
    pub disc_layers: Vec<usize>,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    pub batch: usize,
    pub rate_hz: f64,
    /// Keeps the generator at its initialisation; only the discriminator learns.
    pub freeze_generator: bool,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig::preset(Preset::Desk)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    Desk,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::Lookup(format!("unknown preset '{other}'"))),
        }
    }
}

impl GanConfig {
    /// `Paper` uses 128/64 units per stack, `Desk` 32/16; everything else is shared.
    pub fn preset(p: Preset) -> GanConfig {
        let layers = match p {
            Preset::Paper => vec![128, 64],
            Preset::Desk => vec![32, 16],
        };
        GanConfig {
            r: 100,
            m: 50,
            gen_layers: layers.clone(),
            disc_layers: layers,
            lr: 2e-4,
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 50,
            batch: 128,
            rate_hz: 200.0,
            freeze_generator: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.m < 4 {
            return Err(Error::Config(format!("need r >= 1 and m >= 4, got r={} m={}", self.r, self.m)));
        }
        if self.gen_layers.is_empty() || self.disc_layers.is_empty() || self.gen_layers.contains(&0) || self.disc_layers.contains(&0) {
            return Err(Error::Config("every recurrent layer needs at least one unit".into()));
        }
        if self.batch == 0 || !(self.rate_hz > 0.0) || !(self.lr >= 0.0) {
            return Err(Error::Config("batch, rate_hz and lr must be positive".into()));
        }
        Ok(())
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig { lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }

    fn gen_net(&self) -> GenNet {
        GenNet { r: self.r, m: self.m, layers: self.gen_layers.clone() }
    }

    fn disc_net(&self) -> DiscNet {
        DiscNet { m: self.m, layers: self.disc_layers.clone() }
    }
}

/// Per-axis affine map of pixel coordinates onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Normalizer {
    pub fn fit(trajs: &[Trajectory]) -> Result<Normalizer> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in trajs.iter().flat_map(|t| t.points()) {
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
        if trajs.is_empty() {
            return Err(Error::InvalidInput("no trajectories to normalise".into()));
        }
        for a in 0..2 {
            if hi[a] - lo[a] < 1e-9 {
                hi[a] = lo[a] + 1.0;
            }
        }
        Ok(Normalizer { lo, hi })
    }

    pub fn normalize(&self, x: f64, y: f64) -> [f64; 2] {
        [2.0 * (x - self.lo[0]) / (self.hi[0] - self.lo[0]) - 1.0, 2.0 * (y - self.lo[1]) / (self.hi[1] - self.lo[1]) - 1.0]
    }

    pub fn denormalize(&self, u: [f64; 2]) -> (f64, f64) {
        (self.lo[0] + 0.5 * (u[0] + 1.0) * (self.hi[0] - self.lo[0]), self.lo[1] + 0.5 * (u[1] + 1.0) * (self.hi[1] - self.lo[1]))
    }

    /// Resamples to `m` points and maps them into the unit frame.
    pub fn sequence(&self, traj: &Trajectory, m: usize) -> Result<Vec<[f64; 2]>> {
        let r = resample_to_len(traj, m)?;
        if r.len() != m {
            return Err(Error::Schema(format!("resampled to {} points, expected {m}", r.len())));
        }
        Ok(r.points().iter().map(|p| self.normalize(p.x, p.y)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub g_loss: f64,
    pub d_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "lowercase")]
pub enum TrainStatus {
    Untrained,
    Completed,
    /// Training stopped at `epoch`; the parameters are those after the last finite epoch.
    Diverged {
        epoch: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanBundle {
    pub schema_version: u32,
    pub config: GanConfig,
    pub norm: Normalizer,
    pub gen_params: Vec<f64>,
    pub disc_params: Vec<f64>,
    pub history: Vec<EpochLoss>,
    pub status: TrainStatus,
}

impl GanBundle {
    /// Freshly initialised networks for the given coordinate frame.
    pub fn init(cfg: &GanConfig, norm: Normalizer) -> Result<GanBundle> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let gen_params = cfg.gen_net().init(&mut rng);
        let disc_params = cfg.disc_net().init(&mut rng);
        Ok(GanBundle {
            schema_version: BUNDLE_SCHEMA_VERSION,
            config: cfg.clone(),
            norm,
            gen_params,
            disc_params,
            history: Vec::new(),
            status: TrainStatus::Untrained,
        })
    }

    /// Checks the version and that parameter lengths fit the stored config.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != BUNDLE_SCHEMA_VERSION {
            return Err(Error::Version { found: self.schema_version, expected: BUNDLE_SCHEMA_VERSION });
        }
        self.config.validate()?;
        let (g, d) = (self.config.gen_net().len(), self.config.disc_net().len());
        if self.gen_params.len() != g || self.disc_params.len() != d {
            return Err(Error::Schema(format!("bundle holds {}/{} parameters, config needs {g}/{d}", self.gen_params.len(), self.disc_params.len())));
        }
        Ok(())
    }

    pub fn noise(&self, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.config.r).map(|_| rng.sample(StandardNormal)).collect()
    }

    fn raw(&self, noise: &[f64]) -> Vec<[f64; 2]> {
        self.config.gen_net().forward(&self.gen_params, noise).out
    }

    /// One trajectory of `m` points at `rate_hz`, in pixels.
    pub fn generate(&self, noise: &[f64]) -> Result<Trajectory> {
        if noise.len() != self.config.r {
            return Err(Error::InvalidInput(format!("noise has {} values, expected {}", noise.len(), self.config.r)));
        }
        let pts = self
            .raw(noise)
            .into_iter()
            .enumerate()
            .map(|(k, u)| {
                let (x, y) = self.norm.denormalize(u);
                Point::new(x, y, k as f64 / self.config.rate_hz)
            })
            .collect();
        Ok(Trajectory::new(pts)?.with_source(Some(Source::Gan)))
    }

    /// Probability that `traj` is human according to the discriminator.
    pub fn discriminate(&self, traj: &Trajectory) -> Result<f64> {
        let seq = self.norm.sequence(traj, self.config.m)?;
        Ok(self.config.disc_net().prob(&self.disc_params, &seq))
    }
}

/// Direction whose keypoint segment best matches the trajectory's endpoints.
pub fn nearest_direction(traj: &Trajectory, layout: &KeypointLayout) -> Direction {
    let (a, b) = (traj.first(), traj.last());
    Direction::all()
        .min_by(|&d, &e| {
            let cost = |dir: Direction| {
                let (s, t) = layout.segment(dir);
                (a.x - s.0).hypot(a.y - s.1) + (b.x - t.0).hypot(b.y - t.1)
            };
            cost(d).total_cmp(&cost(e))
        })
        .expect("eight directions")
}

/// Mean cross-entropy of the discriminator over labelled sequences and its
/// parameter gradient. Samples run in parallel; the sum is taken in order so
/// results do not depend on scheduling.
pub(crate) fn disc_loss_grad(net: &DiscNet, p: &[f64], seqs: &[&[[f64; 2]]], labels: &[bool]) -> (f64, Vec<f64>) {
    let n = seqs.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = seqs
        .par_iter()
        .zip(labels.par_iter())
        .map(|(seq, &y)| {
            let tr = net.forward(p, seq);
            let mut g = vec![0.0; p.len()];
            let dlogit = (sigmoid(tr.logit) - if y { 1.0 } else { 0.0 }) / n;
            net.backward(p, &tr, dlogit, &mut g);
            (bce_logit(tr.logit, y), g)
        })
        .collect();
    reduce(parts, p.len(), n)
}

/// Generator loss (fakes labelled human, discriminator frozen) and its
/// gradient with respect to the generator parameters only.
pub(crate) fn gen_loss_grad(gnet: &GenNet, gp: &[f64], dnet: &DiscNet, dp: &[f64], noises: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let n = noises.len() as f64;
    let parts: Vec<(f64, Vec<f64>)> = noises
        .par_iter()
        .map(|z| {
            let gt = gnet.forward(gp, z);
            let dt = dnet.forward(dp, &gt.out);
            let mut scratch = vec![0.0; dp.len()];
            let dseq = dnet.backward(dp, &dt, (sigmoid(dt.logit) - 1.0) / n, &mut scratch);
            let mut g = vec![0.0; gp.len()];
            gnet.backward(gp, &gt, &dseq, &mut g);
            (bce_logit(dt.logit, true), g)
        })
        .collect();
    reduce(parts, gp.len(), n)
}

fn reduce(parts: Vec<(f64, Vec<f64>)>, len: usize, n: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; len];
    let mut loss = 0.0;
    for (l, g) in parts {
        loss += l;
        grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
    }
    (loss / n, grad)
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Alternating adversarial training. Each iteration first updates the
/// generator against the current (frozen) discriminator, then updates the
/// discriminator on a real batch plus fresh fakes. A non-finite loss stops
/// training and returns the parameters from the end of the previous epoch.
pub fn train_gan(humans: &[Trajectory], cfg: &GanConfig) -> Result<GanBundle> {
    cfg.validate()?;
    if humans.len() < 2 * cfg.batch {
        return Err(Error::InvalidInput(format!("need at least {} human trajectories, got {}", 2 * cfg.batch, humans.len())));
    }
    let norm = Normalizer::fit(humans)?;
    let real: Vec<Vec<[f64; 2]>> = humans.iter().map(|t| norm.sequence(t, cfg.m)).collect::<Result<_>>()?;
    let mut bundle = GanBundle::init(cfg, norm)?;
    let (gnet, dnet) = (cfg.gen_net(), cfg.disc_net());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);
    let mut opt_g = Adam::new(cfg.adam(cfg.lr), bundle.gen_params.len());
    let mut opt_d = Adam::new(cfg.adam(cfg.lr), bundle.disc_params.len());
    let mut order: Vec<usize> = (0..real.len()).collect();
    for epoch in 0..cfg.epochs {
        let good = (bundle.gen_params.clone(), bundle.disc_params.clone());
        order.shuffle(&mut rng);
        let (mut g_sum, mut d_sum, mut iters) = (0.0, 0.0, 0usize);
        let mut failure = None;
        for chunk in order.chunks(cfg.batch) {
            let noises: Vec<Vec<f64>> = (0..chunk.len()).map(|_| bundle.noise(&mut rng)).collect();
            let (g_loss, g_grad) = gen_loss_grad(&gnet, &bundle.gen_params, &dnet, &bundle.disc_params, &noises);
            if !cfg.freeze_generator {
                opt_g.step(&mut bundle.gen_params, &g_grad);
            }
            let fakes: Vec<Vec<[f64; 2]>> = (0..chunk.len()).map(|_| bundle.raw(&bundle.noise(&mut rng))).collect();
            let mut seqs: Vec<&[[f64; 2]]> = chunk.iter().map(|&i| real[i].as_slice()).collect();
            seqs.extend(fakes.iter().map(|f| f.as_slice()));
            let labels: Vec<bool> = (0..seqs.len()).map(|k| k < chunk.len()).collect();
            let (d_loss, d_grad) = disc_loss_grad(&dnet, &bundle.disc_params, &seqs, &labels);
            opt_d.step(&mut bundle.disc_params, &d_grad);
            if !(g_loss.is_finite() && d_loss.is_finite() && finite(&bundle.gen_params) && finite(&bundle.disc_params)) {
                failure = Some(format!("non-finite loss (generator {g_loss}, discriminator {d_loss})"));
                break;
            }
            g_sum += g_loss;
            d_sum += d_loss;
            iters += 1;
        }
        if let Some(reason) = failure {
            log::warn!("GAN training diverged at epoch {epoch}: {reason}");
            (bundle.gen_params, bundle.disc_params) = good;
            bundle.status = TrainStatus::Diverged { epoch, reason };
            return Ok(bundle);
        }
        let e = EpochLoss { epoch, g_loss: g_sum / iters as f64, d_loss: d_sum / iters as f64 };
        log::debug!("epoch {epoch}: g {:.4} d {:.4}", e.g_loss, e.d_loss);
        bundle.history.push(e);
    }
    bundle.status = TrainStatus::Completed;
    Ok(bundle)
}

/// Detection metrics of the discriminator on labelled trajectories that it
/// never saw during training.
pub fn discriminator_as_detector(bundle: &GanBundle, trajs: &[Trajectory], humans: &[bool]) -> Result<Metrics> {
    if trajs.len() != humans.len() {
        return Err(Error::InvalidInput("trajectory and label counts differ".into()));
    }
    let scores: Vec<(f64, bool)> = trajs.iter().zip(humans).map(|(t, &h)| Ok((bundle.discriminate(t)?, h))).collect::<Result<_>>()?;
    evaluate(&scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub layers: Vec<usize>,
    pub m: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { layers: vec![32, 16], m: 50, lr: 2e-3, epochs: 30, batch: 32, seed: 0 }
    }
}

/// Discriminator-shaped network trained directly on labelled trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrentDetector {
    pub config: DetectorConfig,
    pub norm: Normalizer,
    pub params: Vec<f64>,
}

impl RecurrentDetector {
    fn net(&self) -> DiscNet {
        DiscNet { m: self.config.m, layers: self.config.layers.clone() }
    }

    pub fn predict_proba(&self, traj: &Trajectory) -> Result<f64> {
        let seq = self.norm.sequence(traj, self.config.m)?;
        Ok(self.net().prob(&self.params, &seq))
    }

    pub fn validate(&self) -> Result<()> {
        if self.config.m < 2 || self.config.layers.is_empty() || self.config.layers.contains(&0) {
            return Err(Error::Config("bad detector shape".into()));
        }
        if self.params.len() != self.net().len() {
            return Err(Error::Schema(format!("detector holds {} parameters, expected {}", self.params.len(), self.net().len())));
        }
        Ok(())
    }
}

pub fn train_recurrent_detector(trajs: &[Trajectory], humans: &[bool], cfg: &DetectorConfig) -> Result<RecurrentDetector> {
    if trajs.is_empty() || trajs.len() != humans.len() {
        return Err(Error::InvalidInput(format!("{} trajectories for {} labels", trajs.len(), humans.len())));
    }
    if !humans.iter().any(|&h| h) || humans.iter().all(|&h| h) {
        return Err(Error::InvalidInput("training set holds a single class".into()));
    }
    if cfg.m < 4 || cfg.batch == 0 || cfg.layers.is_empty() || cfg.layers.contains(&0) {
        return Err(Error::Config("detector needs m >= 4, a positive batch and non-empty layers".into()));
    }
    let norm = Normalizer::fit(trajs)?;
    let seqs: Vec<Vec<[f64; 2]>> = trajs.iter().map(|t| norm.sequence(t, cfg.m)).collect::<Result<_>>()?;
    let net = DiscNet { m: cfg.m, layers: cfg.layers.clone() };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = net.init(&mut rng);
    let mut opt = Adam::new(AdamConfig { lr: cfg.lr, ..Default::default() }, params.len());
    let mut order: Vec<usize> = (0..seqs.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch) {
            let xs: Vec<&[[f64; 2]]> = chunk.iter().map(|&i| seqs[i].as_slice()).collect();
            let ys: Vec<bool> = chunk.iter().map(|&i| humans[i]).collect();
            let (loss, grad) = disc_loss_grad(&net, &params, &xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("detector loss {loss} at epoch {epoch}")));
            }
            opt.step(&mut params, &grad);
        }
    }
    Ok(RecurrentDetector { config: cfg.clone(), norm, params })
}

/// Finite-difference checks of the analytic gradients on small pinned networks.
pub mod gradcheck {
    use super::*;

    fn rel(fd: f64, an: f64) -> f64 {
        (fd - an).abs() / fd.abs().max(an.abs()).max(1e-4)
    }

    fn worst(p: &[f64], analytic: &[f64], loss: impl Fn(&[f64]) -> f64) -> f64 {
        let h = 1e-6;
        let mut q = p.to_vec();
        (0..p.len())
            .map(|i| {
                q[i] = p[i] + h;
                let up = loss(&q);
                q[i] = p[i] - h;
                let down = loss(&q);
                q[i] = p[i];
                rel((up - down) / (2.0 * h), analytic[i])
            })
            .fold(0.0, f64::max)
    }

    fn toy(seed: u64) -> (GenNet, DiscNet, Vec<f64>, Vec<f64>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = GenNet { r: 3, m: 2, layers: vec![3, 3] };
        let d = DiscNet { m: 2, layers: vec![3, 3] };
        let mut gp = g.init(&mut rng);
        let mut dp = d.init(&mut rng);
        // move away from the zero readout so every path carries gradient
        for v in gp.iter_mut().chain(dp.iter_mut()) {
            *v += rng.random_range(-0.4..0.4);
        }
        (g, d, gp, dp, rng)
    }

    /// Generator parameters through the frozen discriminator.
    pub fn generator(seed: u64) -> f64 {
        let (g, d, gp, dp, mut rng) = toy(seed);
        let noises: Vec<Vec<f64>> = (0..3).map(|_| (0..3).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let (_, an) = gen_loss_grad(&g, &gp, &d, &dp, &noises);
        worst(&gp, &an, |q| gen_loss_grad(&g, q, &d, &dp, &noises).0)
    }

    fn labelled(rng: &mut ChaCha8Rng, m: usize) -> (Vec<Vec<[f64; 2]>>, Vec<bool>) {
        let seqs = (0..4).map(|_| (0..m).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect()).collect();
        (seqs, vec![true, false, true, false])
    }

    /// Discriminator parameters on a balanced toy batch.
    pub fn discriminator(seed: u64) -> f64 {
        let (_, d, _, dp, mut rng) = toy(seed);
        let (seqs, ys) = labelled(&mut rng, 2);
        let xs: Vec<&[[f64; 2]]> = seqs.iter().map(|s| s.as_slice()).collect();
        let (_, an) = disc_loss_grad(&d, &dp, &xs, &ys);
        worst(&dp, &an, |q| disc_loss_grad(&d, q, &xs, &ys).0)
    }

    /// Detector-sized network (two layers, four steps) on a supervised batch,
    /// including the gradient with respect to the input sequence.
    pub fn detector(seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = DiscNet { m: 4, layers: vec![3, 2] };
        let mut dp = d.init(&mut rng);
        for v in dp.iter_mut() {
            *v += rng.random_range(-0.4..0.4);
        }
        let (seqs, ys) = labelled(&mut rng, 4);
        let xs: Vec<&[[f64; 2]]> = seqs.iter().map(|s| s.as_slice()).collect();
        let (_, an) = disc_loss_grad(&d, &dp, &xs, &ys);
        let params = worst(&dp, &an, |q| disc_loss_grad(&d, q, &xs, &ys).0);
        let tr = d.forward(&dp, &seqs[0]);
        let mut scratch = vec![0.0; dp.len()];
        let dseq = d.backward(&dp, &tr, 1.0, &mut scratch);
        let flat: Vec<f64> = seqs[0].iter().flat_map(|p| [p[0], p[1]]).collect();
        let an_in: Vec<f64> = dseq.iter().flat_map(|p| [p[0], p[1]]).collect();
        let inputs = worst(&flat, &an_in, |q| {
            let s: Vec<[f64; 2]> = q.chunks(2).map(|c| [c[0], c[1]]).collect();
            d.forward(&dp, &s).logit
        });
        params.max(inputs)
    }

    /// Multi-layer perceptron on a five-row batch.
    pub fn mlp(seed: u64) -> f64 {
        use crate::classify::mlp::{Mlp, MlpConfig};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = MlpConfig { hidden: vec![5], ..Default::default() };
        let mut m = Mlp::init(3, &cfg, &mut rng).expect("valid toy shape");
        for v in m.params.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let xs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let ys = [true, false, false, true, true];
        let (_, an) = m.loss_and_grad(&m.params, &xs, &ys);
        worst(&m.params, &an, |q| m.loss_and_grad(q, &xs, &ys).0)
    }
}
