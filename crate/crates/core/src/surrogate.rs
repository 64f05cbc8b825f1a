//! Human-like stand-ins for recorded movements.
//!
//! Real recordings are not bundled, so experiments run on surrogates: a few
//! overlapping lognormal strokes, each turning smoothly from its start heading
//! to its end heading, integrated into a path. A large first stroke covers
//! most of the distance and smaller late strokes act as corrections. The path
//! is finally rotated and scaled about its start so it ends on the target.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lognormal::LognormalStroke;
use crate::synth::{jitter, KeypointLayout};
use crate::tags::{Direction, Source};
use crate::trajectory::{Point, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub rate_hz: f64,
    pub layout: KeypointLayout,
    pub endpoint_jitter_px: f64,
    pub min_strokes: usize,
    pub max_strokes: usize,
    pub mu: (f64, f64),
    pub sigma: (f64, f64),
    /// Share of the total amplitude carried by the first stroke.
    pub primary_share: (f64, f64),
    /// Gap between consecutive onsets (s).
    pub onset_gap: (f64, f64),
    /// Spread (rad) of stroke headings around the target bearing.
    pub heading_sd: f64,
    /// Spread (rad) of the turn within one stroke.
    pub turn_sd: f64,
    /// Slope of the log-time delay against `ln(distance / 500 px)`, so that
    /// longer movements take longer.
    pub distance_slope: f64,
    /// Integration sub-steps per output sample.
    pub substeps: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            rate_hz: 200.0,
            layout: KeypointLayout::default(),
            endpoint_jitter_px: 5.0,
            min_strokes: 3,
            max_strokes: 6,
            mu: (-1.9, -1.2),
            sigma: (0.15, 0.4),
            primary_share: (0.55, 0.8),
            onset_gap: (0.1, 0.3),
            heading_sd: 0.25,
            turn_sd: 0.35,
            distance_slope: 0.3,
            substeps: 5,
        }
    }
}

impl SurrogateConfig {
    fn validate(&self) -> Result<()> {
        let ordered = |r: (f64, f64)| r.0 <= r.1 && r.0.is_finite() && r.1.is_finite();
        if self.min_strokes == 0 || self.min_strokes > self.max_strokes {
            return Err(Error::Config("stroke count range must satisfy 1 <= min <= max".into()));
        }
        if !(ordered(self.mu) && ordered(self.sigma) && ordered(self.primary_share) && ordered(self.onset_gap)) {
            return Err(Error::Config("surrogate ranges must be finite and ordered".into()));
        }
        if !(self.sigma.0 > 0.0 && self.primary_share.0 > 0.0 && self.primary_share.1 <= 1.0 && self.onset_gap.0 >= 0.0) {
            return Err(Error::Config("sigma > 0, primary share in (0, 1] and onset gap >= 0 required".into()));
        }
        if !(self.rate_hz > 0.0) || self.substeps == 0 || !(self.heading_sd >= 0.0) || !(self.turn_sd >= 0.0) || !self.distance_slope.is_finite() {
            return Err(Error::Config("rate, substeps and angular spreads must be positive".into()));
        }
        Ok(())
    }
}

/// A stroke together with the heading it sweeps.
#[derive(Debug, Clone, Copy)]
struct Turn {
    stroke: LognormalStroke,
    from: f64,
    to: f64,
}

impl Turn {
    /// Fraction of the stroke's distance covered by time `t` (lognormal CDF).
    fn progress(&self, t: f64) -> f64 {
        let dt = t - self.stroke.t0;
        if dt <= 0.0 {
            return 0.0;
        }
        0.5 * libm::erfc(-(dt.ln() - self.stroke.mu) / (self.stroke.sigma * std::f64::consts::SQRT_2))
    }

    fn velocity(&self, t: f64) -> (f64, f64) {
        let v = self.stroke.velocity(t);
        let heading = self.from + (self.to - self.from) * self.progress(t);
        (v * heading.cos(), v * heading.sin())
    }
}

/// One surrogate human movement along `direction`.
pub fn human_surrogate<R: Rng + ?Sized>(direction: Direction, cfg: &SurrogateConfig, rng: &mut R) -> Result<Trajectory> {
    cfg.validate()?;
    let (a, b) = cfg.layout.segment(direction);
    let start = jitter(a, cfg.endpoint_jitter_px, rng)?;
    let end = jitter(b, cfg.endpoint_jitter_px, rng)?;
    let (dx, dy) = (end.0 - start.0, end.1 - start.1);
    let chord = dx.hypot(dy);
    if !(chord > 0.0) {
        return Err(Error::ParameterRange("start and end coincide".into()));
    }
    let bearing = dy.atan2(dx);
    let heading = Normal::new(0.0, cfg.heading_sd.max(1e-12)).map_err(|e| Error::Config(e.to_string()))?;
    let turn = Normal::new(0.0, cfg.turn_sd.max(1e-12)).map_err(|e| Error::Config(e.to_string()))?;
    let uniform = |r: (f64, f64), rng: &mut R| if r.1 > r.0 { rng.random_range(r.0..r.1) } else { r.0 };
    let mu_shift = cfg.distance_slope * (chord / 500.0).ln();

    for _ in 0..16 {
        let n = rng.random_range(cfg.min_strokes..=cfg.max_strokes);
        let total = chord * uniform((1.0, 1.1), rng);
        let primary = uniform(cfg.primary_share, rng);
        // remaining amplitude shared by the corrections, decaying roughly geometrically
        let raw: Vec<f64> = (1..n).map(|k| 0.6f64.powi(k as i32 - 1) * uniform((0.5, 1.5), rng)).collect();
        let raw_sum: f64 = raw.iter().sum::<f64>().max(f64::MIN_POSITIVE);

        let mut turns = Vec::with_capacity(n);
        let mut t0 = uniform((0.0, 0.03), rng);
        for k in 0..n {
            let d = if k == 0 { total * primary } else { total * (1.0 - primary) * raw[k - 1] / raw_sum };
            let stroke = LognormalStroke::new(d, t0, mu_shift + uniform(cfg.mu, rng), uniform(cfg.sigma, rng));
            // corrections may point anywhere near the target bearing, including back
            let spread = if k == 0 { 1.0 } else { 2.0 };
            let from = bearing + spread * heading.sample(rng);
            turns.push(Turn { stroke, from, to: from + turn.sample(rng) });
            t0 += uniform(cfg.onset_gap, rng);
        }
        let end_t = turns.iter().map(|t| t.stroke.level_times(0.01).1).fold(0.0, f64::max);
        let points = integrate(&turns, end_t, cfg.rate_hz, cfg.substeps);
        let last = points[points.len() - 1];
        let (ex, ey) = (last.0, last.1);
        let reach = ex.hypot(ey);
        if reach < 0.5 * chord {
            continue;
        }
        // similarity map taking the integrated end onto the target
        let scale = chord / reach;
        let rot = bearing - ey.atan2(ex);
        let (c, s) = (rot.cos() * scale, rot.sin() * scale);
        let mut pts: Vec<Point> =
            points.iter().enumerate().map(|(k, &(x, y))| Point::new(start.0 + c * x - s * y, start.1 + s * x + c * y, k as f64 / cfg.rate_hz)).collect();
        let tail = pts.len() - 1;
        pts[tail].x = end.0;
        pts[tail].y = end.1;
        return Ok(Trajectory::new(pts)?.with_direction(Some(direction)).with_source(Some(Source::Human)));
    }
    Err(Error::Numeric("surrogate strokes kept cancelling out".into()))
}

/// Positions relative to the start on the output grid, integrating the
/// velocity with the trapezoid rule on `substeps` sub-intervals per sample.
fn integrate(turns: &[Turn], end_t: f64, rate_hz: f64, substeps: usize) -> Vec<(f64, f64)> {
    let samples = (end_t * rate_hz).ceil().max(3.0) as usize;
    let h = 1.0 / (rate_hz * substeps as f64);
    let vel = |t: f64| {
        turns.iter().fold((0.0, 0.0), |acc, tr| {
            let v = tr.velocity(t);
            (acc.0 + v.0, acc.1 + v.1)
        })
    };
    let mut out = Vec::with_capacity(samples + 1);
    out.push((0.0, 0.0));
    let (mut x, mut y) = (0.0, 0.0);
    let mut prev = vel(0.0);
    for k in 0..samples * substeps {
        let t = (k + 1) as f64 * h;
        let cur = vel(t);
        x += 0.5 * h * (prev.0 + cur.0);
        y += 0.5 * h * (prev.1 + cur.1);
        prev = cur;
        if (k + 1) % substeps == 0 {
            out.push((x, y));
        }
    }
    out
}

/// `n` surrogates spread evenly over the eight directions.
pub fn human_corpus<R: Rng + ?Sized>(n: usize, cfg: &SurrogateConfig, rng: &mut R) -> Result<Vec<Trajectory>> {
    let dirs: Vec<Direction> = Direction::all().collect();
    (0..n).map(|i| human_surrogate(dirs[i % dirs.len()], cfg, rng)).collect()
}
