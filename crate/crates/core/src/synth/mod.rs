//! Function-based synthetic trajectories.
//!
//! A bot movement is built from a path shape (linear, quadratic or
//! exponential) and a spacing law for the abscissae that fixes how the
//! speed evolves. Timestamps are uniform, so the spacing law alone shapes the
//! velocity profile. Movements steeper than 45 degrees are built with the
//! axes swapped so the shape stays single-valued.

mod shape;
mod spacing;
pub(crate) mod stats;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{Direction, ShapeKind, Source, VpKind};
use crate::trajectory::{Point, Trajectory};

pub use shape::{Frame, ShapeParam, ShapeSpec};
pub use spacing::{VelocityKind, VelocityParams};
pub use stats::{
    estimate_direction_stats, estimate_shape_ranges, sample_point_count, CoefficientRanges, DirectionStats, ParamRange, PointCount, ShapeRanges, MIN_POINTS,
};

/// Screen positions of the eight click targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointLayout {
    pub keypoints: [(f64, f64); 8],
}

impl Default for KeypointLayout {
    fn default() -> Self {
        KeypointLayout {
            keypoints: [(200.0, 600.0), (1000.0, 600.0), (1000.0, 150.0), (600.0, 400.0), (200.0, 150.0), (600.0, 700.0), (450.0, 700.0), (300.0, 650.0)],
        }
    }
}

impl KeypointLayout {
    pub fn segment(&self, direction: Direction) -> ((f64, f64), (f64, f64)) {
        let (a, b) = direction.endpoints();
        (self.keypoints[a as usize - 1], self.keypoints[b as usize - 1])
    }
}

/// Everything the function-based generator needs; serialises to the JSON
/// config file read by the command line tool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub rate_hz: f64,
    pub layout: KeypointLayout,
    /// Standard deviation (px) of the click position around each keypoint.
    pub endpoint_jitter_px: f64,
    pub stats: DirectionStats,
    pub shapes: ShapeRanges,
    pub velocity: VelocityParams,
    /// Coefficients that may be held fixed; one is picked per trajectory.
    pub fixed_params: Vec<ShapeParam>,
    /// Largest allowed deviation from the straight chord, as a fraction of its length.
    pub max_excursion: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            rate_hz: 200.0,
            layout: KeypointLayout::default(),
            endpoint_jitter_px: 5.0,
            stats: DirectionStats::default(),
            shapes: ShapeRanges::default(),
            velocity: VelocityParams::default(),
            fixed_params: ShapeParam::ALL.to_vec(),
            max_excursion: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(Error::Config(format!("rate_hz must be positive, got {}", self.rate_hz)));
        }
        if !(self.endpoint_jitter_px >= 0.0) || !(self.max_excursion > 0.0) {
            return Err(Error::Config("endpoint_jitter_px must be >= 0 and max_excursion > 0".into()));
        }
        if self.fixed_params.is_empty() {
            return Err(Error::Config("fixed_params must name at least one coefficient".into()));
        }
        self.stats.validate()
    }
}

/// Builds an `m`-point movement from `start` to `end`.
///
/// `shape` is expressed in the movement frame of the segment
/// ([`Frame::for_segment`]) and must pass through both endpoints there.
/// Abscissae follow `vp`; timestamps are uniform at `rate_hz`.
pub fn synth_trajectory(shape: &ShapeSpec, vp: &VelocityKind, start: (f64, f64), end: (f64, f64), m: usize, rate_hz: f64) -> Result<Trajectory> {
    if m < MIN_POINTS {
        return Err(Error::Config(format!("need at least {MIN_POINTS} points, got {m}")));
    }
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::Config(format!("rate_hz must be positive, got {rate_hz}")));
    }
    if start == end {
        return Err(Error::ParameterRange("start and end coincide".into()));
    }
    let frame = Frame::for_segment(start, end);
    let (p, q) = (frame.to_frame(start), frame.to_frame(end));
    let scale = 1.0 + p.1.abs().max(q.1.abs());
    for (u, v) in [p, q] {
        if !((shape.eval(u) - v).abs() <= 1e-6 * scale) {
            return Err(Error::ParameterRange(format!("shape {shape:?} misses endpoint ({u}, {v}) in the movement frame")));
        }
    }
    let us = vp.abscissae(p.0, q.0, m)?;
    let pts: Vec<Point> = us
        .iter()
        .enumerate()
        .map(|(j, &u)| {
            let v = if j == 0 {
                p.1
            } else if j + 1 == m {
                q.1
            } else {
                shape.eval(u)
            };
            let (x, y) = frame.to_screen((u, v));
            Point::new(x, y, j as f64 / rate_hz)
        })
        .collect();
    Trajectory::new(pts).map(|t| t.with_source(Some(Source::Function)))
}

/// Largest distance of the curve from the chord between its endpoints,
/// checked on a fixed grid.
fn excursion(shape: &ShapeSpec, p: (f64, f64), q: (f64, f64)) -> f64 {
    let (du, dv) = (q.0 - p.0, q.1 - p.1);
    let len = du.hypot(dv);
    (0..=64)
        .map(|k| {
            let u = p.0 + du * k as f64 / 64.0;
            let v = shape.eval(u);
            ((u - p.0) * dv - (v - p.1) * du).abs() / len
        })
        .fold(0.0, f64::max)
}

/// Picks a shape of the given family through `p` and `q` (movement frame):
/// one coefficient drawn from its range, the other two fitted. Draws that
/// cannot be fitted or stray further than `max_excursion` from the chord are
/// redrawn; after 32 failures a mild curve with a fixed rate is used.
pub fn draw_shape<R: Rng + ?Sized>(kind: ShapeKind, p: (f64, f64), q: (f64, f64), cfg: &SynthConfig, rng: &mut R) -> Result<ShapeSpec> {
    if kind == ShapeKind::Linear {
        return ShapeSpec::line_through(p, q);
    }
    let limit = cfg.max_excursion * (q.0 - p.0).hypot(q.1 - p.1);
    let ranges = cfg.shapes.get(kind);
    for _ in 0..32 {
        let param = cfg.fixed_params[rng.random_range(0..cfg.fixed_params.len())];
        let value = ranges.get(param).sample(rng);
        if let Ok(s) = ShapeSpec::fit(kind, param, value, p, q) {
            if excursion(&s, p, q) <= limit {
                return Ok(s);
            }
        }
    }
    let du = q.0 - p.0;
    let value = match kind {
        ShapeKind::Quadratic => 0.5 * ranges.a.lo.abs().max(ranges.a.hi.abs()).min(1.0 / du.abs()),
        _ => 1.0 / du.abs(),
    };
    log::debug!("shape draw fell back to a = {value}");
    ShapeSpec::fit(kind, ShapeParam::A, value, p, q)
}

/// One function-based bot movement for `direction`: jittered keypoints as
/// endpoints, a point count from the direction statistics, a drawn shape and
/// the requested spacing law.
pub fn generate_function_bot<R: Rng + ?Sized>(shape: ShapeKind, vp: VpKind, direction: Direction, cfg: &SynthConfig, rng: &mut R) -> Result<Trajectory> {
    let (a, b) = cfg.layout.segment(direction);
    let (start, end) = (jitter(a, cfg.endpoint_jitter_px, rng)?, jitter(b, cfg.endpoint_jitter_px, rng)?);
    let m = sample_point_count(&cfg.stats, direction, rng)?;
    let frame = Frame::for_segment(start, end);
    let spec = draw_shape(shape, frame.to_frame(start), frame.to_frame(end), cfg, rng)?;
    let traj = synth_trajectory(&spec, &cfg.velocity.kind(vp), start, end, m, cfg.rate_hz)?;
    Ok(traj.with_direction(Some(direction)))
}

pub(crate) fn jitter<R: Rng + ?Sized>(p: (f64, f64), sd: f64, rng: &mut R) -> Result<(f64, f64)> {
    if sd == 0.0 {
        return Ok(p);
    }
    let n = Normal::new(0.0, sd).map_err(|e| Error::Config(e.to_string()))?;
    Ok((p.0 + n.sample(rng), p.1 + n.sample(rng)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn equidistant_line() {
        let line = ShapeSpec::line_through((0.0, 0.0), (10.0, 0.0)).unwrap();
        let t = synth_trajectory(&line, &VelocityKind::Constant, (0.0, 0.0), (10.0, 0.0), 11, 200.0).unwrap();
        for (k, p) in t.points().iter().enumerate() {
            assert!((p.x - k as f64).abs() < 1e-12 && p.y == 0.0);
            assert!((p.t - k as f64 / 200.0).abs() < 1e-15);
        }
    }

    #[test]
    fn steep_segments_run_in_the_swapped_frame() {
        let (s, e) = ((1000.0, 600.0), (1000.0, 150.0));
        let f = Frame::for_segment(s, e);
        assert!(f.swapped);
        let (p, q) = (f.to_frame(s), f.to_frame(e));
        let shape = ShapeSpec::fit(ShapeKind::Quadratic, ShapeParam::A, 1e-3, p, q).unwrap();
        let t = synth_trajectory(&shape, &VelocityKind::Constant, s, e, 30, 200.0).unwrap();
        assert_eq!((t.first().x, t.first().y), s);
        assert_eq!((t.last().x, t.last().y), e);
        // y carries the equal steps
        let dy: Vec<f64> = t.points().windows(2).map(|w| w[1].y - w[0].y).collect();
        assert!(dy.iter().all(|d| (d - dy[0]).abs() < 1e-9 * dy[0].abs()));
        assert!(t.points().iter().any(|p| (p.x - 1000.0).abs() > 1.0));
    }

    #[test]
    fn shape_must_reach_endpoints() {
        let wrong = ShapeSpec { kind: ShapeKind::Linear, a: 0.0, b: 1.0, c: 5.0 };
        let e = synth_trajectory(&wrong, &VelocityKind::Constant, (0.0, 0.0), (10.0, 0.0), 5, 200.0);
        assert!(matches!(e, Err(Error::ParameterRange(_))));
        let line = ShapeSpec::line_through((0.0, 0.0), (10.0, 0.0)).unwrap();
        assert!(synth_trajectory(&line, &VelocityKind::Constant, (0.0, 0.0), (10.0, 0.0), 3, 200.0).is_err());
    }

    #[test]
    fn all_nine_combinations_for_all_directions() {
        let cfg = SynthConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for shape in ShapeKind::ALL {
            for vp in VpKind::ALL {
                for d in Direction::all() {
                    for _ in 0..5 {
                        let t = generate_function_bot(shape, vp, d, &cfg, &mut rng).unwrap();
                        assert!(t.len() >= MIN_POINTS);
                        assert_eq!(t.direction(), Some(d));
                        let (a, b) = cfg.layout.segment(d);
                        let (f, l) = (t.first(), t.last());
                        assert!((f.x - a.0).hypot(f.y - a.1) < 40.0 && (l.x - b.0).hypot(l.y - b.1) < 40.0);
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_output() {
        let cfg = SynthConfig::default();
        let d = Direction::new(3).unwrap();
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            generate_function_bot(ShapeKind::Exponential, VpKind::Gaussian, d, &cfg, &mut rng).unwrap()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SynthConfig::default();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: SynthConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);
        let partial: SynthConfig = serde_json::from_str(r#"{"rate_hz": 100.0}"#).unwrap();
        assert_eq!(partial.rate_hz, 100.0);
        assert_eq!(partial.layout, KeypointLayout::default());
    }
}
