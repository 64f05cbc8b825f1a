//! Timestamped pointer trajectories and the kinematic quantities derived from them.
//!
//! Coordinates are pixels and time is seconds. A [`Trajectory`] always has its
//! first sample at `t = 0`; construction re-bases the timestamps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::{Direction, Source};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Point { x, y, t }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub direction: Option<Direction>,
    pub source: Option<Source>,
}

/// Ordered samples between two clicks.
///
/// Invariants: at least two points, finite coordinates, strictly increasing
/// time starting at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    points: Vec<Point>,
    #[serde(default)]
    meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn new(mut points: Vec<Point>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidTrajectory(format!("need at least 2 points, got {}", points.len())));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.t.is_finite()) {
                return Err(Error::InvalidTrajectory(format!("non-finite sample at index {i}")));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].t <= w[0].t {
                return Err(Error::InvalidTrajectory(format!("timestamps not strictly increasing at index {} ({} -> {})", i + 1, w[0].t, w[1].t)));
            }
        }
        let t0 = points[0].t;
        if t0 != 0.0 {
            for p in &mut points {
                p.t -= t0;
            }
        }
        Ok(Trajectory { points, meta: TrajectoryMeta::default() })
    }

    /// Builds from `(x, y, t)` triples.
    pub fn from_xyt(samples: &[(f64, f64, f64)]) -> Result<Self> {
        Self::new(samples.iter().map(|&(x, y, t)| Point::new(x, y, t)).collect())
    }

    pub fn with_direction(mut self, direction: Option<Direction>) -> Self {
        self.meta.direction = direction;
        self
    }

    pub fn with_source(mut self, source: Option<Source>) -> Self {
        self.meta.source = source;
        self
    }

    pub fn with_meta(mut self, meta: TrajectoryMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn meta(&self) -> &TrajectoryMeta {
        &self.meta
    }

    pub fn direction(&self) -> Option<Direction> {
        self.meta.direction
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    pub fn duration(&self) -> f64 {
        self.last().t - self.first().t
    }

    /// Linearly interpolated position at time `t`, clamped to the sampled span.
    pub fn position_at(&self, t: f64) -> (f64, f64) {
        let pts = &self.points;
        if t <= pts[0].t {
            return (pts[0].x, pts[0].y);
        }
        let last = pts[pts.len() - 1];
        if t >= last.t {
            return (last.x, last.y);
        }
        // first index with pts[i].t > t
        let i = pts.partition_point(|p| p.t <= t);
        lerp_point(&pts[i - 1], &pts[i], t)
    }
}

fn lerp_point(a: &Point, b: &Point, t: f64) -> (f64, f64) {
    let w = (t - a.t) / (b.t - a.t);
    (a.x + w * (b.x - a.x), a.y + w * (b.y - a.y))
}

/// Speed samples `(t, |v|)`; `v >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityProfile {
    times: Vec<f64>,
    speeds: Vec<f64>,
}

impl VelocityProfile {
    pub fn new(times: Vec<f64>, speeds: Vec<f64>) -> Result<Self> {
        if times.len() != speeds.len() {
            return Err(Error::InvalidInput(format!("{} times but {} speeds", times.len(), speeds.len())));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("velocity profile times must increase".into()));
        }
        if speeds.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("speeds must be finite and non-negative".into()));
        }
        Ok(VelocityProfile { times, speeds })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.speeds.iter().copied())
    }

    /// Same grid, every speed multiplied by `k`.
    pub fn scaled(&self, k: f64) -> VelocityProfile {
        VelocityProfile { times: self.times.clone(), speeds: self.speeds.iter().map(|v| v * k).collect() }
    }
}

/// Finite-difference speed of each segment, stamped at the segment midpoint.
pub fn velocity_profile(traj: &Trajectory) -> VelocityProfile {
    let (times, speeds) = traj
        .points()
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            let d = (w[1].x - w[0].x).hypot(w[1].y - w[0].y);
            (0.5 * (w[0].t + w[1].t), d / dt)
        })
        .unzip();
    VelocityProfile { times, speeds }
}

/// Piecewise-linear resampling onto a uniform grid at `rate_hz`.
///
/// The first and last samples are kept exactly. When the duration is not a
/// multiple of the period, the trailing partial interval is merged into the
/// last grid step if shorter than half a period, otherwise kept as its own
/// step, so the final interval always lies in `[0.5, 1.5]` periods.
pub fn resample(traj: &Trajectory, rate_hz: f64) -> Result<Trajectory> {
    if !(rate_hz > 0.0 && rate_hz.is_finite()) {
        return Err(Error::Config(format!("resample rate must be positive, got {rate_hz}")));
    }
    let duration = traj.duration();
    let period = 1.0 / rate_hz;
    let steps = (duration * rate_hz + 1e-9).floor() as usize;
    let remainder = duration - steps as f64 * period;
    let mut times: Vec<f64> = (0..=steps).map(|k| k as f64 * period).collect();
    if remainder > 0.5 * period {
        times.push(duration);
    } else if let Some(last) = times.last_mut() {
        *last = duration;
    }
    if times.len() < 2 {
        times = vec![0.0, duration];
    }
    sample_at(traj, &times)
}

/// Resamples to exactly `m` points spread uniformly over the trajectory's duration.
pub fn resample_to_len(traj: &Trajectory, m: usize) -> Result<Trajectory> {
    if m < 2 {
        return Err(Error::Config(format!("need at least 2 output points, got {m}")));
    }
    let duration = traj.duration();
    let times: Vec<f64> = (0..m).map(|k| if k + 1 == m { duration } else { duration * k as f64 / (m - 1) as f64 }).collect();
    sample_at(traj, &times)
}

fn sample_at(traj: &Trajectory, times: &[f64]) -> Result<Trajectory> {
    let pts = traj.points();
    let mut seg = 0usize;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while seg + 2 < pts.len() && pts[seg + 1].t < t {
            seg += 1;
        }
        let (x, y) = if t <= pts[0].t {
            (pts[0].x, pts[0].y)
        } else if t >= pts[pts.len() - 1].t {
            let p = pts[pts.len() - 1];
            (p.x, p.y)
        } else {
            lerp_point(&pts[seg], &pts[seg + 1], t)
        };
        out.push(Point::new(x, y, t));
    }
    Ok(Trajectory::new(out)?.with_meta(traj.meta().clone()))
}

/// Coarse path descriptors shared by the global feature set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub duration: f64,
    pub path_length: f64,
    pub displacement: f64,
    /// Arithmetic mean of the per-segment heading angles (radians).
    pub mean_angle: f64,
    pub mean_speed: f64,
}

pub fn path_stats(traj: &Trajectory) -> Result<PathStats> {
    let duration = traj.duration();
    if duration <= 0.0 {
        return Err(Error::InvalidTrajectory("zero duration".into()));
    }
    let pts = traj.points();
    let mut path_length = 0.0;
    let mut angle_sum = 0.0;
    for w in pts.windows(2) {
        let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
        path_length += dx.hypot(dy);
        angle_sum += dy.atan2(dx);
    }
    let (a, b) = (traj.first(), traj.last());
    Ok(PathStats {
        duration,
        path_length,
        displacement: (b.x - a.x).hypot(b.y - a.y),
        mean_angle: angle_sum / (pts.len() - 1) as f64,
        mean_speed: path_length / duration,
    })
}

/// True when the timestamps form a uniform grid (relative tolerance `tol`).
pub fn is_uniform(traj: &Trajectory, tol: f64) -> bool {
    let pts = traj.points();
    let dt0 = pts[1].t - pts[0].t;
    pts.windows(2).all(|w| ((w[1].t - w[0].t) - dt0).abs() <= tol * dt0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn traj(samples: &[(f64, f64, f64)]) -> Trajectory {
        Trajectory::from_xyt(samples).unwrap()
    }

    #[test]
    fn rebases_time() {
        let t = traj(&[(0.0, 0.0, 2.0), (1.0, 0.0, 2.5)]);
        assert_eq!(t.first().t, 0.0);
        assert_eq!(t.last().t, 0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Trajectory::from_xyt(&[(0.0, 0.0, 0.0)]).is_err());
        assert!(Trajectory::from_xyt(&[(0.0, 0.0, 0.0), (1.0, 1.0, 0.0)]).is_err());
        assert!(Trajectory::from_xyt(&[(0.0, 0.0, 0.1), (1.0, 1.0, 0.0)]).is_err());
        assert!(Trajectory::from_xyt(&[(f64::NAN, 0.0, 0.0), (1.0, 1.0, 1.0)]).is_err());
    }

    #[test]
    fn velocity_examples() {
        let vp = velocity_profile(&traj(&[(0.0, 0.0, 0.0), (3.0, 4.0, 1.0)]));
        assert_eq!(vp.samples().collect::<Vec<_>>(), vec![(0.5, 5.0)]);

        let vp = velocity_profile(&traj(&[(0.0, 0.0, 0.0), (0.0, 0.0, 0.1), (0.0, 0.0, 0.2)]));
        let s: Vec<_> = vp.samples().collect();
        assert!((s[0].0 - 0.05).abs() < 1e-12 && s[0].1 == 0.0);
        assert!((s[1].0 - 0.15).abs() < 1e-12 && s[1].1 == 0.0);

        let vp = velocity_profile(&traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 0.1), (3.0, 0.0, 0.2)]));
        let s: Vec<_> = vp.samples().collect();
        assert!((s[0].1 - 10.0).abs() < 1e-9);
        assert!((s[1].1 - 20.0).abs() < 1e-9);
    }

    #[test]
    fn resample_line_at_5hz() {
        let r = resample(&traj(&[(0.0, 0.0, 0.0), (10.0, 0.0, 1.0)]), 5.0).unwrap();
        let xs: Vec<f64> = r.points().iter().map(|p| p.x).collect();
        assert_eq!(xs.len(), 6);
        for (x, e) in xs.iter().zip([0.0, 2.0, 4.0, 6.0, 8.0, 10.0]) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn resample_l_path() {
        let r = resample(&traj(&[(0.0, 0.0, 0.0), (4.0, 0.0, 0.5), (4.0, 3.0, 1.0)]), 4.0).unwrap();
        let p = r.points()[1];
        assert!((p.t - 0.25).abs() < 1e-12);
        assert!((p.x - 2.0).abs() < 1e-12 && p.y.abs() < 1e-12);
        assert_eq!(r.len(), 5);
    }

    #[test]
    fn resample_rejects_bad_rate() {
        let t = traj(&[(0.0, 0.0, 0.0), (1.0, 0.0, 1.0)]);
        assert!(matches!(resample(&t, 0.0), Err(Error::Config(_))));
        assert!(matches!(resample(&t, -3.0), Err(Error::Config(_))));
    }

    #[test]
    fn resample_partial_tail() {
        let t = traj(&[(0.0, 0.0, 0.0), (10.0, 0.0, 1.03)]);
        let r = resample(&t, 5.0).unwrap();
        assert_eq!(r.len(), 6);
        assert_eq!(r.last().t, 1.03);
        let t = traj(&[(0.0, 0.0, 0.0), (10.0, 0.0, 1.15)]);
        let r = resample(&t, 5.0).unwrap();
        assert_eq!(r.len(), 7);
        assert_eq!(r.last().x, 10.0);
    }

    #[test]
    fn path_stats_examples() {
        let s = path_stats(&traj(&[(0.0, 0.0, 0.0), (3.0, 4.0, 1.0)])).unwrap();
        assert_eq!((s.duration, s.path_length, s.displacement, s.mean_speed), (1.0, 5.0, 5.0, 5.0));

        let s = path_stats(&traj(&[(0.0, 0.0, 0.0), (3.0, 0.0, 1.0), (3.0, 4.0, 2.0)])).unwrap();
        assert_eq!((s.duration, s.path_length, s.displacement, s.mean_speed), (2.0, 7.0, 5.0, 3.5));
        assert!((s.mean_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);

        let s = path_stats(&traj(&[(0.0, 0.0, 0.0), (5.0, 0.0, 1.0), (5.0, 5.0, 2.0), (0.0, 0.0, 3.0)])).unwrap();
        assert_eq!(s.displacement, 0.0);
    }

    #[test]
    fn constant_speed_profile_is_flat() {
        let pts: Vec<(f64, f64, f64)> = (0..200).map(|k| (k as f64 * 3.0, k as f64 * 4.0, k as f64 * 0.005)).collect();
        let vp = velocity_profile(&traj(&pts));
        let n = vp.len() as f64;
        let mean = vp.speeds().iter().sum::<f64>() / n;
        let var = vp.speeds().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(var.sqrt() / mean < 1e-6);
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        prop::collection::vec((-500.0..500.0f64, -500.0..500.0f64, 0.001..0.05f64), 2..60).prop_map(|steps| {
            let mut t = 0.0;
            let pts = steps
                .into_iter()
                .map(|(x, y, dt)| {
                    t += dt;
                    Point::new(x, y, t)
                })
                .collect();
            Trajectory::new(pts).unwrap()
        })
    }

    proptest! {
        #[test]
        fn displacement_bounded_by_path(t in arb_traj()) {
            let s = path_stats(&t).unwrap();
            prop_assert!(s.displacement <= s.path_length + 1e-9);
        }

        #[test]
        fn resample_keeps_endpoints_and_span(t in arb_traj(), rate in 5.0..400.0f64) {
            let r = resample(&t, rate).unwrap();
            let (a, b) = (t.first(), t.last());
            prop_assert!((r.first().x - a.x).abs() <= 1e-9 && (r.first().y - a.y).abs() <= 1e-9);
            prop_assert!((r.last().x - b.x).abs() <= 1e-9 && (r.last().y - b.y).abs() <= 1e-9);
            prop_assert!(r.points().iter().all(|p| p.t >= 0.0 && p.t <= t.duration()));
        }

        #[test]
        fn resample_idempotent_on_uniform(n in 3usize..80, rate in 10.0..500.0f64) {
            let pts: Vec<Point> = (0..n).map(|k| Point::new((k as f64).sin() * 50.0, k as f64, k as f64 / rate)).collect();
            let t = Trajectory::new(pts).unwrap();
            let r = resample(&t, rate).unwrap();
            prop_assert_eq!(r.len(), t.len());
            for (p, q) in r.points().iter().zip(t.points()) {
                prop_assert!((p.x - q.x).abs() < 1e-9 && (p.y - q.y).abs() < 1e-9 && (p.t - q.t).abs() < 1e-9);
            }
        }
    }
}
