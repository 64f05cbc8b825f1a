use std::f64::consts::PI;

use super::smooth::{window_len, zero_phase_average};
use super::LognormalStroke;
use crate::error::{Error, Result};
use crate::trajectory::{Point, Trajectory};

const DEFAULT_SMOOTHING_S: f64 = 0.025;
const SUPPORT_LEVEL: f64 = 0.01;

pub(crate) fn smooth_trajectory(traj: &Trajectory, window_s: f64) -> Result<Trajectory> {
    let pts = traj.points();
    let dt = traj.duration() / (pts.len() - 1) as f64;
    let w = window_len(window_s, dt);
    let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
    let (xs, ys) = (zero_phase_average(&xs, w), zero_phase_average(&ys, w));
    let smoothed = pts.iter().zip(xs.into_iter().zip(ys)).map(|(p, (x, y))| Point::new(x, y, p.t)).collect();
    Ok(Trajectory::new(smoothed)?.with_meta(traj.meta().clone()))
}

/// Path heading where the stroke starts and ends.
///
/// The stroke's support is taken as the interval where its speed exceeds 1% of
/// its peak, clipped to the trajectory. Headings are tangents of the
/// low-passed path at the two ends of that interval.
pub fn stroke_angles(traj: &Trajectory, s: &LognormalStroke) -> Result<(f64, f64)> {
    let smoothed = smooth_trajectory(traj, DEFAULT_SMOOTHING_S)?;
    stroke_angles_smoothed(&smoothed, s)
}

/// As [`stroke_angles`] on a path that is already smoothed.
pub fn stroke_angles_smoothed(traj: &Trajectory, s: &LognormalStroke) -> Result<(f64, f64)> {
    if !s.is_valid() {
        return Err(Error::AngleUndefined("invalid stroke parameters".into()));
    }
    let (start, end) = s.level_times(SUPPORT_LEVEL);
    let span = traj.duration();
    if end < 0.0 || start > span {
        return Err(Error::AngleUndefined(format!("stroke support [{start:.4}, {end:.4}] s lies outside the trajectory [0, {span:.4}] s")));
    }
    let step = (span / (traj.len() - 1) as f64).max(1e-4);
    Ok((tangent_at(traj, start.clamp(0.0, span), step), tangent_at(traj, end.clamp(0.0, span), step)))
}

/// Heading of the chord spanning `t +/- h`, widening `h` over stationary stretches.
fn tangent_at(traj: &Trajectory, t: f64, step: f64) -> f64 {
    let span = traj.duration();
    let mut h = step;
    loop {
        let (xa, ya) = traj.position_at((t - h).max(0.0));
        let (xb, yb) = traj.position_at((t + h).min(span));
        let (dx, dy) = (xb - xa, yb - ya);
        if dx.hypot(dy) > 1e-9 {
            return wrap_angle(dy.atan2(dx));
        }
        if h >= span {
            return 0.0;
        }
        h *= 2.0;
    }
}

/// Maps an angle into `(-pi, pi]`.
pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}
