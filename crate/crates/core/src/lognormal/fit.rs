//! Iterative stroke extraction.
//!
//! Each round locates the highest peak of the low-passed residual, derives a
//! starting stroke from the characteristic points around it, refines that
//! stroke against the unfiltered residual inside a window around the peak,
//! then re-fits all accepted strokes together. If no starting point at the
//! highest peak gains `min_gain_db`, the next residual peaks are tried; when
//! all of them fail the round is dropped and extraction stops.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::angles::{smooth_trajectory, stroke_angles_smoothed};
use super::smooth::{window_len, zero_phase_average};
use super::solver::refine;
use super::{snr_slices, stroke_velocity, Decomposition, FitQuality, LognormalStroke};
use crate::error::{Error, Result};
use crate::trajectory::{resample, velocity_profile, Trajectory, VelocityProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub target_snr_db: f64,
    pub max_strokes: usize,
    /// Minimum SNR improvement (dB) for a new stroke to be kept.
    pub min_gain_db: f64,
    /// Low-pass window used for peak detection and initialisation.
    pub smoothing_ms: f64,
    /// Iteration cap of the per-stroke refinement.
    pub max_iterations: usize,
    /// Re-fit all strokes jointly after each accepted one.
    pub joint_refine: bool,
    pub joint_iterations: usize,
    /// Grid used by [`decompose_trajectory`] before differentiating.
    pub resample_hz: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            target_snr_db: 25.0,
            max_strokes: 20,
            min_gain_db: 0.5,
            smoothing_ms: 25.0,
            max_iterations: 50,
            joint_refine: true,
            joint_iterations: 50,
            resample_hz: 200.0,
        }
    }
}

impl FitConfig {
    fn validate(&self) -> Result<()> {
        if self.max_strokes == 0 {
            return Err(Error::Config("max_strokes must be at least 1".into()));
        }
        if !(self.smoothing_ms >= 0.0) || !(self.resample_hz > 0.0) {
            return Err(Error::Config("smoothing_ms must be >= 0 and resample_hz > 0".into()));
        }
        Ok(())
    }
}

pub const MIN_SAMPLES: usize = 8;

/// Extracts lognormal strokes from a speed profile. Angles are left at zero;
/// [`decompose_trajectory`] fills them from the path.
pub fn decompose(vp: &VelocityProfile, cfg: &FitConfig) -> Result<Decomposition> {
    cfg.validate()?;
    let times = vp.times();
    let speeds = vp.speeds();
    let n = speeds.len();
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("velocity profile needs at least {MIN_SAMPLES} samples, got {n}")));
    }
    let span = times[n - 1] - times[0];
    if !(span > 0.0) {
        return Err(Error::InvalidInput("velocity profile has zero duration".into()));
    }
    let energy: f64 = speeds.iter().map(|v| v * v).sum();
    if energy == 0.0 {
        return Ok(Decomposition { strokes: Vec::new(), snr_db: 0.0, residual: speeds.to_vec(), quality: FitQuality::default() });
    }

    let dt = span / (n - 1) as f64;
    let smoothed = zero_phase_average(speeds, window_len(cfg.smoothing_ms / 1000.0, dt));
    let global_peak = smoothed.iter().cloned().fold(0.0, f64::max);

    let mut strokes: Vec<LognormalStroke> = Vec::new();
    let mut model = vec![0.0; n];
    let mut current_snr = 0.0;
    let mut quality = FitQuality::default();
    let mut detect = vec![0.0; n];
    let mut raw_residual = vec![0.0; n];

    while strokes.len() < cfg.max_strokes && current_snr < cfg.target_snr_db {
        for i in 0..n {
            detect[i] = smoothed[i] - model[i];
            raw_residual[i] = speeds[i] - model[i];
        }
        let peaks = residual_peaks(&detect, 1e-6 * global_peak);
        if peaks.is_empty() {
            break;
        }
        // Try the highest residual peak first. If none of its candidates
        // pays off, fall back to the next peaks before giving up.
        let mut accepted = None;
        'peaks: for &peak in peaks.iter().take(PEAK_ATTEMPTS) {
            let (lo, hi) = fit_window(&detect, peak);
            let mut fitted: Vec<(LognormalStroke, f64)> = Vec::new();
            for cand in initial_estimates(times, &detect, peak, lo, hi) {
                let mut one = [cand];
                let report = refine(&mut one, &times[lo..=hi], &raw_residual[lo..=hi], cfg.max_iterations);
                if !report.sse.is_finite() {
                    continue;
                }
                if !report.converged {
                    quality.unconverged += 1;
                }
                fitted.push((one[0], report.sse));
            }
            fitted.sort_by(|a, b| a.1.total_cmp(&b.1));
            for (stroke, _) in fitted {
                let mut trial = strokes.clone();
                trial.push(stroke);
                if cfg.joint_refine && trial.len() > 1 {
                    refine(&mut trial, times, speeds, cfg.joint_iterations);
                }
                let trial_model = evaluate(&trial, times);
                let trial_snr = snr_slices(speeds, &trial_model);
                if trial_snr - current_snr >= cfg.min_gain_db {
                    accepted = Some((trial, trial_model, trial_snr));
                    break 'peaks;
                }
            }
        }
        let Some((trial, trial_model, trial_snr)) = accepted else {
            quality.discarded += 1;
            break;
        };
        strokes = trial;
        model = trial_model;
        current_snr = trial_snr;
    }

    strokes.sort_by(|a, b| a.peak_time().total_cmp(&b.peak_time()));
    let residual = speeds.iter().zip(&model).map(|(v, m)| v - m).collect();
    Ok(Decomposition { strokes, snr_db: current_snr, residual, quality })
}

/// Resamples, differentiates and decomposes a trajectory, then assigns each
/// stroke its start and end angle from the smoothed path.
pub fn decompose_trajectory(traj: &Trajectory, cfg: &FitConfig) -> Result<Decomposition> {
    let uniform = resample(traj, cfg.resample_hz)?;
    let vp = velocity_profile(&uniform);
    let mut dec = decompose(&vp, cfg)?;
    let smoothed = smooth_trajectory(&uniform, cfg.smoothing_ms / 1000.0)?;
    for s in &mut dec.strokes {
        if let Ok((a, b)) = stroke_angles_smoothed(&smoothed, s) {
            s.theta_s = a;
            s.theta_e = b;
        }
    }
    Ok(dec)
}

fn evaluate(strokes: &[LognormalStroke], times: &[f64]) -> Vec<f64> {
    times.iter().map(|&t| strokes.iter().map(|s| stroke_velocity(s, t)).sum()).collect()
}

/// Residual peaks examined per extraction round.
const PEAK_ATTEMPTS: usize = 3;

/// Indices of local maxima above `floor`, highest first.
fn residual_peaks(values: &[f64], floor: f64) -> Vec<usize> {
    let n = values.len();
    let mut peaks: Vec<usize> =
        (0..n).filter(|&i| values[i] > floor && (i == 0 || values[i] >= values[i - 1]) && (i + 1 == n || values[i] > values[i + 1])).collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks
}

/// Samples around `peak` that stay above 1% of the peak and keep descending
/// away from it, so the window stops at the valleys towards neighbouring
/// peaks. One extra sample below the threshold is kept on each side to anchor
/// the tails.
fn fit_window(signal: &[f64], peak: usize) -> (usize, usize) {
    let n = signal.len();
    let thr = 0.01 * signal[peak];
    let mut lo = peak;
    while lo > 0 && signal[lo - 1] >= thr && signal[lo - 1] <= signal[lo] {
        lo -= 1;
    }
    if lo > 0 && signal[lo - 1] < thr && signal[lo - 1] <= signal[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n && signal[hi + 1] >= thr && signal[hi + 1] <= signal[hi] {
        hi += 1;
    }
    if hi + 1 < n && signal[hi + 1] < thr && signal[hi + 1] <= signal[hi] {
        hi += 1;
    }
    // at least six samples for a four-parameter fit
    while hi - lo + 1 < 6 && (lo > 0 || hi + 1 < n) {
        lo = lo.saturating_sub(1);
        if hi + 1 < n && hi - lo + 1 < 6 {
            hi += 1;
        }
    }
    (lo, hi)
}

/// Stroke with mode at `(tm, vm)` and the given shape parameters.
fn stroke_from_peak(sigma: f64, mu: f64, tm: f64, vm: f64) -> Option<LognormalStroke> {
    let s = LognormalStroke {
        d: vm * (2.0 * PI).sqrt() * sigma * (mu - 0.5 * sigma * sigma).exp(),
        t0: tm - (mu - sigma * sigma).exp(),
        mu,
        sigma,
        theta_s: 0.0,
        theta_e: 0.0,
    };
    s.is_valid().then_some(s)
}

/// Offsets `a` of the two inflection points, which sit at `t0 + exp(mu - a)`.
fn inflection_offsets(sigma: f64) -> (f64, f64) {
    let root = sigma * (0.25 * sigma * sigma + 1.0).sqrt();
    (1.5 * sigma * sigma + root, 1.5 * sigma * sigma - root)
}

/// Speed at the early (`left`) or late inflection point relative to the peak.
fn inflection_ratio(sigma: f64, left: bool) -> f64 {
    let (a1, a2) = inflection_offsets(sigma);
    let a = if left { a1 } else { a2 };
    let z = a - sigma * sigma;
    (-(z * z) / (2.0 * sigma * sigma)).exp()
}

/// Bisection for the sigma whose inflection ratio equals `ratio`.
fn sigma_from_inflection_ratio(ratio: f64, left: bool) -> Option<f64> {
    let (mut lo, mut hi) = (1e-3, 3.0);
    let f = |s: f64| inflection_ratio(s, left) - ratio;
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn interp(times: &[f64], values: &[f64], t: f64) -> f64 {
    let i = times.partition_point(|&x| x <= t).clamp(1, times.len() - 1);
    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
    values[i - 1] + w * (values[i] - values[i - 1])
}

/// Vertex of the parabola through three equally spaced samples, as an offset
/// in samples from the middle one.
fn parabolic_offset(a: f64, b: f64, c: f64) -> f64 {
    let den = a - 2.0 * b + c;
    if den.abs() < 1e-300 {
        0.0
    } else {
        (0.5 * (a - c) / den).clamp(-0.5, 0.5)
    }
}

/// Starting points for the refinement: one from the inflection points, one
/// from the half-height crossings, and a generic fallback.
fn initial_estimates(times: &[f64], signal: &[f64], peak: usize, lo: usize, hi: usize) -> Vec<LognormalStroke> {
    let dt = times[1] - times[0];
    let (tm, vm) = if peak > lo && peak < hi {
        let off = parabolic_offset(signal[peak - 1], signal[peak], signal[peak + 1]);
        let vm = signal[peak] - 0.25 * (signal[peak - 1] - signal[peak + 1]) * off;
        (times[peak] + off * dt, vm.max(signal[peak]))
    } else {
        (times[peak], signal[peak])
    };
    let mut out = Vec::with_capacity(3);

    // inflection points: extrema of the first derivative on each flank
    if hi > lo + 2 {
        let deriv: Vec<f64> = (lo + 1..hi).map(|i| (signal[i + 1] - signal[i - 1]) / (2.0 * dt)).collect();
        let at = |k: usize| lo + 1 + k;
        let locate = |range: std::ops::Range<usize>, maximise: bool| -> Option<f64> {
            let k = range.clone().max_by(|&a, &b| {
                let (x, y) = if maximise { (deriv[a], deriv[b]) } else { (-deriv[a], -deriv[b]) };
                x.total_cmp(&y)
            })?;
            if k == 0 || k + 1 >= deriv.len() {
                return None;
            }
            let off = parabolic_offset(deriv[k - 1], deriv[k], deriv[k + 1]);
            Some(times[at(k)] + off * dt)
        };
        let split = peak.saturating_sub(lo + 1).min(deriv.len());
        let left = if split > 0 { locate(0..split, true).filter(|&t| t < tm) } else { None };
        let right = if split < deriv.len() { locate(split..deriv.len(), false).filter(|&t| t > tm) } else { None };
        let sig_l = left.and_then(|t| sigma_from_inflection_ratio(interp(times, signal, t) / vm, true));
        let sig_r = right.and_then(|t| sigma_from_inflection_ratio(interp(times, signal, t) / vm, false));
        let sigma = match (sig_l, sig_r) {
            (Some(a), Some(b)) => Some(0.5 * (a + b)),
            (a, b) => a.or(b),
        };
        if let Some(sigma) = sigma {
            let (a1, a2) = inflection_offsets(sigma);
            let mode = (-sigma * sigma).exp();
            let scale = match (left, right) {
                (Some(l), Some(r)) => Some((r - l) / ((-a2).exp() - (-a1).exp())),
                (Some(l), None) => Some((tm - l) / (mode - (-a1).exp())),
                (None, Some(r)) => Some((r - tm) / ((-a2).exp() - mode)),
                (None, None) => None,
            };
            if let Some(stroke) = scale.filter(|s| *s > 0.0).and_then(|s| stroke_from_peak(sigma, s.ln(), tm, vm)) {
                out.push(stroke);
            }
        }
    }

    // half-height crossings: (t_r - t_m) / (t_m - t_l) = exp(sigma * s)
    let level = 0.5;
    let s_level = (-2.0 * f64::ln(level)).sqrt();
    let crossing = |left: bool| -> Option<f64> {
        let mut i = peak;
        loop {
            let next = if left {
                if i <= lo {
                    return None;
                }
                i - 1
            } else {
                if i >= hi {
                    return None;
                }
                i + 1
            };
            if signal[next] < level * vm {
                let w = (level * vm - signal[i]) / (signal[next] - signal[i]);
                return Some(times[i] + w * (times[next] - times[i]));
            }
            i = next;
        }
    };
    let (tl, tr) = (crossing(true), crossing(false));
    let half = match (tl, tr) {
        (Some(l), Some(r)) if tm - l > 0.0 && r - tm > 0.0 => {
            let sigma = (((r - tm) / (tm - l)).ln() / s_level).clamp(0.02, 2.0);
            let scale = (tm - l) / (1.0 - (-sigma * s_level).exp());
            stroke_from_peak(sigma, scale.ln() + sigma * sigma, tm, vm)
        }
        (None, Some(r)) if r - tm > 0.0 => {
            let sigma = 0.35;
            let scale = (r - tm) / ((sigma * s_level).exp() - 1.0);
            stroke_from_peak(sigma, scale.ln() + sigma * sigma, tm, vm)
        }
        (Some(l), None) if tm - l > 0.0 => {
            let sigma = 0.35;
            let scale = (tm - l) / (1.0 - (-sigma * s_level).exp());
            stroke_from_peak(sigma, scale.ln() + sigma * sigma, tm, vm)
        }
        _ => None,
    };
    out.extend(half);

    if out.is_empty() {
        let sigma = 0.3;
        let width = (times[hi] - times[lo]).max(4.0 * dt);
        let scale = 0.25 * width / sigma;
        out.extend(stroke_from_peak(sigma, scale.ln() + sigma * sigma, tm, vm));
    }
    out
}
