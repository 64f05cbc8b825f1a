//! Sigma-Lognormal velocity model.
//!
//! A pointer movement's speed is modelled as a sum of lognormal pulses
//! ("strokes"), each described by an amplitude `d`, an onset time `t0`, a
//! log-time delay `mu` and a log-time spread `sigma`, plus the path angles at
//! the start and end of the stroke. [`decompose`] extracts strokes from a
//! sampled speed profile; [`reconstruct`] sums them back.

mod angles;
mod fit;
pub mod smooth;
mod solver;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::VelocityProfile;

pub use angles::{stroke_angles, stroke_angles_smoothed};
pub use fit::{decompose, decompose_trajectory, FitConfig};

/// SNR reported when the residual is negligible.
pub const SNR_CAP_DB: f64 = 100.0;

/// One lognormal primitive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LognormalStroke {
    /// Covered distance (px).
    pub d: f64,
    /// Onset time (s).
    pub t0: f64,
    /// Log-time delay.
    pub mu: f64,
    /// Log-time response spread, `> 0`.
    pub sigma: f64,
    pub theta_s: f64,
    pub theta_e: f64,
}

impl LognormalStroke {
    pub fn new(d: f64, t0: f64, mu: f64, sigma: f64) -> Self {
        LognormalStroke { d, t0, mu, sigma, theta_s: 0.0, theta_e: 0.0 }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        stroke_velocity(self, t)
    }

    /// Time of maximum speed, `t0 + exp(mu - sigma^2)`.
    pub fn peak_time(&self) -> f64 {
        self.t0 + (self.mu - self.sigma * self.sigma).exp()
    }

    pub fn peak_value(&self) -> f64 {
        self.velocity(self.peak_time())
    }

    /// First and last time at which the speed equals `fraction` of the peak.
    pub fn level_times(&self, fraction: f64) -> (f64, f64) {
        let s = (-2.0 * fraction.ln()).sqrt();
        let base = self.mu - self.sigma * self.sigma;
        (self.t0 + (base - self.sigma * s).exp(), self.t0 + (base + self.sigma * s).exp())
    }

    pub fn is_valid(&self) -> bool {
        [self.d, self.t0, self.mu, self.sigma].iter().all(|v| v.is_finite()) && self.d > 0.0 && self.sigma > 0.0
    }
}

/// Speed of a single stroke at time `t`; zero at and before onset.
pub fn stroke_velocity(s: &LognormalStroke, t: f64) -> f64 {
    let dt = t - s.t0;
    if dt <= 0.0 {
        return 0.0;
    }
    let z = dt.ln() - s.mu;
    s.d / ((2.0 * PI).sqrt() * s.sigma * dt) * (-(z * z) / (2.0 * s.sigma * s.sigma)).exp()
}

/// Pointwise sum of all strokes on the given time grid.
pub fn reconstruct(strokes: &[LognormalStroke], times: &[f64]) -> VelocityProfile {
    let speeds = times.iter().map(|&t| strokes.iter().map(|s| stroke_velocity(s, t)).sum()).collect();
    VelocityProfile::new(times.to_vec(), speeds).expect("reconstruction of an increasing grid")
}

/// Reconstruction quality in dB, `10 log10(sum v^2 / sum (v - v_r)^2)`.
///
/// Capped at [`SNR_CAP_DB`] when the residual energy is below `1e-12` of the
/// signal energy; a silent signal scores 0 dB.
pub fn snr(original: &VelocityProfile, reconstruction: &VelocityProfile) -> Result<f64> {
    if original.len() != reconstruction.len() {
        return Err(Error::InvalidInput(format!("grids differ in length ({} vs {})", original.len(), reconstruction.len())));
    }
    Ok(snr_slices(original.speeds(), reconstruction.speeds()))
}

pub(crate) fn snr_slices(original: &[f64], reconstruction: &[f64]) -> f64 {
    let signal: f64 = original.iter().map(|v| v * v).sum();
    if signal == 0.0 {
        return 0.0;
    }
    let noise: f64 = original.iter().zip(reconstruction).map(|(v, r)| (v - r) * (v - r)).sum();
    if noise < 1e-12 * signal {
        return SNR_CAP_DB;
    }
    10.0 * (signal / noise).log10()
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitQuality {
    /// Strokes whose refinement failed and kept their initial estimate.
    pub fallbacks: usize,
    /// Refinements that hit the iteration limit.
    pub unconverged: usize,
    /// Candidate strokes rejected for insufficient SNR gain.
    pub discarded: usize,
}

/// Strokes recovered from a speed profile, ordered by peak time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub strokes: Vec<LognormalStroke>,
    pub snr_db: f64,
    /// Signed `v - v_r` on the input grid.
    pub residual: Vec<f64>,
    #[serde(default)]
    pub quality: FitQuality,
}

impl Decomposition {
    pub fn n(&self) -> usize {
        self.strokes.len()
    }
}
