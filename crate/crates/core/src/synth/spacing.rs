use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::VpKind;

/// Spacing law of the abscissa sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VelocityKind {
    /// Equal steps.
    Constant,
    /// Step `j` proportional to `ln(1 + g (j + 1))`: strictly growing steps.
    Logarithmic { growth: f64 },
    /// Step `j` proportional to `exp(-(j/M - peak)^2 / (2 width^2))`: growing, then shrinking.
    Gaussian { peak: f64, width: f64 },
}

/// Tunable parameters of the non-constant spacing laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VelocityParams {
    pub log_growth: f64,
    pub gauss_peak: f64,
    pub gauss_width: f64,
}

impl Default for VelocityParams {
    fn default() -> Self {
        VelocityParams { log_growth: 1.0, gauss_peak: 0.45, gauss_width: 0.25 }
    }
}

impl VelocityParams {
    pub fn kind(&self, vp: VpKind) -> VelocityKind {
        match vp {
            VpKind::Constant => VelocityKind::Constant,
            VpKind::Logarithmic => VelocityKind::Logarithmic { growth: self.log_growth },
            VpKind::Gaussian => VelocityKind::Gaussian { peak: self.gauss_peak, width: self.gauss_width },
        }
    }
}

impl VelocityKind {
    pub fn vp(&self) -> VpKind {
        match self {
            VelocityKind::Constant => VpKind::Constant,
            VelocityKind::Logarithmic { .. } => VpKind::Logarithmic,
            VelocityKind::Gaussian { .. } => VpKind::Gaussian,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            VelocityKind::Constant => Ok(()),
            VelocityKind::Logarithmic { growth } if growth > 0.0 && growth.is_finite() => Ok(()),
            VelocityKind::Gaussian { peak, width } if peak > 0.0 && peak < 1.0 && width > 0.0 && width.is_finite() => Ok(()),
            other => Err(Error::Config(format!("invalid velocity profile parameters {other:?}"))),
        }
    }

    /// Relative weights of the `m - 1` steps of an `m`-point sequence, summing to one.
    pub fn weights(&self, m: usize) -> Result<Vec<f64>> {
        self.validate()?;
        if m < 2 {
            return Err(Error::Config(format!("need at least 2 points, got {m}")));
        }
        let raw: Vec<f64> = (0..m - 1)
            .map(|j| match *self {
                VelocityKind::Constant => 1.0,
                VelocityKind::Logarithmic { growth } => (growth * (j + 1) as f64).ln_1p(),
                VelocityKind::Gaussian { peak, width } => {
                    let z = j as f64 / m as f64 - peak;
                    (-(z * z) / (2.0 * width * width)).exp()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|w| w / total).collect())
    }

    /// `m` abscissae from `from` to `to` (both exact) spaced by [`Self::weights`].
    pub fn abscissae(&self, from: f64, to: f64, m: usize) -> Result<Vec<f64>> {
        let w = self.weights(m)?;
        let span = to - from;
        let mut out = Vec::with_capacity(m);
        out.push(from);
        let mut acc = 0.0;
        for wj in &w[..w.len() - 1] {
            acc += wj;
            out.push(from + span * acc);
        }
        out.push(to);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn steps(xs: &[f64]) -> Vec<f64> {
        xs.windows(2).map(|w| w[1] - w[0]).collect()
    }

    #[test]
    fn constant_on_unit_grid() {
        let xs = VelocityKind::Constant.abscissae(0.0, 10.0, 11).unwrap();
        for (k, x) in xs.iter().enumerate() {
            assert!((x - k as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(VelocityKind::Logarithmic { growth: 0.0 }.weights(10).is_err());
        assert!(VelocityKind::Gaussian { peak: 1.2, width: 0.2 }.weights(10).is_err());
        assert!(VelocityKind::Constant.weights(1).is_err());
    }

    proptest! {
        #[test]
        fn spacing_laws(m in 4usize..300, from in -500.0f64..500.0, span in 1.0f64..900.0, back in any::<bool>()) {
            let to = if back { from - span } else { from + span };
            let p = VelocityParams::default();
            for vp in VpKind::ALL {
                let xs = p.kind(vp).abscissae(from, to, m).unwrap();
                prop_assert_eq!(xs.len(), m);
                prop_assert_eq!(xs[0], from);
                prop_assert_eq!(xs[m - 1], to);
                let d: Vec<f64> = steps(&xs).iter().map(|s| s.abs()).collect();
                prop_assert!(d.iter().all(|s| *s > 0.0));
                match vp {
                    VpKind::Constant => prop_assert!(d.iter().all(|s| (s - d[0]).abs() <= 1e-9 * d[0])),
                    VpKind::Logarithmic => {
                        let w = p.kind(vp).weights(m).unwrap();
                        prop_assert!(w.windows(2).all(|p| p[1] > p[0]));
                    }
                    VpKind::Gaussian => {
                        let w = p.kind(vp).weights(m).unwrap();
                        let top = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
                        prop_assert!(w[..=top].windows(2).all(|p| p[1] >= p[0]));
                        prop_assert!(w[top..].windows(2).all(|p| p[1] <= p[0]));
                        // with four points the grid stops before the peak
                        if m >= 5 {
                            prop_assert!(top > 0 && top < w.len() - 1);
                        }
                    }
                }
            }
        }
    }
}
