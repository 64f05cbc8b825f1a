use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tags::ShapeKind;

/// Which coefficient is held fixed while the other two are solved from the endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeParam {
    A,
    B,
    C,
}

impl ShapeParam {
    pub const ALL: [ShapeParam; 3] = [ShapeParam::A, ShapeParam::B, ShapeParam::C];
}

/// Path shape `v = f(u)` in the movement frame.
///
/// * linear: `v = b u + c` (`a` is zero)
/// * quadratic: `v = a u^2 + b u + c`
/// * exponential: `v = c + b exp(a u)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ShapeSpec {
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            ShapeKind::Linear => self.b * u + self.c,
            ShapeKind::Quadratic => (self.a * u + self.b) * u + self.c,
            ShapeKind::Exponential => self.c + self.b * (self.a * u).exp(),
        }
    }

    /// Straight line through both points.
    pub fn line_through(p: (f64, f64), q: (f64, f64)) -> Result<ShapeSpec> {
        let du = q.0 - p.0;
        if du == 0.0 {
            return Err(Error::ParameterRange("endpoints share the same abscissa".into()));
        }
        let b = (q.1 - p.1) / du;
        Ok(ShapeSpec { kind: ShapeKind::Linear, a: 0.0, b, c: p.1 - b * p.0 })
    }

    /// Fixes `param` to `value` and solves the other two coefficients so the
    /// curve passes through `p` and `q`. Linear shapes have no free
    /// coefficient; only `a = 0` is accepted for them.
    pub fn fit(kind: ShapeKind, param: ShapeParam, value: f64, p: (f64, f64), q: (f64, f64)) -> Result<ShapeSpec> {
        if !value.is_finite() {
            return Err(Error::ParameterRange(format!("fixed coefficient {value} is not finite")));
        }
        let (u1, v1, u2, v2) = (p.0, p.1, q.0, q.1);
        if u1 == u2 {
            return Err(Error::ParameterRange("endpoints share the same abscissa".into()));
        }
        let unfittable = |why: &str| Err(Error::ParameterRange(format!("{kind} with {param:?} = {value}: {why}")));
        let spec = match (kind, param) {
            (ShapeKind::Linear, ShapeParam::A) if value == 0.0 => ShapeSpec::line_through(p, q)?,
            (ShapeKind::Linear, _) => return unfittable("a line is fully determined by its endpoints"),
            (ShapeKind::Quadratic, ShapeParam::A) => {
                let b = ((v2 - v1) - value * (u2 * u2 - u1 * u1)) / (u2 - u1);
                ShapeSpec { kind, a: value, b, c: v1 - value * u1 * u1 - b * u1 }
            }
            (ShapeKind::Quadratic, ShapeParam::B) => {
                let den = u2 * u2 - u1 * u1;
                if den.abs() <= 1e-12 * (u1 * u1 + u2 * u2) {
                    return unfittable("endpoints symmetric about u = 0");
                }
                let a = ((v2 - v1) - value * (u2 - u1)) / den;
                ShapeSpec { kind, a, b: value, c: v1 - a * u1 * u1 - value * u1 }
            }
            (ShapeKind::Quadratic, ShapeParam::C) => {
                let det = u1 * u2 * (u1 - u2);
                if det.abs() <= 1e-12 * (u1.abs() + u2.abs()).powi(3) {
                    return unfittable("an endpoint lies on u = 0");
                }
                let (r1, r2) = (v1 - value, v2 - value);
                let a = (r1 * u2 - r2 * u1) / det;
                let b = (u1 * u1 * r2 - u2 * u2 * r1) / det;
                ShapeSpec { kind, a, b, c: value }
            }
            (ShapeKind::Exponential, ShapeParam::A) => {
                let den = (value * u2).exp() - (value * u1).exp();
                if !(den.abs() > 0.0) || !den.is_finite() {
                    return unfittable("exp(a u) takes the same value at both endpoints");
                }
                let b = (v2 - v1) / den;
                ShapeSpec { kind, a: value, b, c: v1 - b * (value * u1).exp() }
            }
            (ShapeKind::Exponential, ShapeParam::B) => {
                if value == 0.0 {
                    return unfittable("b = 0 gives a constant");
                }
                let Some(a) = solve_exp_rate(u1, u2, (v2 - v1) / value) else {
                    return unfittable("no rate reaches both endpoints");
                };
                ShapeSpec { kind, a, b: value, c: v1 - value * (a * u1).exp() }
            }
            (ShapeKind::Exponential, ShapeParam::C) => {
                let (r1, r2) = (v1 - value, v2 - value);
                if r1 == 0.0 || !(r2 / r1 > 0.0) {
                    return unfittable("endpoints on opposite sides of the asymptote");
                }
                let a = (r2 / r1).ln() / (u2 - u1);
                ShapeSpec { kind, a, b: r1 * (-a * u1).exp(), c: value }
            }
        };
        let scale = 1.0 + v1.abs().max(v2.abs());
        let miss = (spec.eval(u1) - v1).abs().max((spec.eval(u2) - v2).abs());
        if !(miss <= 1e-6 * scale) || ![spec.a, spec.b, spec.c].iter().all(|x| x.is_finite()) {
            return unfittable("solution misses the endpoints numerically");
        }
        Ok(spec)
    }
}

/// Root of `exp(a u2) - exp(a u1) = target` closest to `a = 0`.
fn solve_exp_rate(u1: f64, u2: f64, target: f64) -> Option<f64> {
    let g = |a: f64| (a * u2).exp() - (a * u1).exp() - target;
    let span = u1.abs().max(u2.abs()).max(1e-9);
    let limit = 30.0 / span;
    let steps = 600;
    let mut best: Option<f64> = None;
    for side in [1.0, -1.0] {
        let mut prev_a = side * 1e-12 * limit;
        let mut prev = g(prev_a);
        for k in 1..=steps {
            let a = side * limit * k as f64 / steps as f64;
            let cur = g(a);
            if prev.signum() != cur.signum() && prev.is_finite() && cur.is_finite() {
                let (mut lo, mut hi) = (prev_a, a);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid).signum() == g(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                if best.is_none_or(|b: f64| root.abs() < b.abs()) {
                    best = Some(root);
                }
                break;
            }
            prev_a = a;
            prev = cur;
        }
    }
    best
}

/// Frame in which the shape function is single-valued: the axes are swapped
/// when the movement is steeper than 45 degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    pub swapped: bool,
}

impl Frame {
    pub fn for_segment(start: (f64, f64), end: (f64, f64)) -> Frame {
        Frame { swapped: (end.0 - start.0).abs() < (end.1 - start.1).abs() }
    }

    /// Screen `(x, y)` to frame `(u, v)`; the map is its own inverse.
    pub fn to_frame(self, p: (f64, f64)) -> (f64, f64) {
        if self.swapped {
            (p.1, p.0)
        } else {
            p
        }
    }

    pub fn to_screen(self, p: (f64, f64)) -> (f64, f64) {
        self.to_frame(p)
    }
}
