use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::shape::{Frame, ShapeParam};
use crate::error::{Error, Result};
use crate::tags::{Direction, ShapeKind};
use crate::trajectory::Trajectory;

/// Smallest trajectory the pipeline accepts.
pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointCount {
    pub mean_points: f64,
    pub std_points: f64,
}

/// Per-direction distribution of the number of samples in a movement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DirectionStats(pub BTreeMap<Direction, PointCount>);

impl Default for DirectionStats {
    /// Estimated from the built-in human surrogate corpus on the default
    /// keypoint layout at 200 Hz.
    fn default() -> Self {
        let table = [(257.4, 55.1), (235.6, 50.3), (241.3, 55.4), (240.1, 53.4), (254.8, 53.7), (205.7, 53.9), (213.0, 48.9), (205.5, 50.5)];
        DirectionStats(Direction::all().zip(table).map(|(d, (mean_points, std_points))| (d, PointCount { mean_points, std_points })).collect())
    }
}

impl DirectionStats {
    /// The same distribution for all eight directions.
    pub fn uniform(mean_points: f64, std_points: f64) -> Self {
        DirectionStats(Direction::all().map(|d| (d, PointCount { mean_points, std_points })).collect())
    }

    pub fn get(&self, direction: Direction) -> Result<PointCount> {
        self.0.get(&direction).copied().ok_or_else(|| Error::Lookup(format!("no point-count statistics for direction {direction}")))
    }

    pub fn validate(&self) -> Result<()> {
        for (d, pc) in &self.0 {
            if !(pc.mean_points >= MIN_POINTS as f64) || !(pc.std_points >= 0.0) || !pc.std_points.is_finite() {
                return Err(Error::Config(format!("direction {d}: invalid point-count statistics {pc:?}")));
            }
        }
        Ok(())
    }
}

/// Draws a point count from the direction's normal distribution, rounded and
/// clamped to at least [`MIN_POINTS`].
pub fn sample_point_count<R: Rng + ?Sized>(stats: &DirectionStats, direction: Direction, rng: &mut R) -> Result<usize> {
    let pc = stats.get(direction)?;
    let draw = if pc.std_points == 0.0 {
        pc.mean_points
    } else {
        Normal::new(pc.mean_points, pc.std_points).map_err(|e| Error::Config(format!("direction {direction}: {e}")))?.sample(rng)
    };
    Ok((draw.round().max(MIN_POINTS as f64)) as usize)
}

/// Mean and sample (n - 1) standard deviation of the point counts per direction tag.
/// Every direction needs at least two tagged trajectories; untagged ones are ignored.
pub fn estimate_direction_stats(human: &[Trajectory]) -> Result<DirectionStats> {
    let mut counts: BTreeMap<Direction, Vec<f64>> = BTreeMap::new();
    for t in human {
        if let Some(d) = t.direction() {
            counts.entry(d).or_default().push(t.len() as f64);
        }
    }
    let missing: Vec<String> = Direction::all().filter(|d| counts.get(d).map_or(0, Vec::len) < 2).map(|d| d.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::Estimation(format!("fewer than two trajectories for directions {}", missing.join(", "))));
    }
    let stats = counts
        .into_iter()
        .map(|(d, c)| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (d, PointCount { mean_points: mean, std_points: var.sqrt() })
        })
        .collect();
    Ok(DirectionStats(stats))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRanges {
    pub a: ParamRange,
    pub b: ParamRange,
    pub c: ParamRange,
}

impl CoefficientRanges {
    pub fn get(&self, p: ShapeParam) -> ParamRange {
        match p {
            ShapeParam::A => self.a,
            ShapeParam::B => self.b,
            ShapeParam::C => self.c,
        }
    }
}

/// Explored coefficient ranges per shape family, in the movement frame (see [`Frame`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShapeRanges {
    pub linear: CoefficientRanges,
    pub quadratic: CoefficientRanges,
    pub exponential: CoefficientRanges,
}

impl ShapeRanges {
    pub fn get(&self, kind: ShapeKind) -> &CoefficientRanges {
        match kind {
            ShapeKind::Linear => &self.linear,
            ShapeKind::Quadratic => &self.quadratic,
            ShapeKind::Exponential => &self.exponential,
        }
    }
}

impl Default for ShapeRanges {
    /// Ranges estimated from the built-in human surrogate corpus on the
    /// default keypoint layout.
    fn default() -> Self {
        let r = ParamRange::new;
        ShapeRanges {
            linear: CoefficientRanges { a: r(0.0, 0.0), b: r(-0.63, 0.73), c: r(17.7, 1004.0) },
            quadratic: CoefficientRanges { a: r(-2.97e-3, 3.40e-3), b: r(-2.41, 2.66), c: r(-96.9, 1268.8) },
            exponential: CoefficientRanges { a: r(-4.54e-2, 2.85e-2), b: r(-58225.7, 5158.1), c: r(-506.3, 1108.6) },
        }
    }
}

/// Least-squares fit of every trajectory to each shape family, in its
/// movement frame; each coefficient range is the 5th to 95th percentile.
/// Trajectories whose normal equations are singular are skipped.
pub fn estimate_shape_ranges(human: &[Trajectory]) -> Result<ShapeRanges> {
    if human.len() < 10 {
        return Err(Error::Estimation(format!("need at least 10 trajectories, got {}", human.len())));
    }
    let mut fits: [[Vec<f64>; 3]; 3] = Default::default();
    let mut skipped = 0usize;
    for t in human {
        let (a, b) = (t.first(), t.last());
        let frame = Frame::for_segment((a.x, a.y), (b.x, b.y));
        let (us, vs): (Vec<f64>, Vec<f64>) = t.points().iter().map(|p| frame.to_frame((p.x, p.y))).unzip();
        let lin = least_squares(&[&vec![1.0; us.len()], &us], &vs);
        let quad = least_squares(&[&vec![1.0; us.len()], &us, &us.iter().map(|u| u * u).collect::<Vec<_>>()], &vs);
        let exp = fit_exponential(&us, &vs);
        match (lin, quad, exp) {
            (Some(l), Some(q), Some(e)) => {
                for (slot, vals) in fits.iter_mut().zip([[0.0, l[1], l[0]], [q[2], q[1], q[0]], e]) {
                    for (s, v) in slot.iter_mut().zip(vals) {
                        s.push(v);
                    }
                }
            }
            _ => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!("shape estimation skipped {skipped} degenerate trajectories");
    }
    if fits[0][0].is_empty() {
        return Err(Error::Estimation("every trajectory was degenerate".into()));
    }
    let ranges = |family: &mut [Vec<f64>; 3]| {
        let mut r = family.iter_mut().map(|v| {
            v.sort_by(f64::total_cmp);
            ParamRange::new(percentile(v, 0.05), percentile(v, 0.95))
        });
        CoefficientRanges { a: r.next().unwrap(), b: r.next().unwrap(), c: r.next().unwrap() }
    };
    let [mut l, mut q, mut e] = fits;
    Ok(ShapeRanges { linear: ranges(&mut l), quadratic: ranges(&mut q), exponential: ranges(&mut e) })
}

/// Linear-interpolated percentile of sorted data.
pub(crate) fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (pos - i as f64) * (sorted[j] - sorted[i])
}

/// Solves the normal equations for `v ~ sum_k coef_k basis_k`, with the
/// basis columns scaled to unit norm for conditioning. `None` when singular.
fn least_squares(basis: &[&[f64]], v: &[f64]) -> Option<Vec<f64>> {
    lstsq_with_sse(basis, v).map(|(c, _)| c)
}

fn lstsq_with_sse(basis: &[&[f64]], v: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = basis.len();
    let n = v.len();
    if n < k {
        return None;
    }
    let norms: Vec<f64> = basis.iter().map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if norms.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
        return None;
    }
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for a in 0..k {
        for b in 0..k {
            ata[a * k + b] = (0..n).map(|i| basis[a][i] * basis[b][i]).sum::<f64>() / (norms[a] * norms[b]);
        }
        atb[a] = (0..n).map(|i| basis[a][i] * v[i]).sum::<f64>() / norms[a];
    }
    let scaled = solve_dense(&mut ata, &mut atb, k)?;
    let coef: Vec<f64> = scaled.iter().zip(&norms).map(|(c, s)| c / s).collect();
    let sse = (0..n)
        .map(|i| {
            let m: f64 = (0..k).map(|j| coef[j] * basis[j][i]).sum();
            (v[i] - m).powi(2)
        })
        .sum();
    Some((coef, sse))
}

/// Gaussian elimination with partial pivoting; `None` on a (near-)singular matrix.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if !(a[piv * n + col].abs() > 1e-12) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for j in col..n {
                a[r * n + j] -= f * a[col * n + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|j| a[r * n + j] * x[j]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// `v ~ c + b exp(a u)`: grid search over the rate `a`, linear least squares
/// for `(b, c)` at each rate, then golden-section refinement around the best
/// grid point. Returns `[a, b, c]`.
fn fit_exponential(us: &[f64], vs: &[f64]) -> Option<[f64; 3]> {
    let (lo, hi) = us.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &u| (l.min(u), h.max(u)));
    let width = hi - lo;
    if !(width > 0.0) {
        return None;
    }
    let ones = vec![1.0; us.len()];
    let eval = |a: f64| -> Option<(f64, f64, f64)> {
        // shift by the lower bound so the basis stays within exp([-8, 8])
        let e: Vec<f64> = us.iter().map(|u| (a * (u - lo)).exp()).collect();
        let (c, sse) = lstsq_with_sse(&[&ones, &e], vs)?;
        Some((sse, c[1] * (-a * lo).exp(), c[0]))
    };
    let grid = 161;
    let max_rate = 8.0 / width;
    let mut best: Option<(f64, f64)> = None;
    for k in 0..grid {
        let a = -max_rate + 2.0 * max_rate * k as f64 / (grid - 1) as f64;
        if a == 0.0 {
            continue;
        }
        if let Some((sse, _, _)) = eval(a) {
            if best.is_none_or(|(s, _)| sse < s) {
                best = Some((sse, a));
            }
        }
    }
    let (_, a0) = best?;
    let step = 2.0 * max_rate / (grid - 1) as f64;
    let (mut x0, mut x1) = (a0 - step, a0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let f = |a: f64| eval(a).map_or(f64::INFINITY, |r| r.0);
    for _ in 0..60 {
        let c = x1 - g * (x1 - x0);
        let d = x0 + g * (x1 - x0);
        if f(c) < f(d) {
            x1 = d;
        } else {
            x0 = c;
        }
    }
    let mut a = 0.5 * (x0 + x1);
    if a.abs() < 1e-12 * max_rate {
        a = a0;
    }
    let (_, b, c) = eval(a)?;
    [a, b, c].iter().all(|x| x.is_finite()).then_some([a, b, c])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::Point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tagged(n: usize, d: u8) -> Trajectory {
        let pts = (0..n).map(|k| Point::new(k as f64, 0.5 * k as f64, k as f64 * 0.005)).collect();
        Trajectory::new(pts).unwrap().with_direction(Some(Direction::new(d).unwrap()))
    }

    fn all_directions(counts: &[usize]) -> Vec<Trajectory> {
        Direction::all().flat_map(|d| counts.iter().map(move |&n| tagged(n, d.index()))).collect()
    }

    #[test]
    fn zero_spread_always_returns_the_mean() {
        let stats = DirectionStats::uniform(50.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = Direction::new(2).unwrap();
        assert!((0..100).all(|_| sample_point_count(&stats, d, &mut rng).unwrap() == 50));
    }

    #[test]
    fn monte_carlo_mean() {
        let stats = DirectionStats::uniform(60.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let d = Direction::new(1).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| sample_point_count(&stats, d, &mut rng).unwrap() as f64).sum::<f64>() / n as f64;
        assert!((mean - 60.0).abs() < 0.5, "{mean}");
    }

    #[test]
    fn clamp_keeps_four_points() {
        let stats = DirectionStats::uniform(4.2, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Direction::new(8).unwrap();
        assert!((0..10_000).all(|_| sample_point_count(&stats, d, &mut rng).unwrap() >= 4));
    }

    #[test]
    fn unknown_direction_is_a_lookup_error() {
        let stats = DirectionStats(BTreeMap::new());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = sample_point_count(&stats, Direction::new(1).unwrap(), &mut rng);
        assert!(matches!(e, Err(Error::Lookup(_))));
    }

    #[test]
    fn direction_stats_closed_forms() {
        let s = estimate_direction_stats(&all_directions(&[10, 10, 10])).unwrap();
        let pc = s.get(Direction::new(3).unwrap()).unwrap();
        assert_eq!((pc.mean_points, pc.std_points), (10.0, 0.0));

        let s = estimate_direction_stats(&all_directions(&[8, 12])).unwrap();
        let pc = s.get(Direction::new(5).unwrap()).unwrap();
        assert_eq!(pc.mean_points, 10.0);
        assert!((pc.std_points - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn direction_stats_group_by_tag() {
        let mut data = all_directions(&[10, 10]);
        data.push(tagged(30, 4));
        data.push(tagged(99, 4).with_direction(None));
        let s = estimate_direction_stats(&data).unwrap();
        assert_eq!(s.get(Direction::new(4).unwrap()).unwrap().mean_points, 50.0 / 3.0);
        assert_eq!(s.get(Direction::new(6).unwrap()).unwrap().mean_points, 10.0);
    }

    #[test]
    fn missing_directions_listed() {
        let data: Vec<Trajectory> = all_directions(&[10, 10]).into_iter().filter(|t| t.direction().unwrap().index() != 7).collect();
        match estimate_direction_stats(&data) {
            Err(Error::Estimation(msg)) => assert!(msg.contains("7-8"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    fn from_fn(f: impl Fn(f64) -> f64, x0: f64, x1: f64, n: usize) -> Trajectory {
        let pts = (0..n)
            .map(|k| {
                let x = x0 + (x1 - x0) * k as f64 / (n - 1) as f64;
                Point::new(x, f(x), k as f64 * 0.01)
            })
            .collect();
        Trajectory::new(pts).unwrap()
    }

    #[test]
    fn parabola_curvature_recovered() {
        let data: Vec<Trajectory> = (0..12).map(|k| from_fn(|x| 2.0 * x * x + 0.1 * k as f64, -3.0, 3.0, 40)).collect();
        let r = estimate_shape_ranges(&data).unwrap();
        assert!((r.quadratic.a.lo - 2.0).abs() < 0.02 && (r.quadratic.a.hi - 2.0).abs() < 0.02, "{:?}", r.quadratic);
    }

    #[test]
    fn lines_give_a_curvature_range_around_zero() {
        let data: Vec<Trajectory> = (0..12).map(|k| from_fn(|x| 0.3 * x + k as f64, 100.0, 900.0, 50)).collect();
        let r = estimate_shape_ranges(&data).unwrap();
        assert!(r.quadratic.a.lo <= 1e-12 && r.quadratic.a.hi >= -1e-12, "{:?}", r.quadratic);
        assert!((r.linear.b.lo - 0.3).abs() < 1e-9);
        for c in [r.linear, r.quadratic, r.exponential] {
            for p in ShapeParam::ALL {
                assert!(c.get(p).lo <= c.get(p).hi);
            }
        }
    }

    #[test]
    fn exponential_fit_recovers_coefficients() {
        let t = from_fn(|x| 50.0 + 20.0 * (0.004 * x).exp(), 200.0, 1000.0, 80);
        let (us, vs): (Vec<f64>, Vec<f64>) = t.points().iter().map(|p| (p.x, p.y)).unzip();
        let [a, b, c] = fit_exponential(&us, &vs).unwrap();
        assert!((a - 0.004).abs() < 1e-6 && (b - 20.0).abs() < 0.05 && (c - 50.0).abs() < 0.1, "{a} {b} {c}");
    }

    #[test]
    fn too_few_trajectories_rejected() {
        assert!(estimate_shape_ranges(&all_directions(&[10])[..5]).is_err());
    }

    #[test]
    fn percentile_matches_sort_oracle() {
        let v: Vec<f64> = (0..=100).map(|k| k as f64).collect();
        assert_eq!(percentile(&v, 0.05), 5.0);
        assert_eq!(percentile(&v, 0.95), 95.0);
    }
}
