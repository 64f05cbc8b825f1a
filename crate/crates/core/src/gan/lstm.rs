//! Long short-term memory layer over flat parameter slices, with an exact
//! backward pass through time.

use rand::Rng;

/// Layer shape. Parameters are laid out as `W (4h x n_in)`, `U (4h x h)`
/// and `b (4h)`, gate blocks ordered input, forget, candidate, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Lstm {
    pub n_in: usize,
    pub h: usize,
}

pub(crate) struct Step {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates `[i, f, g, o]`.
    gates: Vec<f64>,
    tc: Vec<f64>,
    pub h: Vec<f64>,
}

pub(crate) struct Trace {
    pub steps: Vec<Step>,
}

impl Trace {
    pub fn last_h(&self) -> &[f64] {
        &self.steps.last().expect("non-empty trace").h
    }

    pub fn outputs(&self) -> Vec<Vec<f64>> {
        self.steps.iter().map(|s| s.h.clone()).collect()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    crate::classify::mlp::sigmoid(z)
}

impl Lstm {
    pub fn len(&self) -> usize {
        4 * self.h * (self.n_in + self.h + 1)
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let w = 4 * self.h * self.n_in;
        (0, w, w + 4 * self.h * self.h)
    }

    /// Uniform weights in `+-1/sqrt(h)`, zero biases except a unit forget bias.
    pub fn init(&self, p: &mut [f64], rng: &mut impl Rng) {
        let bound = 1.0 / (self.h as f64).sqrt();
        let (_, _, ob) = self.offsets();
        for v in &mut p[..ob] {
            *v = rng.random_range(-bound..bound);
        }
        for (k, v) in p[ob..ob + 4 * self.h].iter_mut().enumerate() {
            *v = if (self.h..2 * self.h).contains(&k) { 1.0 } else { 0.0 };
        }
    }

    pub fn forward(&self, p: &[f64], xs: &[Vec<f64>], h0: &[f64], c0: &[f64]) -> Trace {
        let (ow, ou, ob) = self.offsets();
        let (n_in, h) = (self.n_in, self.h);
        let mut h_prev = h0.to_vec();
        let mut c_prev = c0.to_vec();
        let mut steps = Vec::with_capacity(xs.len());
        for x in xs {
            debug_assert_eq!(x.len(), n_in);
            let mut gates = p[ob..ob + 4 * h].to_vec();
            for (r, gate) in gates.iter_mut().enumerate() {
                let wr = &p[ow + r * n_in..ow + (r + 1) * n_in];
                let ur = &p[ou + r * h..ou + (r + 1) * h];
                *gate += wr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ur.iter().zip(&h_prev).map(|(a, b)| a * b).sum::<f64>();
            }
            for (r, gate) in gates.iter_mut().enumerate() {
                *gate = if r / h == 2 { gate.tanh() } else { sigmoid(*gate) };
            }
            let c: Vec<f64> = (0..h).map(|j| gates[h + j] * c_prev[j] + gates[j] * gates[2 * h + j]).collect();
            let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
            let hn: Vec<f64> = (0..h).map(|j| gates[3 * h + j] * tc[j]).collect();
            steps.push(Step { x: x.clone(), h_prev: std::mem::replace(&mut h_prev, hn.clone()), c_prev: std::mem::replace(&mut c_prev, c), gates, tc, h: hn });
        }
        Trace { steps }
    }

    /// Back-propagates `dhs[t] = dL/dh_t` through the sequence, accumulating
    /// parameter gradients into `grad`. Returns `(dL/dx_t, dL/dh0, dL/dc0)`.
    pub fn backward(&self, p: &[f64], tr: &Trace, dhs: &[Vec<f64>], grad: &mut [f64]) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
        let (ow, ou, ob) = self.offsets();
        let (n_in, h) = (self.n_in, self.h);
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dxs = vec![vec![0.0; n_in]; tr.steps.len()];
        let mut da = vec![0.0; 4 * h];
        for t in (0..tr.steps.len()).rev() {
            let s = &tr.steps[t];
            for j in 0..h {
                let dh = dhs[t][j] + dh_next[j];
                let (i, f, g, o) = (s.gates[j], s.gates[h + j], s.gates[2 * h + j], s.gates[3 * h + j]);
                let dc = dc_next[j] + dh * o * (1.0 - s.tc[j] * s.tc[j]);
                da[j] = dc * g * i * (1.0 - i);
                da[h + j] = dc * s.c_prev[j] * f * (1.0 - f);
                da[2 * h + j] = dc * i * (1.0 - g * g);
                da[3 * h + j] = dh * s.tc[j] * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            dh_next.iter_mut().for_each(|v| *v = 0.0);
            for (r, &d) in da.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for k in 0..n_in {
                    grad[ow + r * n_in + k] += d * s.x[k];
                    dxs[t][k] += p[ow + r * n_in + k] * d;
                }
                for k in 0..h {
                    grad[ou + r * h + k] += d * s.h_prev[k];
                    dh_next[k] += p[ou + r * h + k] * d;
                }
                grad[ob + r] += d;
            }
        }
        (dxs, dh_next, dc_next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Scalar loss: sum over steps of a fixed weighting of `h_t`, plus terms
    /// on the initial state so its gradient is exercised too.
    #[allow(clippy::type_complexity)]
    fn setup() -> (Lstm, Vec<f64>, Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l = Lstm { n_in: 2, h: 3 };
        let mut p = vec![0.0; l.len()];
        l.init(&mut p, &mut rng);
        for v in &mut p {
            *v += rng.random_range(-0.3..0.3);
        }
        let xs: Vec<Vec<f64>> = (0..4).map(|_| vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
        let h0: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let c0: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..0.5)).collect();
        let w: Vec<Vec<f64>> = (0..4).map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        (l, p, xs, h0, c0, w)
    }

    fn loss(l: &Lstm, p: &[f64], xs: &[Vec<f64>], h0: &[f64], c0: &[f64], w: &[Vec<f64>]) -> f64 {
        let tr = l.forward(p, xs, h0, c0);
        tr.steps.iter().zip(w).map(|(s, wt)| s.h.iter().zip(wt).map(|(a, b)| a * b).sum::<f64>()).sum()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-4)
    }

    #[test]
    fn bptt_matches_central_differences() {
        let (l, p, xs, h0, c0, w) = setup();
        let tr = l.forward(&p, &xs, &h0, &c0);
        let mut g = vec![0.0; p.len()];
        let (dxs, dh0, dc0) = l.backward(&p, &tr, &w, &mut g);
        let eps = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i] += eps;
            let up = loss(&l, &q, &xs, &h0, &c0, &w);
            q[i] -= 2.0 * eps;
            let down = loss(&l, &q, &xs, &h0, &c0, &w);
            worst = worst.max(rel((up - down) / (2.0 * eps), g[i]));
        }
        for t in 0..xs.len() {
            for k in 0..2 {
                let mut x = xs.clone();
                x[t][k] += eps;
                let up = loss(&l, &p, &x, &h0, &c0, &w);
                x[t][k] -= 2.0 * eps;
                let down = loss(&l, &p, &x, &h0, &c0, &w);
                worst = worst.max(rel((up - down) / (2.0 * eps), dxs[t][k]));
            }
        }
        for j in 0..3 {
            let mut a = h0.clone();
            a[j] += eps;
            let up = loss(&l, &p, &xs, &a, &c0, &w);
            a[j] -= 2.0 * eps;
            let down = loss(&l, &p, &xs, &a, &c0, &w);
            worst = worst.max(rel((up - down) / (2.0 * eps), dh0[j]));
            let mut b = c0.clone();
            b[j] += eps;
            let up = loss(&l, &p, &xs, &h0, &b, &w);
            b[j] -= 2.0 * eps;
            let down = loss(&l, &p, &xs, &h0, &b, &w);
            worst = worst.max(rel((up - down) / (2.0 * eps), dc0[j]));
        }
        assert!(worst <= 1e-4, "{worst}");
    }

    #[test]
    fn forget_bias_starts_at_one() {
        let l = Lstm { n_in: 1, h: 2 };
        let mut p = vec![0.0; l.len()];
        l.init(&mut p, &mut ChaCha8Rng::seed_from_u64(0));
        let ob = l.len() - 8;
        assert_eq!(&p[ob..], &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }
}
