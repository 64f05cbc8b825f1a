//! Generator and discriminator networks over flat parameter vectors.

use rand::Rng;

use super::lstm::{sigmoid, Lstm, Trace};

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n_in = x.len();
    b.iter().enumerate().map(|(o, bo)| bo + w[o * n_in..(o + 1) * n_in].iter().zip(x).map(|(a, c)| a * c).sum::<f64>()).collect()
}

/// Accumulates the gradient of `y = W x + b` and returns `dL/dx`.
fn affine_back(w: &[f64], x: &[f64], dy: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let n_in = x.len();
    let mut dx = vec![0.0; n_in];
    for (o, &d) in dy.iter().enumerate() {
        gb[o] += d;
        for k in 0..n_in {
            gw[o * n_in + k] += d * x[k];
            dx[k] += w[o * n_in + k] * d;
        }
    }
    dx
}

fn uniform(p: &mut [f64], bound: f64, rng: &mut impl Rng) {
    for v in p {
        *v = rng.random_range(-bound..bound);
    }
}

/// Noise of length `r` is mapped to every layer's initial state
/// (`h0 = tanh(P_h z + b_h)`, `c0 = P_c z + b_c`); the stack is then unrolled
/// over `m` steps with empty inputs and read out by a per-step affine map to
/// two coordinates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct GenNet {
    pub r: usize,
    pub m: usize,
    pub layers: Vec<usize>,
}

pub(crate) struct GenTrace {
    z: Vec<f64>,
    h0: Vec<Vec<f64>>,
    traces: Vec<Trace>,
    pub out: Vec<[f64; 2]>,
}

impl GenNet {
    fn cells(&self) -> Vec<Lstm> {
        self.layers.iter().enumerate().map(|(l, &h)| Lstm { n_in: if l == 0 { 0 } else { self.layers[l - 1] }, h }).collect()
    }

    /// Offsets of (projections per layer, lstm per layer, output).
    fn layout(&self) -> (Vec<usize>, Vec<usize>, usize, usize) {
        let mut off = 0;
        let proj = self
            .layers
            .iter()
            .map(|&h| {
                let o = off;
                off += 2 * (h * self.r + h);
                o
            })
            .collect();
        let cells = self
            .cells()
            .iter()
            .map(|c| {
                let o = off;
                off += c.len();
                o
            })
            .collect();
        let out = off;
        off += 2 * self.layers.last().unwrap() + 2;
        (proj, cells, out, off)
    }

    pub fn len(&self) -> usize {
        self.layout().3
    }

    /// Random hidden weights; a zero output map, so an untrained generator
    /// emits the normalisation midpoint at every step.
    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let (proj, cells, _, n) = self.layout();
        let mut p = vec![0.0; n];
        for (l, &h) in self.layers.iter().enumerate() {
            let bound = 1.0 / (self.r as f64).sqrt();
            let o = proj[l];
            uniform(&mut p[o..o + h * self.r], bound, rng);
            uniform(&mut p[o + h * self.r + h..o + 2 * h * self.r + h], bound, rng);
        }
        for (c, &o) in self.cells().iter().zip(&cells) {
            c.init(&mut p[o..o + c.len()], rng);
        }
        p
    }

    pub fn forward(&self, p: &[f64], z: &[f64]) -> GenTrace {
        let (proj, cells, out_off, _) = self.layout();
        let r = self.r;
        let mut h0s = Vec::new();
        let mut traces: Vec<Trace> = Vec::new();
        for (l, cell) in self.cells().iter().enumerate() {
            let (h, o) = (cell.h, proj[l]);
            let h0: Vec<f64> = affine(&p[o..o + h * r], &p[o + h * r..o + h * r + h], z).iter().map(|v| v.tanh()).collect();
            let oc = o + h * r + h;
            let c0 = affine(&p[oc..oc + h * r], &p[oc + h * r..oc + h * r + h], z);
            let xs = match traces.last() {
                Some(prev) => prev.outputs(),
                None => vec![Vec::new(); self.m],
            };
            traces.push(cell.forward(&p[cells[l]..cells[l] + cell.len()], &xs, &h0, &c0));
            h0s.push(h0);
        }
        let hl = *self.layers.last().unwrap();
        let (w, b) = (&p[out_off..out_off + 2 * hl], &p[out_off + 2 * hl..out_off + 2 * hl + 2]);
        let out = traces.last().unwrap().steps.iter().map(|s| {
            let y = affine(w, b, &s.h);
            [y[0], y[1]]
        });
        GenTrace { z: z.to_vec(), h0: h0s, out: out.collect(), traces }
    }

    pub fn backward(&self, p: &[f64], tr: &GenTrace, dout: &[[f64; 2]], grad: &mut [f64]) {
        let (proj, cells, out_off, _) = self.layout();
        let r = self.r;
        let hl = *self.layers.last().unwrap();
        let top = tr.traces.last().unwrap();
        let mut dhs: Vec<Vec<f64>> = Vec::with_capacity(self.m);
        {
            let (gw, rest) = grad[out_off..].split_at_mut(2 * hl);
            for (s, d) in top.steps.iter().zip(dout) {
                dhs.push(affine_back(&p[out_off..out_off + 2 * hl], &s.h, d, gw, &mut rest[..2]));
            }
        }
        let cellv = self.cells();
        for l in (0..self.layers.len()).rev() {
            let cell = cellv[l];
            let (o, h) = (cells[l], cell.h);
            let (dxs, dh0, dc0) = cell.backward(&p[o..o + cell.len()], &tr.traces[l], &dhs, &mut grad[o..o + cell.len()]);
            let op = proj[l];
            let dpre: Vec<f64> = dh0.iter().zip(&tr.h0[l]).map(|(d, v)| d * (1.0 - v * v)).collect();
            {
                let (gw, gb) = grad[op..op + h * r + h].split_at_mut(h * r);
                affine_back(&p[op..op + h * r], &tr.z, &dpre, gw, gb);
            }
            let oc = op + h * r + h;
            {
                let (gw, gb) = grad[oc..oc + h * r + h].split_at_mut(h * r);
                affine_back(&p[oc..oc + h * r], &tr.z, &dc0, gw, gb);
            }
            dhs = dxs;
        }
    }
}

/// Stacked recurrent layers over per-step `(x, y, s dx, s dy)` inputs with a
/// sigmoid unit on the last hidden state. With `s = (m - 1) / 4` a movement
/// spanning the frame yields displacement inputs of order one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DiscNet {
    pub m: usize,
    pub layers: Vec<usize>,
}

pub(crate) struct DiscTrace {
    traces: Vec<Trace>,
    pub logit: f64,
}

pub(crate) const DISC_INPUTS: usize = 4;

/// Gain on the per-step displacement channels, relative to `m - 1`.
const DELTA_GAIN: f64 = 0.25;

impl DiscNet {
    fn cells(&self) -> Vec<Lstm> {
        self.layers.iter().enumerate().map(|(l, &h)| Lstm { n_in: if l == 0 { DISC_INPUTS } else { self.layers[l - 1] }, h }).collect()
    }

    fn layout(&self) -> (Vec<usize>, usize, usize) {
        let mut off = 0;
        let cells = self
            .cells()
            .iter()
            .map(|c| {
                let o = off;
                off += c.len();
                o
            })
            .collect();
        let out = off;
        (cells, out, out + self.layers.last().unwrap() + 1)
    }

    pub fn len(&self) -> usize {
        self.layout().2
    }

    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let (cells, out, n) = self.layout();
        let mut p = vec![0.0; n];
        for (c, &o) in self.cells().iter().zip(&cells) {
            c.init(&mut p[o..o + c.len()], rng);
        }
        let hl = *self.layers.last().unwrap();
        uniform(&mut p[out..out + hl], 1.0 / (hl as f64).sqrt(), rng);
        p
    }

    fn scale(&self) -> f64 {
        DELTA_GAIN * (self.m - 1) as f64
    }

    fn inputs(&self, seq: &[[f64; 2]]) -> Vec<Vec<f64>> {
        let s = self.scale();
        (0..seq.len())
            .map(|t| {
                let (dx, dy) = if t == 0 { (0.0, 0.0) } else { (seq[t][0] - seq[t - 1][0], seq[t][1] - seq[t - 1][1]) };
                vec![seq[t][0], seq[t][1], s * dx, s * dy]
            })
            .collect()
    }

    pub fn forward(&self, p: &[f64], seq: &[[f64; 2]]) -> DiscTrace {
        let (cells, out, _) = self.layout();
        let mut xs = self.inputs(seq);
        let mut traces = Vec::new();
        for (cell, &o) in self.cells().iter().zip(&cells) {
            let zero = vec![0.0; cell.h];
            let tr = cell.forward(&p[o..o + cell.len()], &xs, &zero, &zero);
            xs = tr.outputs();
            traces.push(tr);
        }
        let hl = *self.layers.last().unwrap();
        let logit = affine(&p[out..out + hl], &p[out + hl..out + hl + 1], traces.last().unwrap().last_h())[0];
        DiscTrace { traces, logit }
    }

    pub fn prob(&self, p: &[f64], seq: &[[f64; 2]]) -> f64 {
        sigmoid(self.forward(p, seq).logit)
    }

    /// Accumulates parameter gradients for `dL/dlogit` and returns `dL/dseq`.
    pub fn backward(&self, p: &[f64], tr: &DiscTrace, dlogit: f64, grad: &mut [f64]) -> Vec<[f64; 2]> {
        let (cells, out, _) = self.layout();
        let hl = *self.layers.last().unwrap();
        let steps = tr.traces[0].steps.len();
        let mut dhs = vec![vec![0.0; hl]; steps];
        {
            let (gw, gb) = grad[out..out + hl + 1].split_at_mut(hl);
            dhs[steps - 1] = affine_back(&p[out..out + hl], tr.traces.last().unwrap().last_h(), &[dlogit], gw, gb);
        }
        let cellv = self.cells();
        for l in (0..self.layers.len()).rev() {
            let (cell, o) = (cellv[l], cells[l]);
            let (dxs, _, _) = cell.backward(&p[o..o + cell.len()], &tr.traces[l], &dhs, &mut grad[o..o + cell.len()]);
            dhs = dxs;
        }
        let s = self.scale();
        let mut dseq = vec![[0.0; 2]; steps];
        for t in 0..steps {
            for a in 0..2 {
                dseq[t][a] += dhs[t][a];
                if t > 0 {
                    dseq[t][a] += s * dhs[t][2 + a];
                    dseq[t - 1][a] -= s * dhs[t][2 + a];
                }
            }
        }
        dseq
    }

    #[cfg(test)]
    pub fn zero_readout(&self, p: &mut [f64]) {
        let (_, out, n) = self.layout();
        p[out..n].iter_mut().for_each(|v| *v = 0.0);
    }
}
