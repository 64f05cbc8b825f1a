//! Fully connected network with one sigmoid output, trained on binary
//! cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the pre-activation.
    fn grad(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - z.tanh().powi(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig { hidden: vec![64], activation: Activation::Relu, lr: 1e-3, epochs: 100, batch: 32, seed: 0 }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Cross-entropy of a logit against a binary target, stable for large |z|.
pub(crate) fn bce_logit(z: f64, human: bool) -> f64 {
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    softplus - if human { z } else { 0.0 }
}

/// Weights are stored flat: for each layer a row-major `out x in` matrix
/// followed by its bias vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub params: Vec<f64>,
}

impl Mlp {
    /// Hidden layers get He-uniform weights; the output layer starts at zero,
    /// so an untrained network predicts 0.5 everywhere.
    pub fn init(input: usize, cfg: &MlpConfig, rng: &mut impl Rng) -> Result<Mlp> {
        if input == 0 || cfg.hidden.contains(&0) {
            return Err(Error::Config("layer sizes must be positive".into()));
        }
        let mut sizes = vec![input];
        sizes.extend(&cfg.hidden);
        sizes.push(1);
        let mut params = Vec::new();
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let last = l == sizes.len() - 2;
            let bound = (6.0 / fan_in as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(if last { 0.0 } else { rng.random_range(-bound..bound) });
            }
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Ok(Mlp { sizes, activation: cfg.activation, params })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        // (offset, in, out)
        let mut off = 0;
        self.sizes.windows(2).map(move |w| {
            let o = off;
            off += w[0] * w[1] + w[1];
            (o, w[0], w[1])
        })
    }

    /// Pre-activations of every layer for one row.
    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(self.sizes.len() - 1);
        let mut a = x.to_vec();
        let n_layers = self.sizes.len() - 1;
        for (l, (off, n_in, n_out)) in self.layers().enumerate() {
            let w = &params[off..off + n_in * n_out];
            let b = &params[off + n_in * n_out..off + n_in * n_out + n_out];
            let z: Vec<f64> = (0..n_out).map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(&a).map(|(w, a)| w * a).sum::<f64>()).collect();
            a = if l + 1 < n_layers { z.iter().map(|&v| self.activation.apply(v)).collect() } else { z.clone() };
            pre.push(z);
        }
        pre
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.forward(&self.params, x).last().unwrap()[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Mean cross-entropy over the rows and its gradient with respect to a
    /// flat parameter vector of this network's layout.
    pub fn loss_and_grad(&self, params: &[f64], xs: &[&[f64]], ys: &[bool]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let layers: Vec<(usize, usize, usize)> = self.layers().collect();
        let inv = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let pre = self.forward(params, x);
            let z = pre.last().unwrap()[0];
            loss += bce_logit(z, y);
            let mut delta = vec![(sigmoid(z) - if y { 1.0 } else { 0.0 }) * inv];
            for l in (0..layers.len()).rev() {
                let (off, n_in, n_out) = layers[l];
                let input: Vec<f64> = if l == 0 { x.to_vec() } else { pre[l - 1].iter().map(|&v| self.activation.apply(v)).collect() };
                for o in 0..n_out {
                    for i in 0..n_in {
                        grad[off + o * n_in + i] += delta[o] * input[i];
                    }
                    grad[off + n_in * n_out + o] += delta[o];
                }
                if l > 0 {
                    let w = &params[off..off + n_in * n_out];
                    delta = (0..n_in).map(|i| (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum::<f64>() * self.activation.grad(pre[l - 1][i])).collect();
                }
            }
        }
        (loss * inv, grad)
    }
}

/// Minibatch Adam training. Aborts with a numeric error naming the epoch and
/// batch if the loss or any parameter stops being finite.
pub fn train_mlp(x: &[Vec<f64>], y: &[bool], cfg: &MlpConfig) -> Result<Mlp> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows for {} labels", x.len(), y.len())));
    }
    if cfg.batch == 0 {
        return Err(Error::Config("batch must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Mlp::init(x[0].len(), cfg, &mut rng)?;
    let mut opt = Adam::new(AdamConfig { lr: cfg.lr, ..Default::default() }, net.params.len());
    let mut order: Vec<usize> = (0..x.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch).enumerate() {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| x[i].as_slice()).collect();
            let ys: Vec<bool> = chunk.iter().map(|&i| y[i]).collect();
            let (loss, grad) = net.loss_and_grad(&net.params, &xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("MLP loss {loss} at epoch {epoch}, batch {b}")));
            }
            opt.step(&mut net.params, &grad);
            if net.params.iter().any(|p| !p.is_finite()) {
                return Err(Error::Numeric(format!("MLP parameters overflowed at epoch {epoch}, batch {b}")));
            }
        }
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xor(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let a = a + 0.3 * a.signum();
                let b = b + 0.3 * b.signum();
                (vec![a, b], a * b > 0.0)
            })
            .unzip()
    }

    #[test]
    fn runaway_learning_rate_is_a_numeric_error() {
        let (x, y) = xor(64, 3);
        let cfg = MlpConfig { lr: 1e300, epochs: 5, ..Default::default() };
        assert!(matches!(train_mlp(&x, &y, &cfg), Err(Error::Numeric(_))));
    }

    fn accuracy(m: &Mlp, x: &[Vec<f64>], y: &[bool]) -> f64 {
        x.iter().zip(y).filter(|(r, &l)| (m.predict_proba(r) >= 0.5) == l).count() as f64 / x.len() as f64
    }

    #[test]
    fn learns_xor() {
        let (x, y) = xor(400, 1);
        let m = train_mlp(&x, &y, &MlpConfig { seed: 2, ..Default::default() }).unwrap();
        assert!(accuracy(&m, &x, &y) >= 0.95, "{}", accuracy(&m, &x, &y));
    }

    #[test]
    fn zero_epochs_is_chance() {
        let (x, y) = xor(200, 3);
        let m = train_mlp(&x, &y, &MlpConfig { epochs: 0, ..Default::default() }).unwrap();
        assert!(x.iter().all(|r| m.predict_proba(r) == 0.5));
        assert!((accuracy(&m, &x, &y) - 0.5).abs() <= 0.1);
    }

    #[test]
    fn gradient_matches_central_differences() {
        for act in [Activation::Relu, Activation::Tanh] {
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let cfg = MlpConfig { hidden: vec![6, 4], activation: act, ..Default::default() };
            let mut m = Mlp::init(3, &cfg, &mut rng).unwrap();
            for p in &mut m.params {
                *p += rng.random_range(-0.5..0.5);
            }
            let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let xs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
            let ys = [true, false, true, true, false];
            let (_, g) = m.loss_and_grad(&m.params, &xs, &ys);
            let h = 1e-6;
            let mut worst: f64 = 0.0;
            for i in 0..m.params.len() {
                let mut p = m.params.clone();
                p[i] += h;
                let up = m.loss_and_grad(&p, &xs, &ys).0;
                p[i] -= 2.0 * h;
                let down = m.loss_and_grad(&p, &xs, &ys).0;
                let fd = (up - down) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3));
            }
            assert!(worst <= 1e-4, "{act:?}: {worst}");
        }
    }

    #[test]
    fn stable_loss_at_extremes() {
        assert!((bce_logit(0.0, true) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(bce_logit(800.0, true) < 1e-300);
        assert!((bce_logit(800.0, false) - 800.0).abs() < 1e-9);
        assert_eq!(sigmoid(-800.0), 0.0);
    }

    #[test]
    fn same_seed_same_weights() {
        let (x, y) = xor(64, 5);
        let cfg = MlpConfig { epochs: 3, seed: 9, ..Default::default() };
        assert_eq!(train_mlp(&x, &y, &cfg).unwrap(), train_mlp(&x, &y, &cfg).unwrap());
    }

    #[test]
    fn permuted_features_give_matching_label_shares() {
        let (x, y) = xor(400, 6);
        let swap = |r: &Vec<f64>| vec![r[1], r[0]];
        let a = train_mlp(&x, &y, &MlpConfig { seed: 2, ..Default::default() }).unwrap();
        let b = train_mlp(&x.iter().map(swap).collect::<Vec<_>>(), &y, &MlpConfig { seed: 2, ..Default::default() }).unwrap();
        let (probe, _) = xor(1000, 7);
        let share = |m: &Mlp, f: &dyn Fn(&Vec<f64>) -> Vec<f64>| probe.iter().filter(|r| m.predict_proba(&f(r)) >= 0.5).count() as f64 / 1000.0;
        let sa = share(&a, &|r| r.clone());
        let sb = share(&b, &swap);
        assert!((sa - sb).abs() <= 0.02, "{sa} vs {sb}");
    }
}
