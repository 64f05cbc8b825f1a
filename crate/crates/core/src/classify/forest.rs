//! Bagged CART trees with Gini impurity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, max_depth: None, min_leaf: 1, features_per_split: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    Leaf { human: f64 },
}

/// Flat node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Human fraction of the training samples in the reached leaf.
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { human } => return human,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub dim: usize,
    pub trees: Vec<Tree>,
}

impl RandomForest {
    /// Fraction of trees whose leaf holds a human majority.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let votes = self.trees.iter().filter(|t| t.leaf_value(x) > 0.5).count();
        votes as f64 / self.trees.len() as f64
    }
}

/// Trains the forest; tree `i` draws from its own generator seeded with `seed + i`,
/// so the result does not depend on thread scheduling.
pub fn train_random_forest(x: &[Vec<f64>], y: &[bool], cfg: &ForestConfig) -> Result<RandomForest> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::InvalidInput(format!("{} rows for {} labels", x.len(), y.len())));
    }
    if y.iter().all(|&l| l) || y.iter().all(|&l| !l) {
        return Err(Error::InvalidInput("training set holds a single class".into()));
    }
    if cfg.n_trees == 0 || cfg.min_leaf == 0 {
        return Err(Error::Config("n_trees and min_leaf must be at least 1".into()));
    }
    let dim = x[0].len();
    if dim == 0 || x.iter().any(|r| r.len() != dim) {
        return Err(Error::Schema("rows must share a non-zero width".into()));
    }
    let mtry = cfg.features_per_split.unwrap_or_else(|| (dim as f64).sqrt().ceil() as usize).clamp(1, dim);
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let idx: Vec<usize> = if cfg.bootstrap { (0..x.len()).map(|_| rng.random_range(0..x.len())).collect() } else { (0..x.len()).collect() };
            let mut b = Builder { x, y, mtry, cfg, nodes: Vec::new(), rng };
            b.grow(idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(RandomForest { dim, trees })
}

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [bool],
    mtry: usize,
    cfg: &'a ForestConfig,
    nodes: Vec<Node>,
    rng: ChaCha8Rng,
}

pub(crate) fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl Builder<'_> {
    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let me = self.nodes.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(Node::Leaf { human: pos as f64 / idx.len() as f64 });
        let pure = pos == 0 || pos == idx.len();
        let capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if pure || capped || idx.len() < 2 * self.cfg.min_leaf {
            return me;
        }
        let Some((feature, threshold)) = self.best_split(&idx, pos) else {
            return me;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[me] = Node::Split { feature, threshold, left, right };
        me
    }

    /// Best Gini split over `mtry` random features; when none of them can
    /// split the node the remaining features are tried as well.
    fn best_split(&mut self, idx: &[usize], pos: usize) -> Option<(usize, f64)> {
        let dim = self.x[0].len();
        let mut order: Vec<usize> = (0..dim).collect();
        order.shuffle(&mut self.rng);
        let mut best: Option<(f64, usize, f64)> = None;
        for (k, &f) in order.iter().enumerate() {
            if k >= self.mtry && best.is_some() {
                break;
            }
            if let Some((gain, thr)) = best_threshold(self.x, self.y, idx, pos, f, self.cfg.min_leaf) {
                if best.is_none_or(|b| gain > b.0) {
                    best = Some((gain, f, thr));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Largest impurity decrease for one feature; thresholds sit halfway
/// between consecutive distinct values.
pub(crate) fn best_threshold(x: &[Vec<f64>], y: &[bool], idx: &[usize], pos: usize, f: usize, min_leaf: usize) -> Option<(f64, f64)> {
    let n = idx.len();
    let mut vals: Vec<(f64, bool)> = idx.iter().map(|&i| (x[i][f], y[i])).collect();
    vals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let parent = gini(pos, n);
    let mut left_pos = 0;
    let mut best: Option<(f64, f64)> = None;
    for k in 1..n {
        left_pos += vals[k - 1].1 as usize;
        if vals[k].0 == vals[k - 1].0 || k < min_leaf || n - k < min_leaf {
            continue;
        }
        let child = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(pos - left_pos, n - k)) / n as f64;
        let gain = parent - child;
        if gain > 0.0 && best.is_none_or(|b| gain > b.0) {
            let mut thr = 0.5 * (vals[k - 1].0 + vals[k].0);
            if thr >= vals[k].0 {
                thr = vals[k - 1].0;
            }
            best = Some((gain, thr));
        }
    }
    best
}
