use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision threshold on the human probability.
pub const THRESHOLD: f64 = 0.5;

/// Binary scores with human as the positive class. `auc` is `None` when the
/// labels hold a single class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub acc: f64,
    pub auc: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_scores(scores: &[(f64, bool)]) -> Confusion {
        let mut c = Confusion::default();
        for &(s, human) in scores {
            match (s >= THRESHOLD, human) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.tn + self.fp + self.fn_)
    }

    /// `2tp / (2tp + fp + fn)`, the harmonic mean of precision and recall
    /// with a single rounding.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Area under the ROC curve by the trapezoid rule. Samples sharing a score
/// move the curve diagonally, which counts each tied human/bot pair as half.
pub fn auc(scores: &[(f64, bool)]) -> Result<f64> {
    let pos = scores.iter().filter(|s| s.1).count();
    let neg = scores.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Undefined("AUC needs both classes".into()));
    }
    if scores.iter().any(|s| s.0.is_nan()) {
        return Err(Error::Numeric("NaN score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let (tp0, fp0) = (tp, fp);
        let s = sorted[i].0;
        while i < sorted.len() && sorted[i].0 == s {
            if sorted[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
    }
    Ok(area / (pos as f64 * neg as f64))
}

/// Accuracy, precision, recall and F1 at [`THRESHOLD`], plus AUC when defined.
pub fn evaluate(scores: &[(f64, bool)]) -> Result<Metrics> {
    if scores.is_empty() {
        return Err(Error::InvalidInput("no scores to evaluate".into()));
    }
    let c = Confusion::from_scores(scores);
    let auc = match auc(scores) {
        Ok(a) => Some(a),
        Err(Error::Undefined(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(Metrics { acc: c.accuracy(), auc, precision: c.precision(), recall: c.recall(), f1: c.f1() })
}

/// Mean and (sample) standard deviation of repeated runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Metrics,
    pub std: Metrics,
    pub repeats: usize,
}

pub fn summarize(runs: &[Metrics]) -> Result<Summary> {
    if runs.is_empty() {
        return Err(Error::InvalidInput("no runs to summarise".into()));
    }
    let stat = |f: &dyn Fn(&Metrics) -> Option<f64>| -> (Option<f64>, Option<f64>) {
        let v: Vec<f64> = runs.iter().filter_map(f).collect();
        if v.is_empty() {
            return (None, None);
        }
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let s = if v.len() > 1 { (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
        (Some(m), Some(s))
    };
    let acc = stat(&|m| Some(m.acc));
    let auc = stat(&|m| m.auc);
    let p = stat(&|m| Some(m.precision));
    let r = stat(&|m| Some(m.recall));
    let f = stat(&|m| Some(m.f1));
    let pick = |x: (Option<f64>, Option<f64>), mean: bool| if mean { x.0.unwrap_or(0.0) } else { x.1.unwrap_or(0.0) };
    let build = |mean: bool| Metrics {
        acc: pick(acc, mean),
        auc: if mean { auc.0 } else { auc.1 },
        precision: pick(p, mean),
        recall: pick(r, mean),
        f1: pick(f, mean),
    };
    Ok(Summary { mean: build(true), std: build(false), repeats: runs.len() })
}
