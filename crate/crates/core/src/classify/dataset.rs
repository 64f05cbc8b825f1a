use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::tags::{AttackType, Direction};

/// One labelled feature row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub features: Vec<f64>,
    pub attack: AttackType,
    pub direction: Option<Direction>,
}

impl Sample {
    pub fn is_human(&self) -> bool {
        self.attack.is_human()
    }
}

/// Feature rows sharing one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub set: FeatureSet,
    pub samples: Vec<Sample>,
}

impl LabeledDataset {
    pub fn new(set: FeatureSet, samples: Vec<Sample>) -> Result<Self> {
        for s in &samples {
            if s.features.len() != set.dim() {
                return Err(Error::Schema(format!("sample '{}' has {} features, {set} expects {}", s.id, s.features.len(), set.dim())));
            }
        }
        Ok(LabeledDataset { set, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.samples.iter().map(Sample::is_human).collect()
    }

    pub fn rows(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter().map(|&i| self.samples[i].features.clone()).collect()
    }

    pub fn select(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset { set: self.set, samples: idx.iter().map(|&i| self.samples[i].clone()).collect() }
    }

    pub fn subset(&self, keep: impl Fn(&Sample) -> bool) -> LabeledDataset {
        LabeledDataset { set: self.set, samples: self.samples.iter().filter(|s| keep(s)).cloned().collect() }
    }
}

/// Per-feature z-scoring fitted on training rows only. Constant features
/// pass through untouched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    /// Mean and sample (n - 1) standard deviation of each column.
    pub fn fit(rows: &[Vec<f64>]) -> Result<Scaler> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidInput("cannot fit a scaler on no rows".into()));
        };
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Schema("rows differ in length".into()));
        }
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let std = (0..d)
            .map(|j| {
                if rows.len() < 2 {
                    return 0.0;
                }
                (rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            })
            .collect();
        Ok(Scaler { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::Schema(format!("row has {} features, scaler expects {}", row.len(), self.dim())));
        }
        Ok(row.iter().zip(self.mean.iter().zip(&self.std)).map(|(x, (m, s))| if *s > 0.0 { (x - m) / s } else { *x }).collect())
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// Scaled training rows, scaled held-out rows and the fitted scaler.
pub type Standardized = (Vec<Vec<f64>>, Vec<Vec<f64>>, Scaler);

/// Fits on `train` and scales both sets with the training statistics.
pub fn standardize(train: &[Vec<f64>], apply_to: &[Vec<f64>]) -> Result<Standardized> {
    let scaler = Scaler::fit(train)?;
    Ok((scaler.apply_all(train)?, scaler.apply_all(apply_to)?, scaler))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_column_unchanged() {
        let rows = vec![vec![5.0, 1.0], vec![5.0, 3.0]];
        let (tr, _, sc) = standardize(&rows, &[]).unwrap();
        assert_eq!(tr[0][0], 5.0);
        assert_eq!(sc.mean[1], 2.0);
        assert!((sc.std[1] - 2f64.sqrt()).abs() < 1e-15);
        assert!((tr[1][1] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((tr[1][1] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn test_rows_use_train_statistics() {
        let train = vec![vec![0.0], vec![2.0]];
        let test = vec![vec![10.0], vec![12.0]];
        let (_, te, sc) = standardize(&train, &test).unwrap();
        assert_eq!(sc.mean, vec![1.0]);
        let mean_test: f64 = te.iter().map(|r| r[0]).sum::<f64>() / 2.0;
        assert!(mean_test > 5.0);
    }

    #[test]
    fn schema_mismatch_rejected() {
        let sc = Scaler::fit(&[vec![1.0, 2.0]]).unwrap();
        assert!(matches!(sc.apply(&[1.0]), Err(Error::Schema(_))));
        assert!(Scaler::fit(&[]).is_err());
        let bad = LabeledDataset::new(FeatureSet::Global, vec![Sample { id: "a".into(), features: vec![1.0], attack: AttackType::Human, direction: None }]);
        assert!(matches!(bad, Err(Error::Schema(_))));
    }
}
