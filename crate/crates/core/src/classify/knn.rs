use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` rows nearest to `x`, closest first; equal distances
/// keep the lower row index first.
pub fn nearest(rows: &[Vec<f64>], x: &[f64], k: usize) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = rows.iter().enumerate().map(|(i, r)| (i, sq_dist(r, x))).collect();
    let k = k.min(d.len());
    if k == 0 {
        return Vec::new();
    }
    let by = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
    d.select_nth_unstable_by(k - 1, by);
    d.truncate(k);
    d.sort_by(by);
    d.into_iter().map(|(i, s)| (i, s.sqrt())).collect()
}

/// Stored training matrix; prediction is the human share of the `k` nearest rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl Knn {
    pub fn fit(rows: Vec<Vec<f64>>, labels: Vec<bool>, k: usize) -> Result<Knn> {
        if k == 0 {
            return Err(Error::Config("k must be positive".into()));
        }
        if rows.len() != labels.len() {
            return Err(Error::InvalidInput(format!("{} rows for {} labels", rows.len(), labels.len())));
        }
        if rows.len() < k {
            return Err(Error::InvalidInput(format!("k = {k} exceeds the {} training rows", rows.len())));
        }
        Ok(Knn { k, rows, labels })
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let nn = nearest(&self.rows, x, self.k);
        nn.iter().filter(|(i, _)| self.labels[*i]).count() as f64 / nn.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn k1_returns_own_label() {
        let rows = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![5.0, 5.0]];
        let m = Knn::fit(rows.clone(), vec![true, false, true], 1).unwrap();
        for (r, l) in rows.iter().zip([1.0, 0.0, 1.0]) {
            assert_eq!(m.predict_proba(r), l);
        }
    }

    #[test]
    fn vote_fraction() {
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let labels: Vec<bool> = (0..12).map(|i| !(7..11).contains(&i)).collect();
        // the ten nearest to -1 are rows 0..10: seven humans, three bots
        let m = Knn::fit(rows, labels, 10).unwrap();
        assert!((m.predict_proba(&[-1.0]) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ties_prefer_lower_index() {
        let rows = vec![vec![1.0], vec![-1.0], vec![1.0]];
        let nn = nearest(&rows, &[0.0], 2);
        assert_eq!(nn.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn bad_k_rejected() {
        assert!(matches!(Knn::fit(vec![vec![0.0]], vec![true], 0), Err(Error::Config(_))));
        assert!(Knn::fit(vec![vec![0.0]], vec![true], 2).is_err());
    }

    #[test]
    fn neighbour_set_matches_full_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random_range(0..20) as f64, rng.random_range(0..20) as f64]).collect();
        for q in 0..50 {
            let x = &rows[q * 4];
            // O(n^2) style oracle: rank every row by counting rows strictly before it
            let key = |i: usize| (sq_dist(&rows[i], x), i);
            let mut oracle: Vec<usize> =
                (0..rows.len()).filter(|&i| (0..rows.len()).filter(|&j| key(j).0 < key(i).0 || (key(j).0 == key(i).0 && j < i)).count() < 10).collect();
            oracle.sort_by(|&a, &b| key(a).0.total_cmp(&key(b).0).then(a.cmp(&b)));
            let got: Vec<usize> = nearest(&rows, x, 10).into_iter().map(|p| p.0).collect();
            assert_eq!(got, oracle);
        }
    }

    proptest! {
        #[test]
        fn feature_permutation_invariant(
            data in prop::collection::vec((prop::collection::vec(-50i32..50, 4), any::<bool>()), 12..60),
            query in prop::collection::vec(-50i32..50, 4),
            rot in 0usize..4,
        ) {
            prop_assume!(data.iter().any(|d| d.1) && data.iter().any(|d| !d.1));
            let to_f = |v: &Vec<i32>| v.iter().map(|&a| a as f64).collect::<Vec<f64>>();
            let perm = |v: Vec<f64>| { let mut v = v; v.rotate_left(rot); v.swap(0, 3); v };
            let rows: Vec<Vec<f64>> = data.iter().map(|d| to_f(&d.0)).collect();
            let labels: Vec<bool> = data.iter().map(|d| d.1).collect();
            let a = Knn::fit(rows.clone(), labels.clone(), 10).unwrap();
            let b = Knn::fit(rows.into_iter().map(perm).collect(), labels, 10).unwrap();
            prop_assert_eq!(a.predict_proba(&to_f(&query)), b.predict_proba(&perm(to_f(&query))));
        }
    }
}
