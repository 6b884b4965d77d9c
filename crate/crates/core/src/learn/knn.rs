use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError};

/// k-nearest neighbours on z-scored columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_features: usize,
    /// Columns used in the metric; constant training columns are left out.
    pub active: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Standardised training rows restricted to `active`.
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl KnnModel {
    pub fn fit(data: &Dataset, k: usize) -> Result<Self, LearnError> {
        if k == 0 || k > data.len() {
            return Err(LearnError::BadK { k, n: data.len() });
        }
        let n = data.len() as f64;
        let (mut active, mut means, mut scales) = (Vec::new(), Vec::new(), Vec::new());
        for j in 0..data.n_features() {
            let col = data.column(j);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                active.push(j);
                means.push(mean);
                scales.push(var.sqrt());
            } else {
                log::warn!(
                    "kNN: column {} is constant in training data; left out of the metric",
                    data.feature_names[j]
                );
            }
        }
        let mut model = Self {
            k,
            n_features: data.n_features(),
            active,
            means,
            scales,
            rows: Vec::new(),
            labels: data.labels.clone(),
        };
        model.rows = data.rows.iter().map(|r| model.standardize(r)).collect();
        Ok(model)
    }

    fn standardize(&self, x: &[f64]) -> Vec<f64> {
        self.active.iter().enumerate().map(|(a, &j)| (x[j] - self.means[a]) / self.scales[a]).collect()
    }

    /// Positive fraction among the k nearest rows; equal distances favour
    /// the earlier row.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.n_features {
            return Err(LearnError::InputWidth { expected: self.n_features, found: x.len() });
        }
        let q = self.standardize(x);
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let pos = dist[..self.k].iter().filter(|(_, i)| self.labels[*i]).count();
        Ok(pos as f64 / self.k as f64)
    }
}

pub fn knn_predict(train: &Dataset, x: &[f64], k: usize) -> Result<f64, LearnError> {
    KnnModel::fit(train, k)?.predict_proba(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn points(n: usize, seed: u64) -> Dataset {
        let mut rng = crate::seed::rng(seed);
        let rows = (0..n).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..1.0), 4.0]).collect();
        let labels = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn k_equals_n_is_base_rate() {
        let d = points(15, 1);
        let p = knn_predict(&d, &[3.0, 0.5, 4.0], 15).unwrap();
        assert_eq!(p, d.positives() as f64 / 15.0);
    }

    #[test]
    fn zero_distance_neighbour() {
        let d = points(15, 2);
        for (x, y) in d.rows.iter().zip(&d.labels) {
            assert_eq!(knn_predict(&d, x, 1).unwrap(), f64::from(u8::from(*y)));
        }
    }

    #[test]
    fn matches_brute_force_sort() {
        let d = points(20, 3);
        let model = KnnModel::fit(&d, 3).unwrap();
        assert_eq!(model.active, [0, 1]);
        let mean_sd = |j: usize| {
            let c = d.column(j);
            let m = c.iter().sum::<f64>() / 20.0;
            (m, (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 20.0).sqrt())
        };
        let (m0, s0) = mean_sd(0);
        let (m1, s1) = mean_sd(1);
        let mut rng = crate::seed::rng(30);
        for _ in 0..25 {
            let q = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..1.0), 0.0];
            let mut all: Vec<(f64, usize)> = d
                .rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let a = (r[0] - m0) / s0 - (q[0] - m0) / s0;
                    let b = (r[1] - m1) / s1 - (q[1] - m1) / s1;
                    (a * a + b * b, i)
                })
                .collect();
            all.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let expect = all[..3].iter().filter(|(_, i)| d.labels[*i]).count() as f64 / 3.0;
            assert_eq!(model.predict_proba(&q).unwrap(), expect);
        }
    }

    #[test]
    fn tie_prefers_lower_index() {
        // zero mean, so the query 0 is exactly equidistant from every row
        let d = Dataset::from_rows(vec![vec![-1.0], vec![1.0], vec![1.0], vec![-1.0]], vec![true, false, false, false])
            .unwrap();
        assert_eq!(knn_predict(&d, &[0.0], 1).unwrap(), 1.0);
        assert_eq!(knn_predict(&d, &[1.0], 1).unwrap(), 0.0);
        assert_eq!(knn_predict(&d, &[0.0], 5), Err(LearnError::BadK { k: 5, n: 4 }));
    }
}
