//! Random forests, extra-trees and bagging over CART trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{Grower, Thresholds};
use super::{Dataset, LearnError, TreeModel, TreeParams};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForestVariant {
    RandomForest,
    ExtraTrees,
    Bagging,
}

impl ForestVariant {
    pub fn short(self) -> &'static str {
        match self {
            ForestVariant::RandomForest => "RF",
            ForestVariant::ExtraTrees => "ET",
            ForestVariant::Bagging => "Bagging",
        }
    }

    fn default_bootstrap(self) -> bool {
        !matches!(self, ForestVariant::ExtraTrees)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub variant: ForestVariant,
    pub n_trees: usize,
    /// Features tried per split; `None` is `floor(sqrt(p))`, or all
    /// features for bagging.
    pub features_per_split: Option<usize>,
    /// Overrides the variant's usual row sampling.
    pub bootstrap: Option<bool>,
    pub tree: TreeParams,
    pub seed: u64,
}

impl ForestParams {
    pub fn new(variant: ForestVariant) -> Self {
        Self { variant, n_trees: 100, features_per_split: None, bootstrap: None, tree: TreeParams::default(), seed: 1 }
    }

    pub fn features_per_split(&self, p: usize) -> usize {
        let default = match self.variant {
            ForestVariant::Bagging => p,
            _ => ((p as f64).sqrt().floor() as usize).max(1),
        };
        self.features_per_split.unwrap_or(default).clamp(1, p.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub variant: ForestVariant,
    pub n_trees: usize,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub master_seed: u64,
    pub trees: Vec<TreeModel>,
}

impl ForestModel {
    /// Mean of the trees' positive-class fractions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        let mut sum = 0.0;
        for t in &self.trees {
            sum += t.predict_proba(x)?;
        }
        Ok(sum / self.trees.len() as f64)
    }
}

/// Tree `i` draws from its own stream seeded `seed::mix(master, i)`, so the
/// result does not depend on how trees are scheduled across threads.
pub fn train_forest(data: &Dataset, params: &ForestParams) -> Result<ForestModel, LearnError> {
    if params.n_trees == 0 {
        return Err(LearnError::NoTrees);
    }
    let min = params.tree.min_samples_split.max(1);
    if data.len() < min || data.is_empty() {
        return Err(LearnError::TooFewRows { rows: data.len(), min });
    }
    let p = data.n_features();
    if p == 0 {
        return Err(LearnError::NoFeatures);
    }
    let mtry = params.features_per_split(p);
    let bootstrap = params.bootstrap.unwrap_or(params.variant.default_bootstrap());
    let thresholds = match params.variant {
        ForestVariant::ExtraTrees => Thresholds::Random,
        _ => Thresholds::Midpoints,
    };
    let n = data.len();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| {
            let tree_seed = seed::mix(params.seed, i as u64);
            let mut rng = seed::rng(tree_seed);
            let sample: Vec<usize> =
                if bootstrap { (0..n).map(|_| rng.gen_range(0..n)).collect() } else { (0..n).collect() };
            let sampled_features = (mtry < p).then_some(mtry);
            let nodes =
                Grower::new(&data.rows, &data.labels, params.tree, sampled_features, thresholds, rng).grow(sample);
            TreeModel {
                nodes,
                n_features: p,
                max_depth: params.tree.max_depth,
                min_samples_split: params.tree.min_samples_split,
                seed: tree_seed,
            }
        })
        .collect();
    Ok(ForestModel {
        variant: params.variant,
        n_trees: params.n_trees,
        features_per_split: mtry,
        bootstrap,
        master_seed: params.seed,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{train_tree, Node, Split};

    fn clusters(n: usize, seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = i % 2 == 0;
            let c = if y { 2.0 } else { -2.0 };
            rows.push(vec![c + rng.gen_range(-1.5..1.5), c + rng.gen_range(-1.5..1.5)]);
            labels.push(y);
        }
        Dataset::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let d = clusters(60, 1);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: Some(false),
            features_per_split: Some(2),
            ..ForestParams::new(ForestVariant::RandomForest)
        };
        let f = train_forest(&d, &params).unwrap();
        let t = train_tree(&d, &TreeParams::default(), 0).unwrap();
        assert_eq!(f.trees[0].nodes, t.nodes);
    }

    #[test]
    fn deterministic_and_accurate() {
        let train = clusters(200, 2);
        let test = clusters(200, 3);
        for variant in [ForestVariant::RandomForest, ForestVariant::ExtraTrees, ForestVariant::Bagging] {
            let params = ForestParams { seed: 9, ..ForestParams::new(variant) };
            let a = train_forest(&train, &params).unwrap();
            let b = train_forest(&train, &params).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.trees.len(), 100);
            let correct =
                test.rows.iter().zip(&test.labels).filter(|(x, y)| (a.predict_proba(x).unwrap() >= 0.5) == **y).count();
            assert!(correct as f64 / 200.0 >= 0.95, "{variant:?}: {correct}");
            for t in &a.trees {
                t.check().unwrap();
            }
        }
    }

    #[test]
    fn bootstrap_trees_differ() {
        let d = clusters(50, 4);
        let f = train_forest(&d, &ForestParams { n_trees: 3, ..ForestParams::new(ForestVariant::Bagging) }).unwrap();
        assert!(f.bootstrap);
        assert_ne!(f.trees[0].nodes, f.trees[1].nodes);
        for t in &f.trees {
            assert_eq!(t.nodes[0].cover, 50);
            t.check().unwrap();
        }
        assert_eq!(f.features_per_split, 2);
    }

    #[test]
    fn hand_built_forest_mean() {
        let leaf = |pos: u32, cover: u32| Node { split: None, class_counts: [cover - pos, pos], cover };
        let stump = |threshold: f64, l: Node, r: Node| TreeModel {
            nodes: vec![
                Node {
                    split: Some(Split { feature: 0, threshold, left: 1, right: 2 }),
                    class_counts: [l.class_counts[0] + r.class_counts[0], l.class_counts[1] + r.class_counts[1]],
                    cover: l.cover + r.cover,
                },
                l,
                r,
            ],
            n_features: 1,
            max_depth: None,
            min_samples_split: 2,
            seed: 0,
        };
        let f = ForestModel {
            variant: ForestVariant::RandomForest,
            n_trees: 2,
            features_per_split: 1,
            bootstrap: true,
            master_seed: 0,
            trees: vec![stump(0.0, leaf(1, 4), leaf(3, 4)), stump(1.0, leaf(0, 2), leaf(2, 2))],
        };
        assert_eq!(f.predict_proba(&[-1.0]).unwrap(), (0.25 + 0.0) / 2.0);
        assert_eq!(f.predict_proba(&[0.5]).unwrap(), (0.75 + 0.0) / 2.0);
        assert_eq!(f.predict_proba(&[2.0]).unwrap(), (0.75 + 1.0) / 2.0);

        let same = ForestModel { trees: vec![f.trees[0].clone(); 3], n_trees: 3, ..f.clone() };
        assert_eq!(same.predict_proba(&[0.5]).unwrap(), f.trees[0].predict_proba(&[0.5]).unwrap());
    }

    #[test]
    fn zero_trees_rejected() {
        let d = clusters(10, 0);
        let params = ForestParams { n_trees: 0, ..ForestParams::new(ForestVariant::RandomForest) };
        assert_eq!(train_forest(&d, &params), Err(LearnError::NoTrees));
    }
}
