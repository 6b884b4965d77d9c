//! CART classification trees with Gini impurity.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, LearnError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: None, min_samples_split: 2 }
    }
}

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub split: Option<Split>,
    /// Training rows reaching the node as `[negative, positive]`.
    pub class_counts: [u32; 2],
    pub cover: u32,
}

impl Node {
    /// Positive-class fraction of the rows reaching this node.
    pub fn value(&self) -> f64 {
        f64::from(self.class_counts[1]) / f64::from(self.cover)
    }

    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    /// Preorder; the root is node 0.
    pub nodes: Vec<Node>,
    pub n_features: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub seed: u64,
}

impl TreeModel {
    pub fn leaf(&self, x: &[f64]) -> usize {
        let mut at = 0;
        while let Some(s) = &self.nodes[at].split {
            at = if x[s.feature] <= s.threshold { s.left } else { s.right };
        }
        at
    }

    pub fn predict_proba(&self, x: &[f64]) -> Result<f64, LearnError> {
        if x.len() != self.n_features {
            return Err(LearnError::InputWidth { expected: self.n_features, found: x.len() });
        }
        Ok(self.nodes[self.leaf(x)].value())
    }

    pub fn depth(&self) -> usize {
        fn go(t: &TreeModel, at: usize) -> usize {
            match &t.nodes[at].split {
                None => 0,
                Some(s) => 1 + go(t, s.left).max(go(t, s.right)),
            }
        }
        go(self, 0)
    }

    /// Structural checks: covers telescope, counts add up, every node is
    /// reached exactly once from the root, thresholds are finite.
    pub fn check(&self) -> Result<(), String> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if std::mem::replace(&mut seen[at], true) {
                return Err(format!("node {at} reached twice"));
            }
            let n = &self.nodes[at];
            if n.class_counts[0] + n.class_counts[1] != n.cover || n.cover == 0 {
                return Err(format!("node {at}: counts {:?} vs cover {}", n.class_counts, n.cover));
            }
            if let Some(s) = &n.split {
                if !s.threshold.is_finite() || s.feature >= self.n_features {
                    return Err(format!("node {at}: bad split {s:?}"));
                }
                let (l, r) = (&self.nodes[s.left], &self.nodes[s.right]);
                if l.cover + r.cover != n.cover || l.class_counts[1] + r.class_counts[1] != n.class_counts[1] {
                    return Err(format!("node {at}: children do not sum to parent"));
                }
                stack.extend([s.left, s.right]);
            }
        }
        match seen.iter().position(|s| !s) {
            Some(at) => Err(format!("node {at} unreachable")),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Thresholds {
    /// Midpoints between consecutive distinct values, best one kept.
    Midpoints,
    /// One uniform draw between the node's min and max.
    Random,
}

pub(crate) struct Grower<'a> {
    rows: &'a [Vec<f64>],
    labels: &'a [bool],
    params: TreeParams,
    mtry: Option<usize>,
    thresholds: Thresholds,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

/// Split quality as the exact fraction `num / den`, where larger is purer:
/// `(l0^2 + l1^2) / n_l + (r0^2 + r1^2) / n_r` brought to a common
/// denominator. Maximising it minimises weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    num: u128,
    den: u128,
}

impl Candidate {
    fn new(feature: usize, threshold: f64, left: [u64; 2], right: [u64; 2]) -> Self {
        let sq = |c: [u64; 2]| u128::from(c[0] * c[0] + c[1] * c[1]);
        let nl = u128::from(left[0] + left[1]);
        let nr = u128::from(right[0] + right[1]);
        Self { feature, threshold, num: sq(left) * nr + sq(right) * nl, den: nl * nr }
    }

    fn beats(&self, other: &Candidate) -> bool {
        match (self.num * other.den).cmp(&(other.num * self.den)) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => (self.feature, self.threshold) < (other.feature, other.threshold),
        }
    }
}

fn counts(labels: &[bool], idx: &[usize]) -> [u64; 2] {
    let pos = idx.iter().filter(|&&i| labels[i]).count() as u64;
    [idx.len() as u64 - pos, pos]
}

impl<'a> Grower<'a> {
    pub(crate) fn new(
        rows: &'a [Vec<f64>],
        labels: &'a [bool],
        params: TreeParams,
        mtry: Option<usize>,
        thresholds: Thresholds,
        rng: ChaCha8Rng,
    ) -> Self {
        Self { rows, labels, params, mtry, thresholds, rng, nodes: Vec::new() }
    }

    pub(crate) fn grow(mut self, sample: Vec<usize>) -> Vec<Node> {
        self.build(sample, 0);
        self.nodes
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let c = counts(self.labels, &idx);
        let id = self.nodes.len();
        self.nodes.push(Node { split: None, class_counts: [c[0] as u32, c[1] as u32], cover: idx.len() as u32 });
        let pure = c[0] == 0 || c[1] == 0;
        let too_deep = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || too_deep || idx.len() < self.params.min_samples_split.max(2) {
            return id;
        }
        let Some(best) = self.best_split(&idx) else { return id };
        let (left, right): (Vec<usize>, Vec<usize>) =
            idx.iter().partition(|&&i| self.rows[i][best.feature] <= best.threshold);
        let l = self.build(left, depth + 1);
        let r = self.build(right, depth + 1);
        self.nodes[id].split = Some(Split { feature: best.feature, threshold: best.threshold, left: l, right: r });
        id
    }

    fn best_split(&mut self, idx: &[usize]) -> Option<Candidate> {
        let p = self.rows[idx[0]].len();
        let mut order: Vec<usize> = (0..p).collect();
        if self.mtry.is_some() {
            order.shuffle(&mut self.rng);
        }
        let quota = self.mtry.unwrap_or(p);
        let mut best: Option<Candidate> = None;
        // Keep drawing past the quota while nothing splittable has turned up.
        for (visited, &f) in order.iter().enumerate() {
            if visited >= quota && best.is_some() {
                break;
            }
            let cand = match self.thresholds {
                Thresholds::Midpoints => self.best_midpoint(idx, f),
                Thresholds::Random => self.random_threshold(idx, f),
            };
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.beats(b)) {
                    best = Some(c);
                }
            }
        }
        best
    }

    fn best_midpoint(&self, idx: &[usize], f: usize) -> Option<Candidate> {
        let mut sorted: Vec<(f64, bool)> = idx.iter().map(|&i| (self.rows[i][f], self.labels[i])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = counts(self.labels, idx);
        let mut left = [0u64; 2];
        let mut best: Option<Candidate> = None;
        for w in 0..sorted.len() - 1 {
            left[usize::from(sorted[w].1)] += 1;
            let (lo, hi) = (sorted[w].0, sorted[w + 1].0);
            if lo >= hi {
                continue;
            }
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            let c = Candidate::new(f, threshold, left, [total[0] - left[0], total[1] - left[1]]);
            if best.as_ref().is_none_or(|b| c.beats(b)) {
                best = Some(c);
            }
        }
        best
    }

    fn random_threshold(&mut self, idx: &[usize], f: usize) -> Option<Candidate> {
        let (lo, hi) = idx
            .iter()
            .map(|&i| self.rows[i][f])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo >= hi {
            return None;
        }
        let threshold = self.rng.gen_range(lo..hi);
        let (mut left, mut right) = ([0u64; 2], [0u64; 2]);
        for &i in idx {
            let side = if self.rows[i][f] <= threshold { &mut left } else { &mut right };
            side[usize::from(self.labels[i])] += 1;
        }
        Some(Candidate::new(f, threshold, left, right))
    }
}

/// Fits a single CART tree on every row. Deterministic; `seed` is recorded
/// for provenance only.
pub fn train_tree(data: &Dataset, params: &TreeParams, seed: u64) -> Result<TreeModel, LearnError> {
    let min = params.min_samples_split.max(1);
    if data.len() < min || data.is_empty() {
        return Err(LearnError::TooFewRows { rows: data.len(), min });
    }
    if data.n_features() == 0 {
        return Err(LearnError::NoFeatures);
    }
    let grower = Grower::new(&data.rows, &data.labels, *params, None, Thresholds::Midpoints, crate::seed::rng(seed));
    Ok(TreeModel {
        nodes: grower.grow((0..data.len()).collect()),
        n_features: data.n_features(),
        max_depth: params.max_depth,
        min_samples_split: params.min_samples_split,
        seed,
    })
}
