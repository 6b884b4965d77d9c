//! Shapley attributions for tree models: an exhaustive enumeration oracle,
//! the polynomial path-dependent TreeSHAP algorithm, dataset-level rankings,
//! ranking-guided ablation, and a comparison of feature correlation with
//! ranking distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learn::{cross_validate, CvReport, Dataset, LearnError, Model, ModelSpec, TreeModel};
use crate::stats::{kendall_tau_b, CorrelationMatrix};

/// Largest feature count the enumeration oracle accepts.
pub const MAX_EXACT_FEATURES: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("{0} features is too many for exact enumeration; use tree_shap")]
    TooManyFeatures(usize),
    #[error("tree {tree} node {node} has no cover")]
    MissingCover { tree: usize, node: usize },
    #[error("model has no trees to explain")]
    NoTrees,
    #[error("input has {found} features, model expects {expected}")]
    InputWidth { expected: usize, found: usize },
    #[error("no instances to explain")]
    NoInstances,
    #[error("feature names differ: {0}")]
    NameMismatch(String),
    #[error(transparent)]
    Learn(#[from] LearnError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapAttribution {
    pub values: Vec<f64>,
    /// Cover-weighted expected model output.
    pub base_value: f64,
    pub prediction: f64,
}

impl ShapAttribution {
    /// `base_value + sum(values) - prediction`.
    pub fn efficiency_gap(&self) -> f64 {
        self.base_value + self.values.iter().sum::<f64>() - self.prediction
    }
}

fn validate(trees: &[&TreeModel], x: &[f64]) -> Result<usize, ExplainError> {
    let Some(first) = trees.first() else { return Err(ExplainError::NoTrees) };
    let p = first.n_features;
    for (t, tree) in trees.iter().enumerate() {
        if tree.n_features != x.len() || tree.n_features != p {
            return Err(ExplainError::InputWidth { expected: tree.n_features, found: x.len() });
        }
        if let Some(node) = tree.nodes.iter().position(|n| n.cover == 0) {
            return Err(ExplainError::MissingCover { tree: t, node });
        }
    }
    Ok(p)
}

/// Expected output when features in `known` follow `x` and the rest are
/// averaged over both children in proportion to their covers.
fn conditional_expectation(tree: &TreeModel, at: usize, x: &[f64], known: u32) -> f64 {
    let node = &tree.nodes[at];
    let Some(s) = &node.split else { return node.value() };
    if known & (1 << s.feature) != 0 {
        let next = if x[s.feature] <= s.threshold { s.left } else { s.right };
        return conditional_expectation(tree, next, x, known);
    }
    let (l, r) = (&tree.nodes[s.left], &tree.nodes[s.right]);
    let total = f64::from(l.cover) + f64::from(r.cover);
    (f64::from(l.cover) * conditional_expectation(tree, s.left, x, known)
        + f64::from(r.cover) * conditional_expectation(tree, s.right, x, known))
        / total
}

fn mean_of(per_tree: Vec<ShapAttribution>, p: usize) -> ShapAttribution {
    let n = per_tree.len() as f64;
    let mut values = vec![0.0; p];
    let (mut base, mut pred) = (0.0, 0.0);
    for a in &per_tree {
        for (v, w) in values.iter_mut().zip(&a.values) {
            *v += w;
        }
        base += a.base_value;
        pred += a.prediction;
    }
    ShapAttribution { values: values.into_iter().map(|v| v / n).collect(), base_value: base / n, prediction: pred / n }
}

/// Shapley values by enumerating every coalition. Exponential in the
/// feature count; the reference the fast path is checked against.
pub fn exact_shapley(trees: &[&TreeModel], x: &[f64]) -> Result<ShapAttribution, ExplainError> {
    let p = validate(trees, x)?;
    if p > MAX_EXACT_FEATURES {
        return Err(ExplainError::TooManyFeatures(p));
    }
    // weight[s] = s! (p - s - 1)! / p!
    let mut weight = vec![0.0; p.max(1)];
    for (s, w) in weight.iter_mut().enumerate().take(p) {
        let mut v = 1.0 / p as f64;
        // 1 / (p * C(p-1, s))
        for j in 0..s {
            v *= (j + 1) as f64 / (p - 1 - j) as f64;
        }
        *w = v;
    }
    let per_tree = trees
        .iter()
        .map(|tree| {
            let v: Vec<f64> = (0..1u32 << p).map(|s| conditional_expectation(tree, 0, x, s)).collect();
            let mut values = vec![0.0; p];
            for (i, phi) in values.iter_mut().enumerate() {
                let bit = 1u32 << i;
                for s in (0..1u32 << p).filter(|s| s & bit == 0) {
                    *phi += weight[s.count_ones() as usize] * (v[(s | bit) as usize] - v[s as usize]);
                }
            }
            ShapAttribution { values, base_value: v[0], prediction: v[(1usize << p) - 1] }
        })
        .collect();
    Ok(mean_of(per_tree, p))
}

#[derive(Debug, Clone, Copy)]
struct PathElement {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    weight: f64,
}

fn extend(path: &mut Vec<PathElement>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    let d = path.len();
    path.push(PathElement { feature, zero_fraction, one_fraction, weight: if d == 0 { 1.0 } else { 0.0 } });
    let denom = (d + 1) as f64;
    for i in (0..d).rev() {
        path[i + 1].weight += one_fraction * path[i].weight * (i + 1) as f64 / denom;
        path[i].weight = zero_fraction * path[i].weight * (d - i) as f64 / denom;
    }
}

fn unwind(path: &mut Vec<PathElement>, index: usize) {
    let d = path.len() - 1;
    let PathElement { one_fraction: one, zero_fraction: zero, .. } = path[index];
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    for i in (0..d).rev() {
        if one != 0.0 {
            let held = path[i].weight;
            path[i].weight = next * denom / ((i + 1) as f64 * one);
            next = held - path[i].weight * zero * (d - i) as f64 / denom;
        } else {
            path[i].weight = path[i].weight * denom / (zero * (d - i) as f64);
        }
    }
    for i in index..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

/// Total permutation weight of the path with element `index` removed.
fn unwound_sum(path: &[PathElement], index: usize) -> f64 {
    let d = path.len() - 1;
    let PathElement { one_fraction: one, zero_fraction: zero, .. } = path[index];
    let denom = (d + 1) as f64;
    let mut next = path[d].weight;
    let mut total = 0.0;
    for i in (0..d).rev() {
        if one != 0.0 {
            let w = next * denom / ((i + 1) as f64 * one);
            total += w;
            next = path[i].weight - w * zero * (d - i) as f64 / denom;
        } else {
            total += path[i].weight / zero * denom / (d - i) as f64;
        }
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn shap_recurse(
    tree: &TreeModel,
    at: usize,
    x: &[f64],
    phi: &mut [f64],
    mut path: Vec<PathElement>,
    zero: f64,
    one: f64,
    feature: Option<usize>,
) {
    extend(&mut path, zero, one, feature);
    let node = &tree.nodes[at];
    let Some(s) = &node.split else {
        for i in 1..path.len() {
            let el = path[i];
            let f = el.feature.expect("only the root element lacks a feature");
            phi[f] += unwound_sum(&path, i) * (el.one_fraction - el.zero_fraction) * node.value();
        }
        return;
    };
    let (hot, cold) = if x[s.feature] <= s.threshold { (s.left, s.right) } else { (s.right, s.left) };
    let (mut in_zero, mut in_one) = (1.0, 1.0);
    if let Some(k) = (1..path.len()).find(|&k| path[k].feature == Some(s.feature)) {
        in_zero = path[k].zero_fraction;
        in_one = path[k].one_fraction;
        unwind(&mut path, k);
    }
    let cover = f64::from(node.cover);
    let hot_share = f64::from(tree.nodes[hot].cover) / cover;
    let cold_share = f64::from(tree.nodes[cold].cover) / cover;
    shap_recurse(tree, hot, x, phi, path.clone(), hot_share * in_zero, in_one, Some(s.feature));
    shap_recurse(tree, cold, x, phi, path, cold_share * in_zero, 0.0, Some(s.feature));
}

fn expected_value(tree: &TreeModel) -> f64 {
    let total = f64::from(tree.nodes[0].cover);
    tree.nodes.iter().filter(|n| n.is_leaf()).map(|n| f64::from(n.class_counts[1])).sum::<f64>() / total
}

/// Path-dependent TreeSHAP, averaged over the trees.
pub fn tree_shap(trees: &[&TreeModel], x: &[f64]) -> Result<ShapAttribution, ExplainError> {
    let p = validate(trees, x)?;
    let per_tree = trees
        .iter()
        .map(|tree| {
            let mut values = vec![0.0; p];
            shap_recurse(tree, 0, x, &mut values, Vec::new(), 1.0, 1.0, None);
            let prediction = tree.nodes[tree.leaf(x)].value();
            ShapAttribution { values, base_value: expected_value(tree), prediction }
        })
        .collect();
    Ok(mean_of(per_tree, p))
}

pub fn model_trees(model: &Model) -> Result<Vec<&TreeModel>, ExplainError> {
    model.trees().ok_or(ExplainError::NoTrees)
}

/// TreeSHAP for every row, computed in parallel.
pub fn explain_rows(trees: &[&TreeModel], rows: &[Vec<f64>]) -> Result<Vec<ShapAttribution>, ExplainError> {
    rows.par_iter().map(|x| tree_shap(trees, x)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapRanking {
    /// Most important first.
    pub features: Vec<String>,
    pub mean_abs: Vec<f64>,
}

impl ShapRanking {
    /// Orders by mean |value| descending; equal magnitudes keep `names` order.
    pub fn from_attributions(names: &[String], attributions: &[ShapAttribution]) -> Result<Self, ExplainError> {
        if attributions.is_empty() {
            return Err(ExplainError::NoInstances);
        }
        let n = attributions.len() as f64;
        let mut totals = vec![0.0; names.len()];
        for a in attributions {
            if a.values.len() != names.len() {
                return Err(ExplainError::InputWidth { expected: names.len(), found: a.values.len() });
            }
            for (t, v) in totals.iter_mut().zip(&a.values) {
                *t += v.abs();
            }
        }
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| totals[b].total_cmp(&totals[a]).then(a.cmp(&b)));
        Ok(Self {
            features: order.iter().map(|&j| names[j].clone()).collect(),
            mean_abs: order.iter().map(|&j| totals[j] / n).collect(),
        })
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f == name)
    }
}

pub fn shap_ranking(model: &Model, data: &Dataset) -> Result<ShapRanking, ExplainError> {
    let trees = model_trees(model)?;
    let attributions = explain_rows(&trees, &data.rows)?;
    ShapRanking::from_attributions(&data.feature_names, &attributions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    /// `w/o <feature> & BF`, or `All features`.
    pub label: String,
    pub dropped: Vec<String>,
    pub kept: Vec<String>,
    pub report: Option<CvReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// For each ranked feature, drops it together with everything ranked below
/// it and cross-validates on what is left; a final row keeps everything.
/// Kept columns stay in dataset order.
pub fn ablation_run(
    data: &Dataset,
    ranking: &ShapRanking,
    spec: &ModelSpec,
    folds: usize,
    seed: u64,
) -> Result<Vec<AblationRow>, ExplainError> {
    let mut ranked = ranking.features.clone();
    ranked.sort();
    let mut names = data.feature_names.clone();
    names.sort();
    if ranked != names {
        return Err(ExplainError::NameMismatch("ranking does not cover the dataset's features".into()));
    }
    let mut rows = Vec::with_capacity(ranking.features.len() + 1);
    for cut in 0..ranking.features.len() {
        let kept_names = &ranking.features[..cut];
        let dropped = ranking.features[cut..].to_vec();
        let label = format!("w/o {} & BF", ranking.features[cut]);
        if kept_names.is_empty() {
            rows.push(AblationRow {
                label,
                dropped,
                kept: vec![],
                report: None,
                note: Some("no features left; skipped".into()),
            });
            continue;
        }
        let columns: Vec<usize> =
            (0..data.n_features()).filter(|&j| kept_names.contains(&data.feature_names[j])).collect();
        let subset = data.select_features(&columns);
        let report = cross_validate(&subset, spec, folds, seed)?;
        rows.push(AblationRow { label, dropped, kept: subset.feature_names, report: Some(report), note: None });
    }
    rows.push(AblationRow {
        label: "All features".into(),
        dropped: vec![],
        kept: data.feature_names.clone(),
        report: Some(cross_validate(data, spec, folds, seed)?),
        note: None,
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairProximity {
    pub a: String,
    pub b: String,
    /// `None` when either column is constant.
    pub abs_correlation: Option<f64>,
    pub rank_distance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationVsRanking {
    /// Sorted by |correlation| descending, undefined correlations last.
    pub pairs: Vec<PairProximity>,
    /// Tau-b between |correlation| and negated rank distance over pairs
    /// with a defined correlation.
    pub kendall_tau_b: Option<f64>,
}

pub fn correlation_vs_ranking(
    corr: &CorrelationMatrix,
    ranking: &ShapRanking,
) -> Result<CorrelationVsRanking, ExplainError> {
    let mut a = corr.names.clone();
    let mut b = ranking.features.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(ExplainError::NameMismatch(format!(
            "correlation has {:?}, ranking has {:?}",
            corr.names, ranking.features
        )));
    }
    let rank: Vec<usize> = corr.names.iter().map(|n| ranking.position(n).expect("names checked")).collect();
    let mut pairs = Vec::new();
    for i in 0..corr.names.len() {
        for j in i + 1..corr.names.len() {
            pairs.push(PairProximity {
                a: corr.names[i].clone(),
                b: corr.names[j].clone(),
                abs_correlation: corr.get(i, j).map(f64::abs),
                rank_distance: rank[i].abs_diff(rank[j]),
            });
        }
    }
    // stable: equal magnitudes keep matrix order
    pairs.sort_by(|x, y| match (x.abs_correlation, y.abs_correlation) {
        (Some(p), Some(q)) => q.total_cmp(&p),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let (xs, ys): (Vec<f64>, Vec<f64>) =
        pairs.iter().filter_map(|p| p.abs_correlation.map(|c| (c, -(p.rank_distance as f64)))).unzip();
    let kendall_tau_b = kendall_tau_b(&xs, &ys).ok();
    Ok(CorrelationVsRanking { pairs, kendall_tau_b })
}
