//! Generators and brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Normal};

use vaxlens::learn::{Dataset, Node, Split, TreeModel, FEATURE_NAMES, N_FEATURES};
use vaxlens::seed;

/// Columns carrying the signal in [`planted_signal`].
pub const INFORMATIVE: [usize; 3] = [2, 7, 11];

/// Two-Gaussian data over the frozen 18-column schema: every column is
/// standard normal, and the three informative columns are shifted by
/// `+shift` for positives and `-shift` for negatives. Classes alternate.
pub fn planted_signal(n: usize, shift: f64, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let y = i % 2 == 0;
        let mut row: Vec<f64> = (0..N_FEATURES).map(|_| normal.sample(&mut rng)).collect();
        for &j in &INFORMATIVE {
            row[j] += if y { shift } else { -shift };
        }
        rows.push(row);
        labels.push(y);
    }
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    let ids = (0..n).map(|i| format!("r{i}")).collect();
    Dataset::new(names, rows, labels, ids).unwrap()
}

/// Small-integer features (plenty of ties) with a noisy label depending on
/// the first and last columns.
pub fn tied_dataset(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = seed::rng(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| f64::from(rng.gen_range(0..6u8))).collect()).collect();
    let labels = rows.iter().map(|r| r[0] + r[p - 1] + rng.gen_range(0.0..4.0) > 6.0).collect();
    Dataset::from_rows(rows, labels).unwrap()
}

/// A random tree built node by node rather than trained: features repeat
/// along paths, thresholds sit on a half-integer grid and covers are
/// arbitrary positive integers that add up.
pub fn random_structure(p: usize, max_depth: usize, rng: &mut impl Rng) -> TreeModel {
    fn grow(nodes: &mut Vec<Node>, p: usize, depth: usize, max_depth: usize, cover: u32, rng: &mut impl Rng) -> usize {
        let id = nodes.len();
        let split_here = depth < max_depth && cover >= 2 && (depth == 0 || rng.gen_bool(0.75));
        if !split_here {
            let pos = rng.gen_range(0..=cover);
            nodes.push(Node { split: None, class_counts: [cover - pos, pos], cover });
            return id;
        }
        nodes.push(Node { split: None, class_counts: [0, 0], cover });
        let left_cover = rng.gen_range(1..cover);
        let feature = rng.gen_range(0..p);
        let threshold = f64::from(rng.gen_range(0..8u8)) + 0.5;
        let l = grow(nodes, p, depth + 1, max_depth, left_cover, rng);
        let r = grow(nodes, p, depth + 1, max_depth, cover - left_cover, rng);
        let pos = nodes[l].class_counts[1] + nodes[r].class_counts[1];
        nodes[id] = Node {
            split: Some(Split { feature, threshold, left: l, right: r }),
            class_counts: [cover - pos, pos],
            cover,
        };
        id
    }
    let mut nodes = Vec::new();
    let cover = rng.gen_range(20..400);
    grow(&mut nodes, p, 0, max_depth, cover, rng);
    TreeModel { nodes, n_features: p, max_depth: Some(max_depth), min_samples_split: 2, seed: 0 }
}

/// Instance on the same grid as [`random_structure`] thresholds, so that
/// values equal to a threshold occur.
pub fn grid_instance(p: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..p).map(|_| f64::from(rng.gen_range(0..17u8)) * 0.5).collect()
}

/// Documents drawn from two topics with disjoint 20-word vocabularies.
/// Returns the documents and each one's true topic.
pub fn disjoint_corpus(n_docs: usize, len: usize, seed: u64) -> (Vec<Vec<String>>, Vec<usize>) {
    let mut rng = seed::rng(seed);
    let mut docs = Vec::with_capacity(n_docs);
    let mut truth = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let topic = d % 2;
        let prefix = if topic == 0 { "alpha" } else { "beta" };
        docs.push((0..len).map(|_| format!("{prefix}{:02}", rng.gen_range(0..20))).collect());
        truth.push(topic);
    }
    (docs, truth)
}

/// Largest gap between the two empirical CDFs, checked at every pooled
/// value with integer arithmetic.
pub fn ks_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let (n1, n2) = (xs.len() as u64, ys.len() as u64);
    let mut best = 0u64;
    for &t in xs.iter().chain(ys) {
        let cx = xs.iter().filter(|v| **v <= t).count() as u64;
        let cy = ys.iter().filter(|v| **v <= t).count() as u64;
        best = best.max((cx * n2).abs_diff(cy * n1));
    }
    best as f64 / (n1 * n2) as f64
}

/// Tau-b from an explicit pass over all pairs.
pub fn tau_b_oracle(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let (mut concordant, mut discordant, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = xs[i].partial_cmp(&xs[j]).unwrap();
            let dy = ys[i].partial_cmp(&ys[j]).unwrap();
            use std::cmp::Ordering::*;
            match (dx, dy) {
                (Equal, Equal) => {
                    tx += 1;
                    ty += 1;
                }
                (Equal, _) => tx += 1,
                (_, Equal) => ty += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    (concordant - discordant) as f64 / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt()
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

/// Every CART split candidate of one node: (feature, weighted Gini) for each
/// boundary between consecutive distinct values.
fn all_splits(data: &Dataset, idx: &[usize]) -> Vec<(usize, f64, f64)> {
    let n = idx.len();
    let mut out = Vec::new();
    for f in 0..data.n_features() {
        let mut values: Vec<f64> = idx.iter().map(|&i| data.rows[i][f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let cut = w[0];
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| data.rows[i][f] <= cut);
            let lp = l.iter().filter(|&&i| data.labels[i]).count();
            let rp = r.iter().filter(|&&i| data.labels[i]).count();
            let weighted = (l.len() as f64 * gini(lp, l.len()) + r.len() as f64 * gini(rp, r.len())) / n as f64;
            out.push((f, cut, weighted));
        }
    }
    out
}

/// Routes the training rows through a fitted tree and checks, node by node,
/// that the stored counts match, that each split attains the minimum
/// weighted Gini over every feature and boundary, and that each leaf had a
/// reason to stop. Returns a description of every violation.
pub fn gini_violations(tree: &TreeModel, data: &Dataset) -> Vec<String> {
    let mut problems = Vec::new();
    let mut stack = vec![(0usize, (0..data.len()).collect::<Vec<usize>>(), 0usize)];
    while let Some((at, idx, depth)) = stack.pop() {
        let node = &tree.nodes[at];
        let pos = idx.iter().filter(|&&i| data.labels[i]).count() as u32;
        if node.cover as usize != idx.len() || node.class_counts[1] != pos {
            problems.push(format!(
                "node {at}: stored counts {:?} but {} rows ({pos} positive) arrive",
                node.class_counts,
                idx.len()
            ));
            continue;
        }
        let candidates = all_splits(data, &idx);
        let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
        match &node.split {
            Some(s) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    idx.iter().partition(|&&i| data.rows[i][s.feature] <= s.threshold);
                if l.is_empty() || r.is_empty() {
                    problems.push(format!("node {at}: split leaves one side empty"));
                    continue;
                }
                let lp = l.iter().filter(|&&i| data.labels[i]).count();
                let rp = r.iter().filter(|&&i| data.labels[i]).count();
                let chosen =
                    (l.len() as f64 * gini(lp, l.len()) + r.len() as f64 * gini(rp, r.len())) / idx.len() as f64;
                if chosen > best + 1e-12 {
                    problems.push(format!("node {at}: split impurity {chosen} above optimum {best}"));
                }
                stack.push((s.left, l, depth + 1));
                stack.push((s.right, r, depth + 1));
            }
            None => {
                let pure = pos == 0 || pos as usize == idx.len();
                let capped = tree.max_depth.is_some_and(|d| depth >= d);
                let small = idx.len() < tree.min_samples_split.max(2);
                if !(pure || capped || small || candidates.is_empty()) {
                    problems.push(format!("node {at}: leaf could still split"));
                }
            }
        }
    }
    problems
}

/// Fraction of documents whose most probable topic matches the truth under
/// the better of the two labelings.
pub fn two_topic_purity(theta: &[Vec<f64>], truth: &[usize]) -> f64 {
    let argmax: Vec<usize> = theta.iter().map(|t| if t[0] >= t[1] { 0 } else { 1 }).collect();
    let agree = argmax.iter().zip(truth).filter(|(a, b)| a == b).count();
    let n = truth.len();
    agree.max(n - agree) as f64 / n as f64
}
