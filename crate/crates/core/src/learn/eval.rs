//! Classification metrics and stratified cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{class_name, Dataset, LearnError, ModelSpec};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    /// Macro average over the two classes.
    pub precision: f64,
    /// Macro average over the two classes.
    pub recall: f64,
    /// Harmonic mean of `precision` and `recall`.
    pub f1: f64,
    /// `None` when only one class is present.
    pub auc: Option<f64>,
}

/// Metrics at `threshold`: a probability at or above it predicts positive.
pub fn evaluate(y_true: &[bool], y_prob: &[f64], threshold: f64) -> Result<EvalMetrics, LearnError> {
    if y_true.len() != y_prob.len() {
        return Err(LearnError::LengthMismatch { rows: y_prob.len(), labels: y_true.len() });
    }
    if y_true.is_empty() {
        return Err(LearnError::NoRows);
    }
    // confusion[truth][prediction]
    let mut confusion = [[0u64; 2]; 2];
    for (&y, &p) in y_true.iter().zip(y_prob) {
        confusion[usize::from(y)][usize::from(p >= threshold)] += 1;
    }
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut precision = 0.0;
    let mut recall = 0.0;
    #[allow(clippy::needless_range_loop)]
    for c in 0..2 {
        let tp = confusion[c][c];
        precision += ratio(tp, confusion[0][c] + confusion[1][c]) / 2.0;
        recall += ratio(tp, confusion[c][0] + confusion[c][1]) / 2.0;
    }
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(EvalMetrics {
        accuracy: ratio(confusion[0][0] + confusion[1][1], y_true.len() as u64),
        precision,
        recall,
        f1,
        auc: auc(y_true, y_prob).ok(),
    })
}

/// Mann-Whitney AUC with midranks for tied scores.
pub fn auc(y_true: &[bool], y_prob: &[f64]) -> Result<f64, LearnError> {
    let n_pos = y_true.iter().filter(|y| **y).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(LearnError::AucUndefined);
    }
    let mut order: Vec<usize> = (0..y_prob.len()).collect();
    order.sort_by(|&a, &b| y_prob[a].total_cmp(&y_prob[b]));
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && y_prob[order[end]] == y_prob[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share their mean
        let midrank = (start + 1 + end) as f64 / 2.0;
        pos_rank_sum += midrank * order[start..end].iter().filter(|&&i| y_true[i]).count() as f64;
        start = end;
    }
    let u = pos_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos * n_neg) as f64)
}

/// Fold index per row. Each class is shuffled separately, then the classes
/// are laid end to end and dealt round-robin, so fold sizes differ by at
/// most one and class shares match as closely as the counts allow.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    if folds < 2 || folds > labels.len() {
        return Err(LearnError::BadFolds { folds, n: labels.len() });
    }
    let mut rng = seed::rng(seed::derive(seed, "folds"));
    let mut assignment = vec![0; labels.len()];
    let mut position = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < 2 {
            return Err(LearnError::ClassTooSmall { class: class_name(class), count: members.len() });
        }
        if members.len() < folds {
            log::warn!(
                "class {} has {} rows for {folds} folds; some folds will lack it",
                class_name(class),
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = position % folds;
            position += 1;
        }
    }
    Ok(assignment)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub model: String,
    pub folds: usize,
    pub seed: u64,
    pub per_fold: Vec<EvalMetrics>,
    pub mean: MetricSummary,
    /// Sample standard deviation across folds.
    pub std: MetricSummary,
    /// Metrics over the out-of-fold predictions of every row together.
    pub pooled: EvalMetrics,
    pub assignment: Vec<usize>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 { values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

fn summarize(folds: &[EvalMetrics]) -> (MetricSummary, MetricSummary) {
    let pick = |f: fn(&EvalMetrics) -> f64| mean_std(&folds.iter().map(f).collect::<Vec<_>>());
    let (acc, acc_sd) = pick(|m| m.accuracy);
    let (pr, pr_sd) = pick(|m| m.precision);
    let (rc, rc_sd) = pick(|m| m.recall);
    let (f1, f1_sd) = pick(|m| m.f1);
    let aucs: Vec<f64> = folds.iter().filter_map(|m| m.auc).collect();
    let (auc, auc_sd) = if aucs.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&aucs);
        (Some(m), Some(s))
    };
    (
        MetricSummary { accuracy: acc, precision: pr, recall: rc, f1, auc },
        MetricSummary { accuracy: acc_sd, precision: pr_sd, recall: rc_sd, f1: f1_sd, auc: auc_sd },
    )
}

/// Stratified k-fold cross-validation. Fold `f` trains with seed
/// `seed::mix(seed::derive(seed, "fit"), f)`; folds run in parallel.
pub fn cross_validate(data: &Dataset, spec: &ModelSpec, folds: usize, seed: u64) -> Result<CvReport, LearnError> {
    let assignment = stratified_folds(&data.labels, folds, seed)?;
    let fit_seed = seed::derive(seed, "fit");
    let results = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..data.len()).partition(|&i| assignment[i] == f);
            let model = spec.fit(&data.subset(&train), seed::mix(fit_seed, f as u64))?;
            let probs = test.iter().map(|&i| model.predict_proba(&data.rows[i])).collect::<Result<Vec<_>, _>>()?;
            let truth: Vec<bool> = test.iter().map(|&i| data.labels[i]).collect();
            let metrics = evaluate(&truth, &probs, 0.5)?;
            Ok((test, probs, metrics))
        })
        .collect::<Result<Vec<_>, LearnError>>()?;

    let mut pooled = vec![0.0; data.len()];
    let mut per_fold = Vec::with_capacity(folds);
    for (test, probs, metrics) in results {
        for (i, p) in test.into_iter().zip(probs) {
            pooled[i] = p;
        }
        per_fold.push(metrics);
    }
    let (mean, std) = summarize(&per_fold);
    Ok(CvReport {
        model: spec.name(),
        folds,
        seed,
        pooled: evaluate(&data.labels, &pooled, 0.5)?,
        per_fold,
        mean,
        std,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{ForestParams, ForestVariant, TreeParams};
    use rand::Rng;

    fn auc_oracle(y: &[bool], p: &[f64]) -> f64 {
        let mut score = 0.0;
        let mut pairs = 0.0;
        for i in 0..y.len() {
            for j in 0..y.len() {
                if y[i] && !y[j] {
                    pairs += 1.0;
                    score += if p[i] > p[j] {
                        1.0
                    } else if p[i] == p[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        score / pairs
    }

    #[test]
    fn perfect_classifier() {
        let y = [true, false, true, false];
        let m = evaluate(&y, &[1.0, 0.0, 1.0, 0.0], 0.5).unwrap();
        assert_eq!(m, EvalMetrics { accuracy: 1.0, precision: 1.0, recall: 1.0, f1: 1.0, auc: Some(1.0) });
    }

    #[test]
    fn uninformative_scores() {
        let y = [true, false, true, false];
        assert_eq!(evaluate(&y, &[0.5; 4], 0.5).unwrap().auc, Some(0.5));
    }

    #[test]
    fn auc_with_ties_matches_pairs() {
        let y = [true, false, true, true, false, false, true, false, true, false, false, true];
        let p = [0.9, 0.3, 0.6, 0.6, 0.6, 0.1, 0.8, 0.45, 0.2, 0.2, 0.7, 0.55];
        assert_eq!(auc(&y, &p).unwrap(), auc_oracle(&y, &p));
        let m = evaluate(&[true, true], &[0.2, 0.9], 0.5).unwrap();
        assert_eq!(m.auc, None);
        assert_eq!(m.accuracy, 0.5);
        assert_eq!(auc(&[true], &[0.1]), Err(LearnError::AucUndefined));
    }

    #[test]
    fn hand_confusion() {
        // tp=2 fn=1 fp=1 tn=2
        let y = [true, true, true, false, false, false];
        let p = [0.9, 0.6, 0.1, 0.7, 0.2, 0.3];
        let m = evaluate(&y, &p, 0.5).unwrap();
        assert_eq!(m.accuracy, 4.0 / 6.0);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
        // threshold ties go positive
        assert_eq!(evaluate(&[true], &[0.5], 0.5).unwrap().accuracy, 1.0);
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<bool> = (0..53).map(|i| i % 3 == 0).collect();
        let a = stratified_folds(&labels, 5, 7).unwrap();
        assert_eq!(a, stratified_folds(&labels, 5, 7).unwrap());
        assert_ne!(a, stratified_folds(&labels, 5, 8).unwrap());
        let pos = labels.iter().filter(|y| **y).count();
        for f in 0..5 {
            let members: Vec<usize> = (0..53).filter(|&i| a[i] == f).collect();
            assert!((10..=11).contains(&members.len()));
            let p = members.iter().filter(|&&i| labels[i]).count();
            assert!((p as f64 - pos as f64 / 5.0).abs() <= 1.0);
        }
        assert!(stratified_folds(&labels, 1, 0).is_err());
        assert!(stratified_folds(&[true, false, false], 2, 0).is_err());
    }

    fn separable(n: usize, seed: u64) -> Dataset {
        let mut rng = seed::rng(seed);
        let rows = (0..n)
            .map(|i| vec![if i % 2 == 0 { 3.0 } else { -3.0 } + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        Dataset::from_rows(rows, (0..n).map(|i| i % 2 == 0).collect()).unwrap()
    }

    #[test]
    fn cv_on_separable_data() {
        let d = separable(100, 1);
        for spec in [
            ModelSpec::Tree(TreeParams::default()),
            ModelSpec::Forest(ForestParams { n_trees: 20, ..ForestParams::new(ForestVariant::RandomForest) }),
            ModelSpec::Knn { k: 5 },
        ] {
            let r = cross_validate(&d, &spec, 5, 3).unwrap();
            assert!(r.mean.accuracy >= 0.95, "{}: {}", r.model, r.mean.accuracy);
            assert_eq!(r, cross_validate(&d, &spec, 5, 3).unwrap());
        }
    }

    #[test]
    fn leave_one_out() {
        let d = separable(6, 2);
        let r = cross_validate(&d, &ModelSpec::Tree(TreeParams::default()), 6, 0).unwrap();
        assert_eq!(r.per_fold.len(), 6);
        assert!(r.per_fold.iter().all(|m| m.auc.is_none()));
        assert_eq!(r.mean.auc, None);
        assert_eq!(r.pooled.accuracy, 1.0);
        assert_eq!(r.pooled.auc, Some(1.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn swapping_classes_preserves_macro_metrics(
                pairs in proptest::collection::vec((any::<bool>(), 0u8..=20), 2..40)
            ) {
                let y: Vec<bool> = pairs.iter().map(|p| p.0).collect();
                // grid of probabilities avoiding the 0.5 threshold itself
                let p: Vec<f64> = pairs.iter().map(|p| f64::from(p.1) / 20.0 + if p.1 == 10 { 0.01 } else { 0.0 }).collect();
                let ys: Vec<bool> = y.iter().map(|v| !v).collect();
                let ps: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
                let a = evaluate(&y, &p, 0.5).unwrap();
                let b = evaluate(&ys, &ps, 0.5).unwrap();
                prop_assert!((a.precision - b.precision).abs() < 1e-12);
                prop_assert!((a.recall - b.recall).abs() < 1e-12);
                prop_assert!((a.f1 - b.f1).abs() < 1e-12);
                if let (Some(x), Some(z)) = (a.auc, auc(&ys, &p).ok()) {
                    prop_assert!((x + z - 1.0).abs() < 1e-12);
                }
                if a.precision > 0.0 && a.recall > 0.0 {
                    prop_assert!((a.f1 - 2.0 * a.precision * a.recall / (a.precision + a.recall)).abs() < 1e-15);
                }
            }
        }
    }
}
