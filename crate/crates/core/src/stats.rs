//! Statistical comparison kernels and per-class corpus analytics.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{clean_text, Corpus, Label};
use crate::lexicon::Lexicons;
use crate::syntax::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("sample is empty")]
    EmptySample,
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("degenerate ranking: every value on one side is tied")]
    DegenerateRanking,
    #[error("row {row} sums to {got}, expected {expected} raters")]
    UnequalRowSums { row: usize, got: u64, expected: u64 },
    #[error("no variation: all ratings fall into a single category")]
    NoVariation,
    #[error("class {0} has no word tokens")]
    NoTokens(Label),
    #[error("class {0} has no records with engagement counts")]
    NoCounts(Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
}

/// Survival function of the Kolmogorov distribution,
/// `Q(l) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 l^2)`, summed until a term
/// drops below 1e-12 and clamped to [0, 1].
pub fn kolmogorov_q(lambda: f64) -> f64 {
    // Below 0.2 the true value is within 1e-12 of 1 and the alternating
    // series needs a very large number of terms.
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1u32.. {
        let kf = f64::from(k);
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-12 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov-Smirnov test with an asymptotic p-value.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> Result<KsResult, StatsError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let mut a: Vec<f64> = xs.iter().map(|v| v + 0.0).collect();
    let mut b: Vec<f64> = ys.iter().map(|v| v + 0.0).collect();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n1, n2) = (a.len() as u64, b.len() as u64);
    // ECDF gaps are tracked as |i*n2 - j*n1| to stay exact under ties.
    let (mut i, mut j) = (0usize, 0usize);
    let mut best: u64 = 0;
    while i < a.len() && j < b.len() {
        let v = if a[i].total_cmp(&b[j]) == Ordering::Greater { b[j] } else { a[i] };
        while i < a.len() && a[i].total_cmp(&v) != Ordering::Greater {
            i += 1;
        }
        while j < b.len() && b[j].total_cmp(&v) != Ordering::Greater {
            j += 1;
        }
        best = best.max((i as u64 * n2).abs_diff(j as u64 * n1));
    }
    let d = best as f64 / (n1 * n2) as f64;
    let ne = (n1 * n2) as f64 / (n1 + n2) as f64;
    Ok(KsResult { d, p_value: kolmogorov_q(d * ne.sqrt()), n1: a.len(), n2: b.len() })
}

fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

fn tied_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0].total_cmp(&w[1]) == Ordering::Equal {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau-b in O(n log n) (Knight's merge-sort algorithm).
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    // `+ 0.0` folds -0.0 into 0.0 so total_cmp treats them as ties
    let mut pairs: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x + 0.0, y + 0.0)).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let n0 = (n as u64) * (n as u64 - 1) / 2;
    let sorted_x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ties_x = tied_pairs(&sorted_x);

    let mut ties_xy = 0u64;
    let mut run = 1u64;
    for w in pairs.windows(2) {
        if w[0].0.total_cmp(&w[1].0) == Ordering::Equal && w[0].1.total_cmp(&w[1].1) == Ordering::Equal {
            run += 1;
        } else {
            ties_xy += run * (run - 1) / 2;
            run = 1;
        }
    }
    ties_xy += run * (run - 1) / 2;

    let mut ys_sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(n);
    let swaps = merge_count(&mut ys_sorted, &mut buf);
    let ties_y = tied_pairs(&ys_sorted);

    if ties_x == n0 || ties_y == n0 {
        return Err(StatsError::DegenerateRanking);
    }
    let diff = n0 as i128 - ties_x as i128 - ties_y as i128 + ties_xy as i128 - 2 * swaps as i128;
    Ok(tau_from_counts(diff, n0, ties_x, ties_y))
}

/// `(C - D) / sqrt((n0 - tx)(n0 - ty))`, shared with the test oracle so both
/// routes finish with identical floating-point steps.
pub fn tau_from_counts(concordant_minus_discordant: i128, n0: u64, ties_x: u64, ties_y: u64) -> f64 {
    let denom = ((n0 - ties_x) as f64 * (n0 - ties_y) as f64).sqrt();
    (concordant_minus_discordant as f64 / denom).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub kappa: f64,
    pub p_bar: f64,
    pub p_e_bar: f64,
}

/// Fleiss' kappa over an N x k matrix of per-subject category counts.
pub fn fleiss_kappa(counts: &[Vec<u64>]) -> Result<KappaResult, StatsError> {
    let first = counts.first().ok_or(StatsError::EmptySample)?;
    let raters: u64 = first.iter().sum();
    if raters < 2 {
        return Err(StatsError::TooShort { needed: 2, got: raters as usize });
    }
    let k = first.len();
    for (row, r) in counts.iter().enumerate() {
        let got: u64 = r.iter().sum();
        if got != raters || r.len() != k {
            return Err(StatsError::UnequalRowSums { row, got, expected: raters });
        }
    }
    let n_subjects = counts.len() as f64;
    let n = raters as f64;
    let p_bar = counts
        .iter()
        .map(|r| {
            let sq: u64 = r.iter().map(|c| c * c).sum();
            (sq - raters) as f64 / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_subjects;
    let p_e_bar: f64 = (0..k)
        .map(|j| {
            let col: u64 = counts.iter().map(|r| r[j]).sum();
            let p = col as f64 / (n_subjects * n);
            p * p
        })
        .sum();
    if (1.0 - p_e_bar).abs() < 1e-15 {
        return Err(StatsError::NoVariation);
    }
    Ok(KappaResult { kappa: (p_bar - p_e_bar) / (1.0 - p_e_bar), p_bar, p_e_bar })
}

/// Symmetric Pearson matrix. Entries involving a constant column are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
    pub warnings: Vec<String>,
}

impl CorrelationMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i][j]
    }
}

pub fn pearson_matrix(names: &[String], rows: &[Vec<f64>]) -> Result<CorrelationMatrix, StatsError> {
    let n = rows.len();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    let p = names.len();
    for r in rows {
        if r.len() != p {
            return Err(StatsError::LengthMismatch(r.len(), p));
        }
    }
    let means: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let centered: Vec<Vec<f64>> = (0..p).map(|j| rows.iter().map(|r| r[j] - means[j]).collect()).collect();
    let ss: Vec<f64> = centered.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();

    let mut warnings = Vec::new();
    let constant: Vec<bool> = ss.iter().map(|s| *s == 0.0).collect();
    for (j, c) in constant.iter().enumerate() {
        if *c {
            warnings.push(format!("column {:?} is constant; its correlations are undefined", names[j]));
        }
    }
    let mut values = vec![vec![None; p]; p];
    for i in 0..p {
        if constant[i] {
            continue;
        }
        values[i][i] = Some(1.0);
        for j in i + 1..p {
            if constant[j] {
                continue;
            }
            let sxy: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let r = (sxy / (ss[i] * ss[j]).sqrt()).clamp(-1.0, 1.0);
            values[i][j] = Some(r);
            values[j][i] = Some(r);
        }
    }
    Ok(CorrelationMatrix { names: names.to_vec(), values, warnings })
}

/// Lower median: the smaller middle element for even lengths.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Case-folded word counts for one class, stopwords and punctuation removed.
/// Records whose text cleans to nothing are skipped.
pub fn word_frequencies(corpus: &Corpus, label: Label, lexicons: &Lexicons) -> HashMap<String, u64> {
    let mut freq = HashMap::new();
    for record in corpus.of_class(label) {
        let Ok(clean) = clean_text(&record.text) else { continue };
        let Ok(tokens) = tokenize(&clean) else { continue };
        for t in tokens.iter().filter(|t| t.is_word()) {
            let w = t.surface.to_lowercase();
            if !lexicons.stopwords.contains(&w) {
                *freq.entry(w).or_insert(0) += 1;
            }
        }
    }
    freq
}

/// Frequency-ranked words, ties broken lexicographically.
pub fn rank_words(freq: &HashMap<String, u64>) -> Vec<(String, u64)> {
    let mut ranked: Vec<(String, u64)> = freq.iter().map(|(w, c)| (w.clone(), *c)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked
}

pub fn top_words(
    corpus: &Corpus,
    label: Label,
    k: usize,
    lexicons: &Lexicons,
) -> Result<Vec<(String, u64)>, StatsError> {
    let freq = word_frequencies(corpus, label, lexicons);
    if freq.is_empty() {
        return Err(StatsError::NoTokens(label));
    }
    let mut ranked = rank_words(&freq);
    ranked.truncate(k);
    Ok(ranked)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordAgreement {
    pub k: usize,
    /// Union of both top-k lists with each class's full-corpus frequency.
    pub words: Vec<(String, u64, u64)>,
    pub kendall_tau_b: Option<f64>,
}

/// Kendall tau-b between two classes' frequencies over the union of their
/// top-k words.
pub fn word_rank_agreement(freq_a: &HashMap<String, u64>, freq_b: &HashMap<String, u64>, k: usize) -> WordAgreement {
    let mut union: Vec<String> = rank_words(freq_a).into_iter().take(k).map(|(w, _)| w).collect();
    for (w, _) in rank_words(freq_b).into_iter().take(k) {
        if !union.contains(&w) {
            union.push(w);
        }
    }
    union.sort();
    let words: Vec<(String, u64, u64)> = union
        .into_iter()
        .map(|w| {
            let a = freq_a.get(&w).copied().unwrap_or(0);
            let b = freq_b.get(&w).copied().unwrap_or(0);
            (w, a, b)
        })
        .collect();
    let xs: Vec<f64> = words.iter().map(|w| w.1 as f64).collect();
    let ys: Vec<f64> = words.iter().map(|w| w.2 as f64).collect();
    WordAgreement { k, kendall_tau_b: kendall_tau_b(&xs, &ys).ok(), words }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoHashtag {
    pub pair: (String, String),
    pub count: u64,
    pub repeated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassHashtags {
    pub label: Label,
    pub distinct_hashtags: usize,
    /// Hashtags absent from the other class, by descending frequency.
    pub unique: Vec<(String, u64)>,
    pub co_hashtags: Vec<CoHashtag>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashtagReport {
    pub classes: Vec<ClassHashtags>,
}

pub fn hashtag_report(corpus: &Corpus) -> HashtagReport {
    let mut freq: BTreeMap<Label, BTreeMap<String, u64>> = BTreeMap::new();
    let mut pairs: BTreeMap<Label, BTreeMap<(String, String), u64>> = BTreeMap::new();
    for label in Label::CLASSES {
        let f = freq.entry(label).or_default();
        let p = pairs.entry(label).or_default();
        for record in corpus.of_class(label) {
            for tag in &record.hashtags {
                *f.entry(tag.clone()).or_insert(0) += 1;
            }
            let mut tags = record.hashtags.clone();
            tags.sort();
            for i in 0..tags.len() {
                for j in i + 1..tags.len() {
                    *p.entry((tags[i].clone(), tags[j].clone())).or_insert(0) += 1;
                }
            }
        }
    }
    let classes = Label::CLASSES
        .iter()
        .map(|&label| {
            let other = if label == Label::Misleading { Label::NonMisleading } else { Label::Misleading };
            let mine = &freq[&label];
            let theirs = &freq[&other];
            let mut unique: Vec<(String, u64)> =
                mine.iter().filter(|(t, _)| !theirs.contains_key(*t)).map(|(t, c)| (t.clone(), *c)).collect();
            unique.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            let mut co: Vec<CoHashtag> = pairs[&label]
                .iter()
                .map(|(pair, &count)| CoHashtag { pair: pair.clone(), count, repeated: count > 1 })
                .collect();
            co.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.pair.cmp(&b.pair)));
            ClassHashtags { label, distinct_hashtags: mine.len(), unique, co_hashtags: co }
        })
        .collect();
    HashtagReport { classes }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub n: usize,
    pub median: Option<f64>,
    pub mean: Option<f64>,
}

impl FieldSummary {
    fn of(values: &[f64]) -> Self {
        Self { n: values.len(), median: lower_median(values), mean: mean(values) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVisibility {
    pub label: Label,
    pub retweets: FieldSummary,
    pub replies: FieldSummary,
    pub likes: FieldSummary,
}

pub fn visibility_summary(corpus: &Corpus) -> Result<Vec<ClassVisibility>, StatsError> {
    Label::CLASSES
        .iter()
        .map(|&label| {
            let collect = |f: fn(&crate::corpus::TweetRecord) -> Option<u64>| -> Vec<f64> {
                corpus.of_class(label).filter_map(f).map(|v| v as f64).collect()
            };
            let retweets = collect(|r| r.retweet_count);
            let replies = collect(|r| r.reply_count);
            let likes = collect(|r| r.like_count);
            if retweets.is_empty() && replies.is_empty() && likes.is_empty() {
                return Err(StatsError::NoCounts(label));
            }
            Ok(ClassVisibility {
                label,
                retweets: FieldSummary::of(&retweets),
                replies: FieldSummary::of(&replies),
                likes: FieldSummary::of(&likes),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TweetRecord;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Max ECDF gap evaluated at every pooled point, as an exact numerator.
    fn ks_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        let (n1, n2) = (xs.len() as u64, ys.len() as u64);
        let mut best = 0u64;
        for &t in xs.iter().chain(ys) {
            let cx = xs.iter().filter(|v| **v <= t).count() as u64;
            let cy = ys.iter().filter(|v| **v <= t).count() as u64;
            best = best.max((cx * n2).abs_diff(cy * n1));
        }
        best as f64 / (n1 * n2) as f64
    }

    pub(crate) fn tau_oracle(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len();
        let (mut s, mut tx, mut ty) = (0i128, 0u64, 0u64);
        for i in 0..n {
            for j in i + 1..n {
                let a = (xs[i] - xs[j]).signum() as i128 * ((xs[i] != xs[j]) as i128);
                let b = (ys[i] - ys[j]).signum() as i128 * ((ys[i] != ys[j]) as i128);
                s += a * b;
                tx += (xs[i] == xs[j]) as u64;
                ty += (ys[i] == ys[j]) as u64;
            }
        }
        tau_from_counts(s, (n * (n - 1) / 2) as u64, tx, ty)
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let r = ks_two_sample(&[1.0, 2.0, 2.0, 5.0], &[5.0, 2.0, 1.0, 2.0]).unwrap();
        assert_eq!((r.d, r.p_value), (0.0, 1.0));
        let r = ks_two_sample(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(r.d, 1.0);
        assert_eq!(ks_two_sample(&[], &[1.0]), Err(StatsError::EmptySample));
    }

    #[test]
    fn ks_matches_bruteforce_on_random_integers() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let xs: Vec<f64> = (0..30).map(|_| rng.gen_range(0..10) as f64).collect();
            let ys: Vec<f64> = (0..30).map(|_| rng.gen_range(0..12) as f64).collect();
            assert_eq!(ks_two_sample(&xs, &ys).unwrap().d, ks_oracle(&xs, &ys));
        }
    }

    #[test]
    fn kolmogorov_critical_value() {
        let q = kolmogorov_q(1.36);
        assert!((0.048..=0.051).contains(&q), "{q}");
        assert_eq!(kolmogorov_q(0.0), 1.0);
        assert!(kolmogorov_q(5.0) < 1e-20);
    }

    #[test]
    fn kendall_examples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(kendall_tau_b(&x, &x).unwrap(), 1.0);
        let rev = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert_eq!(kendall_tau_b(&x, &rev).unwrap(), -1.0);
        assert_eq!(kendall_tau_b(&x, &[2.0; 5]), Err(StatsError::DegenerateRanking));
        assert!(matches!(kendall_tau_b(&x, &rev[..3]), Err(StatsError::LengthMismatch(5, 3))));
    }

    #[test]
    fn kendall_matches_pairwise_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let xs: Vec<f64> = (0..1000).map(|_| rng.gen_range(0..20) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (x + rng.gen_range(-6.0..6.0f64)).round()).collect();
        assert_eq!(kendall_tau_b(&xs, &ys).unwrap(), tau_oracle(&xs, &ys));
    }

    fn wiki_fixture() -> Vec<Vec<u64>> {
        vec![
            vec![0, 0, 0, 0, 14],
            vec![0, 2, 6, 4, 2],
            vec![0, 0, 3, 5, 6],
            vec![0, 3, 9, 2, 0],
            vec![2, 2, 8, 1, 1],
            vec![7, 7, 0, 0, 0],
            vec![3, 2, 6, 3, 0],
            vec![2, 5, 3, 2, 2],
            vec![6, 5, 2, 1, 0],
            vec![0, 2, 2, 3, 7],
        ]
    }

    #[test]
    fn fleiss_worked_example() {
        // P_bar = 0.378022, P_e = 0.212755, kappa = 0.209931 (hand evaluation)
        let r = fleiss_kappa(&wiki_fixture()).unwrap();
        assert!((r.kappa - 0.209_930_7).abs() < 1e-6, "{r:?}");
        assert!((r.p_bar - 0.378_022_0).abs() < 1e-6);
        assert!((r.p_e_bar - 0.212_755_1).abs() < 1e-6);
    }

    #[test]
    fn fleiss_edge_cases() {
        let agree = vec![vec![3, 0], vec![0, 3], vec![3, 0]];
        assert_eq!(fleiss_kappa(&agree).unwrap().kappa, 1.0);
        // rows split 2/2: P_i = 1/3, P_e = 1/2, kappa = -1/3
        let split = vec![vec![2, 2]; 4];
        let r = fleiss_kappa(&split).unwrap();
        assert!((r.kappa + 1.0 / 3.0).abs() < 1e-12);
        assert!(matches!(fleiss_kappa(&[vec![1, 2], vec![2, 2]]), Err(StatsError::UnequalRowSums { row: 1, .. })));
        assert_eq!(fleiss_kappa(&[vec![3, 0], vec![3, 0]]), Err(StatsError::NoVariation));
    }

    #[test]
    fn fleiss_invariant_under_column_permutation() {
        let base = fleiss_kappa(&wiki_fixture()).unwrap().kappa;
        let permuted: Vec<Vec<u64>> = wiki_fixture().into_iter().map(|r| vec![r[3], r[0], r[4], r[2], r[1]]).collect();
        assert!((fleiss_kappa(&permuted).unwrap().kappa - base).abs() < 1e-12);
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn pearson_basics() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, -2.0 * i as f64, 3.0]).collect();
        let m = pearson_matrix(&names(3), &rows).unwrap();
        assert_eq!(m.get(0, 0), Some(1.0));
        assert!((m.get(0, 1).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(m.get(0, 2), None);
        assert_eq!(m.get(2, 2), None);
        assert_eq!(m.warnings.len(), 1);
    }

    #[test]
    fn pearson_matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
        let m = pearson_matrix(&names(4), &rows).unwrap();
        let n = rows.len() as f64;
        for i in 0..4 {
            for j in 0..4 {
                // E[xy] - E[x]E[y] over the product of standard deviations
                let ex = rows.iter().map(|r| r[i]).sum::<f64>() / n;
                let ey = rows.iter().map(|r| r[j]).sum::<f64>() / n;
                let exy = rows.iter().map(|r| r[i] * r[j]).sum::<f64>() / n;
                let vx = rows.iter().map(|r| r[i] * r[i]).sum::<f64>() / n - ex * ex;
                let vy = rows.iter().map(|r| r[j] * r[j]).sum::<f64>() / n - ey * ey;
                let direct = (exy - ex * ey) / (vx * vy).sqrt();
                assert!((m.get(i, j).unwrap() - direct).abs() < 1e-12);
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn medians() {
        assert_eq!(lower_median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&[1.0, 2.0, 3.0, 10.0]), Some(2.0));
        assert_eq!(mean(&[1.0, 2.0, 3.0, 10.0]), Some(4.0));
        assert_eq!(lower_median(&[]), None);
    }

    fn record(id: &str, text: &str, label: Label) -> TweetRecord {
        TweetRecord::new(id, text, label)
    }

    #[test]
    fn top_words_counts_and_ties() {
        let lex = Lexicons::bundled();
        let c = Corpus::new(vec![record("1", "shot shot jab", Label::Misleading)]).unwrap();
        assert_eq!(
            top_words(&c, Label::Misleading, 10, &lex).unwrap(),
            vec![("shot".to_string(), 2), ("jab".to_string(), 1)]
        );
        let c = Corpus::new(vec![record("1", "the Zeta beta alpha, and the beta!", Label::Misleading)]).unwrap();
        assert_eq!(
            top_words(&c, Label::Misleading, 2, &lex).unwrap(),
            vec![("beta".to_string(), 2), ("alpha".to_string(), 1)]
        );
        assert_eq!(top_words(&c, Label::NonMisleading, 2, &lex), Err(StatsError::NoTokens(Label::NonMisleading)));
    }

    #[test]
    fn word_agreement_union() {
        let a: HashMap<String, u64> = [("x", 5), ("y", 3), ("z", 1)].iter().map(|(w, c)| (w.to_string(), *c)).collect();
        let b: HashMap<String, u64> = [("z", 4), ("y", 2), ("w", 1)].iter().map(|(w, c)| (w.to_string(), *c)).collect();
        let r = word_rank_agreement(&a, &b, 2);
        let words: Vec<&str> = r.words.iter().map(|w| w.0.as_str()).collect();
        assert_eq!(words, ["x", "y", "z"]);
        // x: (5,0) y: (3,2) z: (1,4) -> perfectly reversed
        assert_eq!(r.kendall_tau_b, Some(-1.0));
    }

    #[test]
    fn hashtag_report_fixture() {
        let c = Corpus::new(vec![
            record("1", "#a #b #c", Label::Misleading),
            record("2", "#a #b", Label::Misleading),
            record("3", "#shared", Label::Misleading),
            record("4", "#shared #x", Label::NonMisleading),
            record("5", "#x #y", Label::NonMisleading),
            record("6", "#y #x", Label::NonMisleading),
        ])
        .unwrap();
        let r = hashtag_report(&c);
        let m = &r.classes[0];
        assert_eq!(m.label, Label::Misleading);
        assert_eq!(m.unique, vec![("a".into(), 2), ("b".into(), 2), ("c".into(), 1)]);
        let pairs: Vec<(&str, &str, u64, bool)> =
            m.co_hashtags.iter().map(|c| (c.pair.0.as_str(), c.pair.1.as_str(), c.count, c.repeated)).collect();
        assert_eq!(pairs, [("a", "b", 2, true), ("a", "c", 1, false), ("b", "c", 1, false)]);
        let nm = &r.classes[1];
        assert_eq!(nm.unique, vec![("x".into(), 3), ("y".into(), 2)]);
        let pairs: Vec<(&str, &str, u64)> =
            nm.co_hashtags.iter().map(|c| (c.pair.0.as_str(), c.pair.1.as_str(), c.count)).collect();
        assert_eq!(pairs, [("x", "y", 2), ("shared", "x", 1)]);
    }

    #[test]
    fn visibility_with_missing_fields() {
        let mut records = Vec::new();
        for (i, (rt, like)) in
            [(1, Some(10)), (2, None), (3, Some(30)), (4, None), (5, Some(50)), (6, None)].iter().enumerate()
        {
            let mut r = record(&i.to_string(), "text", if i < 6 { Label::Misleading } else { Label::NonMisleading });
            r.retweet_count = Some(*rt);
            r.like_count = *like;
            records.push(r);
        }
        let mut r = record("nm", "text", Label::NonMisleading);
        r.reply_count = Some(7);
        records.push(r);
        let v = visibility_summary(&Corpus::new(records).unwrap()).unwrap();
        assert_eq!(v[0].likes, FieldSummary { n: 3, median: Some(30.0), mean: Some(30.0) });
        assert_eq!(v[0].retweets, FieldSummary { n: 6, median: Some(3.0), mean: Some(3.5) });
        assert_eq!(v[0].replies.n, 0);
        assert_eq!(v[1].replies.median, Some(7.0));

        let c = Corpus::new(vec![record("1", "a", Label::Misleading), record("2", "b", Label::NonMisleading)]).unwrap();
        assert_eq!(visibility_summary(&c), Err(StatsError::NoCounts(Label::Misleading)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #[test]
            fn ks_symmetric(xs in proptest::collection::vec(0u8..8, 1..30), ys in proptest::collection::vec(0u8..8, 1..30)) {
                let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
                let ys: Vec<f64> = ys.into_iter().map(f64::from).collect();
                let a = ks_two_sample(&xs, &ys).unwrap();
                let b = ks_two_sample(&ys, &xs).unwrap();
                prop_assert_eq!(a.d, b.d);
                prop_assert_eq!(a.p_value, b.p_value);
                prop_assert!((0.0..=1.0).contains(&a.p_value));
            }

            #[test]
            fn tau_antisymmetric_without_ties(perm in Just((0..12).collect::<Vec<u32>>()).prop_shuffle()) {
                let xs: Vec<f64> = (0..12).map(f64::from).collect();
                let ys: Vec<f64> = perm.into_iter().map(f64::from).collect();
                let neg: Vec<f64> = ys.iter().map(|v| -v).collect();
                prop_assert_eq!(kendall_tau_b(&xs, &neg).unwrap(), -kendall_tau_b(&xs, &ys).unwrap());
            }

            #[test]
            fn pearson_affine_invariant(a in 0.1f64..10.0, b in -10.0f64..10.0, seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
                let scaled: Vec<Vec<f64>> = rows.iter().map(|r| vec![a * r[0] + b, r[1], r[2]]).collect();
                let m1 = pearson_matrix(&names(3), &rows).unwrap();
                let m2 = pearson_matrix(&names(3), &scaled).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        prop_assert!((m1.get(i, j).unwrap() - m2.get(i, j).unwrap()).abs() < 1e-12);
                    }
                }
            }
        }
    }
}
