//! Latent Dirichlet Allocation by collapsed Gibbs sampling, held-out model
//! selection over the number of topics, and topic fits on filtered subsets.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::affect::{Emotion, SentimentCategory};
use crate::corpus::{clean_text, Label};
use crate::lexicon::Lexicons;
use crate::seed;
use crate::syntax::tokenize;

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("need at least 2 non-empty documents after pruning, found {0}")]
    TooFewDocuments(usize),
    #[error("vocabulary is empty after pruning")]
    EmptyVocabulary,
    #[error("k = {k} exceeds the {tokens} tokens in the corpus")]
    TooManyTopics { k: usize, tokens: usize },
    #[error("k must be at least 2, got {0}")]
    BadK(usize),
    #[error("no candidate topic counts given")]
    EmptyGrid,
    #[error("held-out split leaves no scorable tokens")]
    NoHeldOutTokens,
    #[error("subset {filter} cannot be modeled: {source}")]
    Subset {
        filter: String,
        #[source]
        source: Box<TopicError>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    /// Document-topic prior; `None` means `50 / k`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub seed: u64,
    /// Words occurring fewer times than this across the corpus are dropped.
    pub min_count: u64,
}

impl LdaParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, alpha: None, beta: 0.01, iterations: 1000, seed, min_count: 2 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    pub k: usize,
    /// k x V topic-word distributions.
    pub phi: Vec<Vec<f64>>,
    /// D x k document-topic distributions, one row per input document.
    pub theta: Vec<Vec<f64>>,
    /// Sorted, duplicate-free.
    pub vocabulary: Vec<String>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations: usize,
}

/// Sorted vocabulary of words with corpus frequency >= `min_count`.
pub fn build_vocabulary(docs: &[Vec<String>], min_count: u64) -> Vec<String> {
    let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
    for doc in docs {
        for w in doc {
            *freq.entry(w.as_str()).or_insert(0) += 1;
        }
    }
    freq.into_iter().filter(|(_, c)| *c >= min_count).map(|(w, _)| w.to_string()).collect()
}

fn index_docs(docs: &[Vec<String>], vocabulary: &[String]) -> Vec<Vec<usize>> {
    let index: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(i, w)| (w.as_str(), i)).collect();
    docs.iter().map(|d| d.iter().filter_map(|w| index.get(w.as_str()).copied()).collect()).collect()
}

/// State of one collapsed Gibbs chain.
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_dt: Vec<Vec<u32>>,
    /// word-major: n_wt[w * k + t]
    n_wt: Vec<u32>,
    n_t: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    pub fn new(docs: Vec<Vec<usize>>, vocab_size: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = seed::rng(seed);
        let mut n_dt = vec![vec![0u32; k]; docs.len()];
        let mut n_wt = vec![0u32; vocab_size * k];
        let mut n_t = vec![0u32; k];
        let z: Vec<Vec<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.iter()
                    .map(|&w| {
                        let t = rng.gen_range(0..k);
                        n_dt[d][t] += 1;
                        n_wt[w * k + t] += 1;
                        n_t[t] += 1;
                        t
                    })
                    .collect()
            })
            .collect();
        Self { k, v: vocab_size, alpha, beta, docs, z, n_dt, n_wt, n_t, rng, weights: vec![0.0; k] }
    }

    /// One full pass resampling every token assignment.
    pub fn sweep(&mut self) {
        let k = self.k;
        let v_beta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.n_dt[d][old] -= 1;
                self.n_wt[w * k + old] -= 1;
                self.n_t[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    total += (f64::from(self.n_dt[d][t]) + self.alpha) * (f64::from(self.n_wt[w * k + t]) + self.beta)
                        / (f64::from(self.n_t[t]) + v_beta);
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|c| u < *c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.n_dt[d][new] += 1;
                self.n_wt[w * k + new] += 1;
                self.n_t[new] += 1;
            }
        }
    }

    /// Recounts from the assignments and compares with the running tallies.
    pub fn counts_consistent(&self) -> bool {
        let k = self.k;
        let mut n_dt = vec![vec![0u32; k]; self.docs.len()];
        let mut n_wt = vec![0u32; self.v * k];
        let mut n_t = vec![0u32; k];
        for (d, doc) in self.docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let t = self.z[d][i];
                n_dt[d][t] += 1;
                n_wt[w * k + t] += 1;
                n_t[t] += 1;
            }
        }
        let doc_sums = self.n_dt.iter().zip(&self.docs).all(|(row, doc)| row.iter().sum::<u32>() as usize == doc.len());
        let topic_sums = (0..k).all(|t| (0..self.v).map(|w| self.n_wt[w * k + t]).sum::<u32>() == self.n_t[t]);
        doc_sums && topic_sums && n_dt == self.n_dt && n_wt == self.n_wt && n_t == self.n_t
    }

    pub fn phi(&self) -> Vec<Vec<f64>> {
        let k = self.k;
        let v_beta = self.v as f64 * self.beta;
        (0..k)
            .map(|t| {
                (0..self.v)
                    .map(|w| (f64::from(self.n_wt[w * k + t]) + self.beta) / (f64::from(self.n_t[t]) + v_beta))
                    .collect()
            })
            .collect()
    }

    pub fn theta(&self) -> Vec<Vec<f64>> {
        let k_alpha = self.k as f64 * self.alpha;
        self.n_dt
            .iter()
            .zip(&self.docs)
            .map(|(row, doc)| row.iter().map(|&c| (f64::from(c) + self.alpha) / (doc.len() as f64 + k_alpha)).collect())
            .collect()
    }
}

/// Prunes the vocabulary, validates the corpus and returns the indexed
/// documents ready for sampling.
fn prepare(docs: &[Vec<String>], params: &LdaParams) -> Result<(Vec<String>, Vec<Vec<usize>>), TopicError> {
    if params.k < 2 {
        return Err(TopicError::BadK(params.k));
    }
    let vocabulary = build_vocabulary(docs, params.min_count);
    if vocabulary.is_empty() {
        return Err(TopicError::EmptyVocabulary);
    }
    let indexed = index_docs(docs, &vocabulary);
    let non_empty = indexed.iter().filter(|d| !d.is_empty()).count();
    if non_empty < 2 {
        return Err(TopicError::TooFewDocuments(non_empty));
    }
    let tokens: usize = indexed.iter().map(Vec::len).sum();
    if params.k > tokens {
        return Err(TopicError::TooManyTopics { k: params.k, tokens });
    }
    Ok((vocabulary, indexed))
}

pub fn sampler_for(docs: &[Vec<String>], params: &LdaParams) -> Result<(Vec<String>, GibbsSampler), TopicError> {
    let (vocabulary, indexed) = prepare(docs, params)?;
    let v = vocabulary.len();
    Ok((vocabulary, GibbsSampler::new(indexed, v, params.k, params.alpha(), params.beta, params.seed)))
}

/// Fits LDA with `params.iterations` Gibbs sweeps.
pub fn lda_fit(docs: &[Vec<String>], params: &LdaParams) -> Result<TopicModel, TopicError> {
    let (vocabulary, mut sampler) = sampler_for(docs, params)?;
    for _ in 0..params.iterations {
        sampler.sweep();
    }
    debug_assert!(sampler.counts_consistent());
    Ok(TopicModel {
        k: params.k,
        phi: sampler.phi(),
        theta: sampler.theta(),
        vocabulary,
        alpha: params.alpha(),
        beta: params.beta,
        seed: params.seed,
        iterations: params.iterations,
    })
}

/// Per topic, the `n` highest-probability words (ties lexicographic).
pub fn top_words_per_topic(model: &TopicModel, n: usize) -> Vec<Vec<(String, f64)>> {
    model
        .phi
        .iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..row.len()).collect();
            // vocabulary is sorted, so index order is lexicographic order
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
            idx.into_iter().take(n).map(|w| (model.vocabulary[w].clone(), row[w])).collect()
        })
        .collect()
}

/// Number of Gibbs sweeps used to fold a held-out document into a model.
pub const FOLD_IN_SWEEPS: usize = 50;

/// Mean per-token held-out log-likelihood by document completion: each
/// held-out document's even-position tokens estimate its topic mixture with
/// `phi` frozen, and the odd-position tokens are scored.
pub fn held_out_log_likelihood(model: &TopicModel, docs: &[Vec<String>], seed: u64) -> Option<f64> {
    let indexed = index_docs(docs, &model.vocabulary);
    let k = model.k;
    let mut rng = seed::rng(seed);
    let mut total = 0.0;
    let mut scored = 0usize;
    let mut weights = vec![0.0; k];
    for doc in indexed.iter().filter(|d| d.len() >= 2) {
        let observed: Vec<usize> = doc.iter().step_by(2).copied().collect();
        let mut n_t = vec![0u32; k];
        let mut z: Vec<usize> = observed
            .iter()
            .map(|_| {
                let t = rng.gen_range(0..k);
                n_t[t] += 1;
                t
            })
            .collect();
        for _ in 0..FOLD_IN_SWEEPS {
            for (i, &w) in observed.iter().enumerate() {
                n_t[z[i]] -= 1;
                let mut acc = 0.0;
                for t in 0..k {
                    acc += (f64::from(n_t[t]) + model.alpha) * model.phi[t][w];
                    weights[t] = acc;
                }
                let u = rng.gen::<f64>() * acc;
                z[i] = weights.iter().position(|c| u < *c).unwrap_or(k - 1);
                n_t[z[i]] += 1;
            }
        }
        let denom = observed.len() as f64 + k as f64 * model.alpha;
        let theta: Vec<f64> = n_t.iter().map(|&c| (f64::from(c) + model.alpha) / denom).collect();
        for &w in doc.iter().skip(1).step_by(2) {
            let p: f64 = (0..k).map(|t| theta[t] * model.phi[t][w]).sum();
            total += p.ln();
            scored += 1;
        }
    }
    (scored > 0).then(|| total / scored as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KSelection {
    pub chosen: usize,
    /// (k, mean held-out log-likelihood per token)
    pub scores: Vec<(usize, f64)>,
}

/// Document-topic prior shared by every candidate during selection when the
/// caller gives none. Scaling the prior as `50 / k` keeps `k * alpha` fixed,
/// and on short documents that prior mass swamps the held-out differences
/// between candidates.
pub const SELECTION_ALPHA: f64 = 1.0;

/// Grid search over topic counts scored by held-out log-likelihood.
/// Ties within 1e-12 go to the smaller k.
pub fn select_k(
    docs: &[Vec<String>],
    candidates: &[usize],
    holdout_fraction: f64,
    base: &LdaParams,
) -> Result<KSelection, TopicError> {
    if candidates.is_empty() {
        return Err(TopicError::EmptyGrid);
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.len() == 1 {
        return Ok(KSelection { chosen: ks[0], scores: vec![] });
    }
    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut seed::rng(seed::derive(base.seed, "holdout")));
    let n_hold =
        ((docs.len() as f64 * holdout_fraction).round() as usize).clamp(1, docs.len().saturating_sub(2).max(1));
    let held: Vec<Vec<String>> = order[..n_hold].iter().map(|&i| docs[i].clone()).collect();
    let train: Vec<Vec<String>> = order[n_hold..].iter().map(|&i| docs[i].clone()).collect();

    let mut scores = Vec::with_capacity(ks.len());
    for &k in &ks {
        let params = LdaParams { k, alpha: Some(base.alpha.unwrap_or(SELECTION_ALPHA)), ..base.clone() };
        let model = lda_fit(&train, &params)?;
        let ll = held_out_log_likelihood(&model, &held, seed::mix(base.seed, k as u64))
            .ok_or(TopicError::NoHeldOutTokens)?;
        scores.push((k, ll));
    }
    let mut chosen = scores[0];
    for &(k, ll) in &scores[1..] {
        if ll > chosen.1 + 1e-12 {
            chosen = (k, ll);
        }
    }
    Ok(KSelection { chosen: chosen.0, scores })
}

/// Lowercased word tokens of cleaned text with stopwords and bare numbers
/// removed; the document representation fed to LDA.
pub fn document_tokens(text: &str, lexicons: &Lexicons) -> Vec<String> {
    let Ok(clean) = clean_text(text) else { return vec![] };
    let Ok(tokens) = tokenize(&clean) else { return vec![] };
    tokens
        .into_iter()
        .filter(|t| t.surface.chars().any(char::is_alphabetic))
        .map(|t| t.surface.to_lowercase())
        .filter(|w| !lexicons.stopwords.contains(w))
        .collect()
}

/// A document with the annotations topic filters select on.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedDoc {
    pub label: Label,
    pub sentiment: SentimentCategory,
    pub emotion: Option<Emotion>,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicFilter {
    pub label: Option<Label>,
    pub sentiment: Option<SentimentCategory>,
    pub emotion: Option<Emotion>,
}

impl TopicFilter {
    pub fn matches(&self, doc: &AnnotatedDoc) -> bool {
        self.label.is_none_or(|l| l == doc.label)
            && self.sentiment.is_none_or(|s| s == doc.sentiment)
            && self.emotion.is_none_or(|e| Some(e) == doc.emotion)
    }

    pub fn describe(&self) -> String {
        let mut parts = Vec::new();
        if let Some(l) = self.label {
            parts.push(l.short().to_string());
        }
        if let Some(s) = self.sentiment {
            parts.push(s.to_string());
        }
        if let Some(e) = self.emotion {
            parts.push(e.to_string());
        }
        if parts.is_empty() {
            "all".into()
        } else {
            parts.join("/")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTopics {
    pub filter: TopicFilter,
    pub description: String,
    pub n_docs: usize,
    pub model: TopicModel,
}

pub fn conditional_topics(
    docs: &[AnnotatedDoc],
    filter: TopicFilter,
    params: &LdaParams,
) -> Result<ConditionalTopics, TopicError> {
    let subset: Vec<Vec<String>> = docs.iter().filter(|d| filter.matches(d)).map(|d| d.tokens.clone()).collect();
    let model =
        lda_fit(&subset, params).map_err(|e| TopicError::Subset { filter: filter.describe(), source: Box::new(e) })?;
    Ok(ConditionalTopics { filter, description: filter.describe(), n_docs: subset.len(), model })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridAxis {
    Sentiment,
    Emotion,
}

impl GridAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            GridAxis::Sentiment => "sentiment",
            GridAxis::Emotion => "emotion",
        }
    }
}

/// Class x sentiment or class x emotion grid. Cells that cannot be fitted
/// keep their error so the report can show them.
pub fn topic_grid(
    docs: &[AnnotatedDoc],
    axis: GridAxis,
    params: &LdaParams,
) -> Vec<(TopicFilter, Result<ConditionalTopics, TopicError>)> {
    let mut filters = Vec::new();
    for label in Label::CLASSES {
        match axis {
            GridAxis::Sentiment => {
                for s in SentimentCategory::ALL {
                    filters.push(TopicFilter { label: Some(label), sentiment: Some(s), emotion: None });
                }
            }
            GridAxis::Emotion => {
                for e in Emotion::COLUMNS {
                    filters.push(TopicFilter { label: Some(label), sentiment: None, emotion: Some(e) });
                }
            }
        }
    }
    filters
        .into_par_iter()
        .enumerate()
        .map(|(i, f)| {
            let p = LdaParams { seed: seed::mix(params.seed, i as u64), ..params.clone() };
            (f, conditional_topics(docs, f, &p))
        })
        .collect()
}
