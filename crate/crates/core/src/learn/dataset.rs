use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{class_name, LearnError};
use crate::affect::{emotion_scores, one_hot_emotion, sentiment_score, EmotionScores, SentimentScore};
use crate::corpus::{clean_text, Corpus, Label, TweetRecord};
use crate::lexicon::Lexicons;
use crate::seed;
use crate::syntax::{analyze, SyntacticProfile};

pub const N_FEATURES: usize = 18;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "stop_words",
    "pronouns",
    "nouns",
    "adjectives",
    "avg_token_length",
    "wh_words",
    "adverbs",
    "conjunctions",
    "verbs",
    "determiners",
    "ttr",
    "sentiment_compound",
    "emo_happiness",
    "emo_fear",
    "emo_anger",
    "emo_surprise",
    "emo_sadness",
    "hashtag_count",
];

/// Everything extracted from one tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetFeatures {
    pub profile: SyntacticProfile,
    pub sentiment: SentimentScore,
    pub emotions: EmotionScores,
    pub hashtag_count: usize,
}

impl TweetFeatures {
    pub fn extract(record: &TweetRecord, lexicons: &Lexicons) -> Result<Self, String> {
        let clean = clean_text(&record.text).map_err(|e| e.to_string())?;
        let (tokens, profile) = analyze(&clean, lexicons).map_err(|e| e.to_string())?;
        Ok(Self {
            sentiment: sentiment_score(&tokens, lexicons),
            emotions: emotion_scores(&tokens, lexicons),
            profile,
            hashtag_count: record.hashtags.len(),
        })
    }

    pub fn vector(&self) -> [f64; N_FEATURES] {
        let p = &self.profile;
        let e = one_hot_emotion(&self.emotions);
        [
            f64::from(p.stop_words),
            f64::from(p.pronouns),
            f64::from(p.nouns),
            f64::from(p.adjectives),
            p.avg_token_length,
            f64::from(p.wh_words),
            f64::from(p.adverbs),
            f64::from(p.conjunctions),
            f64::from(p.verbs),
            f64::from(p.determiners),
            p.ttr,
            self.sentiment.compound,
            e[0],
            e[1],
            e[2],
            e[3],
            e[4],
            self.hashtag_count as f64,
        ]
    }
}

/// Rows with binary labels; `true` is Misleading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub ids: Vec<String>,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<bool>,
        ids: Vec<String>,
    ) -> Result<Self, LearnError> {
        if rows.len() != labels.len() || ids.len() != rows.len() {
            return Err(LearnError::LengthMismatch { rows: rows.len(), labels: labels.len() });
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != feature_names.len() {
                return Err(LearnError::FeatureCount { row: i, expected: feature_names.len(), found: r.len() });
            }
        }
        Ok(Self { feature_names, rows, labels, ids })
    }

    /// Unnamed rows with generated ids and generic feature names.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<bool>) -> Result<Self, LearnError> {
        let p = rows.first().map_or(0, Vec::len);
        let names = (0..p).map(|j| format!("f{j}")).collect();
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(names, rows, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|y| **y).count()
    }

    pub fn has_frozen_schema(&self) -> bool {
        self.feature_names.iter().map(String::as_str).eq(FEATURE_NAMES)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Keeps only the given columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Dataset {
        Dataset {
            feature_names: columns.iter().map(|&j| self.feature_names[j].clone()).collect(),
            rows: self.rows.iter().map(|r| columns.iter().map(|&j| r[j]).collect()).collect(),
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        }
    }

    /// Downsamples the larger class to the size of the smaller one; kept rows
    /// stay in their original order.
    pub fn balanced(&self, seed: u64) -> Dataset {
        let pos: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i]).collect();
        let neg: Vec<usize> = (0..self.len()).filter(|&i| !self.labels[i]).collect();
        let (mut major, minor) = if pos.len() >= neg.len() { (pos, neg) } else { (neg, pos) };
        major.shuffle(&mut seed::rng(seed::derive(seed, "balance")));
        major.truncate(minor.len());
        let mut keep: Vec<usize> = major.into_iter().chain(minor).collect();
        keep.sort_unstable();
        self.subset(&keep)
    }

    /// Per-class split holding out `round(n_c * test_fraction)` rows of each
    /// class (at least one, never all). Returns `(train, test)`.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), LearnError> {
        let mut rng = seed::rng(seed::derive(seed, "split"));
        let mut test = Vec::new();
        for class in [true, false] {
            let mut members: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == class).collect();
            if members.len() < 2 {
                return Err(LearnError::ClassTooSmall { class: class_name(class), count: members.len() });
            }
            members.shuffle(&mut rng);
            let n = members.len();
            let n_test = ((n as f64 * test_fraction + 0.5).floor() as usize).clamp(1, n - 1);
            test.extend_from_slice(&members[..n_test]);
        }
        test.sort_unstable();
        let train: Vec<usize> = (0..self.len()).filter(|i| test.binary_search(i).is_err()).collect();
        Ok((self.subset(&train), self.subset(&test)))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// CSV with header `id,label,<features>`; label is 1 for Misleading.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        let mut header = vec!["id".to_string(), "label".to_string()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for ((id, row), y) in self.ids.iter().zip(&self.rows).zip(&self.labels) {
            let mut rec = vec![id.clone(), u8::from(*y).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn from_csv(text: &str) -> Result<Dataset, LearnError> {
        let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| LearnError::Csv(e.to_string()))?.clone();
        if header.len() < 3 || &header[0] != "id" || &header[1] != "label" {
            return Err(LearnError::Csv("header must start with id,label".into()));
        }
        let names: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let (mut rows, mut labels, mut ids) = (Vec::new(), Vec::new(), Vec::new());
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| LearnError::Csv(e.to_string()))?;
            let line = i + 2;
            ids.push(rec[0].to_string());
            labels.push(match &rec[1] {
                "1" => true,
                "0" => false,
                other => return Err(LearnError::Csv(format!("line {line}: bad label {other:?}"))),
            });
            let row = rec
                .iter()
                .skip(2)
                .map(|v| v.parse::<f64>().map_err(|_| LearnError::Csv(format!("line {line}: bad number {v:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Dataset::new(names, rows, labels, ids)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBuild {
    pub dataset: Dataset,
    pub skipped: Vec<SkipEntry>,
}

/// Assembles the frozen-schema matrix in corpus order from per-tweet
/// artifacts keyed by id. Unlabeled tweets and tweets without artifacts are
/// skipped and reported.
pub fn build_feature_matrix(
    corpus: &Corpus,
    features: &BTreeMap<String, TweetFeatures>,
) -> Result<FeatureBuild, LearnError> {
    let (mut rows, mut labels, mut ids, mut skipped) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for rec in corpus.records() {
        let reason = match (rec.label(), features.get(&rec.id)) {
            (Label::Unlabeled, _) => "unlabeled",
            (_, None) => "feature extraction failed",
            (label, Some(f)) => {
                rows.push(f.vector().to_vec());
                labels.push(label == Label::Misleading);
                ids.push(rec.id.clone());
                continue;
            }
        };
        log::warn!("skipping tweet {}: {reason}", rec.id);
        skipped.push(SkipEntry { id: rec.id.clone(), reason: reason.into() });
    }
    if rows.is_empty() {
        return Err(LearnError::NoRows);
    }
    let names = FEATURE_NAMES.iter().map(|s| s.to_string()).collect();
    Ok(FeatureBuild { dataset: Dataset::new(names, rows, labels, ids)?, skipped })
}
