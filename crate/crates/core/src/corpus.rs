//! Tweet ingestion, cleaning, class balancing and splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::lexicon::VaccineAliases;
use crate::seed;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate tweet id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("text is empty after cleaning")]
    EmptyAfterCleaning,
    #[error("class {0} has no labeled records")]
    MissingClass(Label),
    #[error("class {label} has {size} records; at least 2 are needed to split")]
    ClassTooSmall { label: Label, size: usize },
    #[error("test fraction {0} is outside (0, 1)")]
    BadFraction(f64),
    #[error("failed to read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "misleading")]
    Misleading,
    #[serde(rename = "non-misleading")]
    NonMisleading,
    #[serde(rename = "unlabeled")]
    Unlabeled,
}

impl Label {
    pub const CLASSES: [Label; 2] = [Label::Misleading, Label::NonMisleading];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Misleading => "misleading",
            Label::NonMisleading => "non-misleading",
            Label::Unlabeled => "unlabeled",
        }
    }

    /// Two-letter tag used in report grids.
    pub fn short(self) -> &'static str {
        match self {
            Label::Misleading => "M",
            Label::NonMisleading => "NM",
            Label::Unlabeled => "U",
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = ();

    /// Case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, ()> {
        let norm: String = s.trim().to_lowercase().chars().filter(|c| !matches!(c, '-' | '_' | ' ')).collect();
        match norm.as_str() {
            "misleading" => Ok(Label::Misleading),
            "nonmisleading" => Ok(Label::NonMisleading),
            "" | "unlabeled" | "unlabelled" => Ok(Label::Unlabeled),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub created_at: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retweet_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reply_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub like_count: Option<u64>,
    pub hashtags: Vec<String>,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Self {
        let text = text.into();
        let hashtags = extract_hashtags(&text);
        Self {
            id: id.into(),
            text,
            label: label.is_labeled().then_some(label),
            created_at: None,
            retweet_count: None,
            reply_count: None,
            like_count: None,
            hashtags,
        }
    }

    pub fn label(&self) -> Label {
        self.label.unwrap_or(Label::Unlabeled)
    }
}

/// An ordered collection of tweets with unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    records: Vec<TweetRecord>,
    class_counts: BTreeMap<Label, usize>,
}

impl Corpus {
    pub fn new(records: Vec<TweetRecord>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        let mut class_counts = BTreeMap::new();
        for r in &records {
            *class_counts.entry(r.label()).or_insert(0) += 1;
        }
        Ok(Self { records, class_counts })
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn class_counts(&self) -> &BTreeMap<Label, usize> {
        &self.class_counts
    }

    pub fn count(&self, label: Label) -> usize {
        self.class_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn of_class(&self, label: Label) -> impl Iterator<Item = &TweetRecord> {
        self.records.iter().filter(move |r| r.label() == label)
    }

    fn subset(&self, keep: &[bool]) -> Corpus {
        let records = self.records.iter().zip(keep).filter(|(_, k)| **k).map(|(r, _)| r.clone()).collect();
        Corpus::new(records).expect("subset of a valid corpus has unique ids")
    }

    /// Normalised JSONL, one record per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Jsonl,
        }
    }
}

pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus, CorpusError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CorpusError::Io { path: path.display().to_string(), message: e.to_string() })?;
    match format {
        Format::Jsonl => parse_jsonl(&text),
        Format::Csv => parse_csv(&text),
    }
}

#[derive(Default)]
struct RawRow {
    id: Option<String>,
    text: Option<String>,
    label: Option<String>,
    created_at: Option<String>,
    retweet_count: Option<u64>,
    reply_count: Option<u64>,
    like_count: Option<u64>,
}

fn build_record(row: RawRow, line: usize) -> Result<TweetRecord, CorpusError> {
    let bad = |message: &str| CorpusError::Malformed { line, message: message.to_string() };
    let id = row.id.filter(|s| !s.trim().is_empty()).ok_or_else(|| bad("missing id"))?;
    let text = row.text.ok_or_else(|| bad("missing text"))?;
    if text.trim().is_empty() {
        return Err(bad("text is empty"));
    }
    let label = match row.label {
        None => Label::Unlabeled,
        Some(s) => s.parse::<Label>().map_err(|_| CorpusError::UnknownLabel { line, label: s.clone() })?,
    };
    let mut record = TweetRecord::new(id, text, label);
    record.created_at = row.created_at.filter(|s| !s.trim().is_empty());
    record.retweet_count = row.retweet_count;
    record.reply_count = row.reply_count;
    record.like_count = row.like_count;
    Ok(record)
}

pub fn parse_jsonl(text: &str) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| CorpusError::Malformed { line: line_no, message };
        let value: Value = serde_json::from_str(line).map_err(|e| bad(format!("invalid JSON: {e}")))?;
        let obj = value.as_object().ok_or_else(|| bad("expected a JSON object".into()))?;
        let string_field = |key: &str| -> Result<Option<String>, CorpusError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(s.clone())),
                Some(Value::Number(n)) if key == "id" => Ok(Some(n.to_string())),
                Some(_) => Err(bad(format!("field {key:?} must be a string"))),
            }
        };
        let count_field = |key: &str| -> Result<Option<u64>, CorpusError> {
            match obj.get(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::Number(n)) => {
                    n.as_u64().map(Some).ok_or_else(|| bad(format!("field {key:?} must be a non-negative integer")))
                }
                Some(_) => Err(bad(format!("field {key:?} must be a non-negative integer"))),
            }
        };
        let row = RawRow {
            id: string_field("id")?,
            text: string_field("text")?,
            label: string_field("label")?,
            created_at: string_field("created_at")?,
            retweet_count: count_field("retweet_count")?,
            reply_count: count_field("reply_count")?,
            like_count: count_field("like_count")?,
        };
        records.push(build_record(row, line_no)?);
    }
    Corpus::new(records)
}

pub fn parse_csv(text: &str) -> Result<Corpus, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| CorpusError::Malformed { line: 1, message: e.to_string() })?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let (id_col, text_col) = match (column("id"), column("text")) {
        (Some(i), Some(t)) => (i, t),
        _ => return Err(CorpusError::Malformed { line: 1, message: "header must contain id and text columns".into() }),
    };
    let label_col = column("label");
    let created_col = column("created_at");
    let count_cols = [column("retweet_count"), column("reply_count"), column("like_count")];

    let mut records = Vec::new();
    for result in reader.records() {
        let rec = result.map_err(|e| CorpusError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let cell =
            |col: Option<usize>| col.and_then(|c| rec.get(c)).filter(|s| !s.trim().is_empty()).map(str::to_string);
        let mut counts = [None; 3];
        for (slot, col) in counts.iter_mut().zip(count_cols) {
            if let Some(s) = cell(col) {
                *slot = Some(s.trim().parse::<u64>().map_err(|_| CorpusError::Malformed {
                    line,
                    message: format!("count {s:?} is not a non-negative integer"),
                })?);
            }
        }
        let row = RawRow {
            id: cell(Some(id_col)),
            text: rec.get(text_col).map(str::to_string),
            label: cell(label_col),
            created_at: cell(created_col),
            retweet_count: counts[0],
            reply_count: counts[1],
            like_count: counts[2],
        };
        records.push(build_record(row, line)?);
    }
    Corpus::new(records)
}

fn url_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").unwrap())
}

fn mention_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").unwrap())
}

fn hashtag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?:^|[^\w])#(\w+)").unwrap())
}

fn collapse_repeats(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut prev = None;
    let mut run = 0;
    for c in s.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 3 {
            out.push(c);
        }
    }
    out
}

fn clean_pass(s: &str) -> String {
    let s: String = s.nfc().collect();
    let s = s.replace('#', "");
    let s = url_re().replace_all(&s, " ");
    let s = mention_re().replace_all(&s, " ");
    let s = collapse_repeats(&s);
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Strips URLs, @-mentions and `#` markers, caps character runs at three,
/// collapses whitespace and NFC-normalises. Case is preserved.
///
/// The rules are applied until the text stops changing, so the function is
/// idempotent even when one removal exposes material for another rule.
pub fn clean_text(raw: &str) -> Result<String, CorpusError> {
    let mut current = clean_pass(raw);
    loop {
        let next = clean_pass(&current);
        if next == current {
            break;
        }
        current = next;
    }
    if current.is_empty() {
        Err(CorpusError::EmptyAfterCleaning)
    } else {
        Ok(current)
    }
}

/// Lowercased hashtag bodies in order of first occurrence, without repeats.
/// A `#` only opens a hashtag at the start of the text or after a non-word
/// character.
pub fn extract_hashtags(raw: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut at = 0;
    // Matches consume the preceding boundary character, so resume right
    // after each body to let "#a #b" and "#a,#b" both match.
    while let Some(caps) = hashtag_re().captures_at(raw, at) {
        let body = caps.get(1).unwrap();
        let tag = body.as_str().to_lowercase();
        if !out.contains(&tag) {
            out.push(tag);
        }
        at = body.end();
    }
    out
}

/// Downsamples the majority class to the size of the minority class.
/// Unlabeled records are dropped. Retained records keep their order.
pub fn balance_classes(corpus: &Corpus, seed: u64) -> Result<Corpus, CorpusError> {
    for label in Label::CLASSES {
        if corpus.count(label) == 0 {
            return Err(CorpusError::MissingClass(label));
        }
    }
    let target = Label::CLASSES.iter().map(|l| corpus.count(*l)).min().unwrap();
    let mut keep = vec![false; corpus.len()];
    let mut rng = seed::rng(seed);
    for label in Label::CLASSES {
        let mut idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.records[i].label() == label).collect();
        if idx.len() > target {
            idx.shuffle(&mut rng);
            idx.truncate(target);
        }
        for i in idx {
            keep[i] = true;
        }
    }
    Ok(corpus.subset(&keep))
}

/// Stratified split: each class contributes `round_half_up(n * test_fraction)`
/// records to the test side, clamped so both sides keep at least one.
pub fn split_train_test(corpus: &Corpus, test_fraction: f64, seed: u64) -> Result<(Corpus, Corpus), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    let mut in_test = vec![false; corpus.len()];
    let mut rng = seed::rng(seed);
    for label in Label::CLASSES {
        let mut idx: Vec<usize> = (0..corpus.len()).filter(|&i| corpus.records[i].label() == label).collect();
        if idx.len() < 2 {
            return Err(CorpusError::ClassTooSmall { label, size: idx.len() });
        }
        let n_test = ((idx.len() as f64 * test_fraction + 0.5).floor() as usize).clamp(1, idx.len() - 1);
        idx.shuffle(&mut rng);
        for &i in &idx[..n_test] {
            in_test[i] = true;
        }
    }
    let in_train: Vec<bool> = corpus.records.iter().zip(&in_test).map(|(r, t)| r.label().is_labeled() && !t).collect();
    Ok((corpus.subset(&in_train), corpus.subset(&in_test)))
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric()
}

/// Number of distinct canonical vaccine names mentioned in `text`.
/// Aliases match case-insensitively on word boundaries.
pub fn count_vaccine_mentions(text: &str, aliases: &VaccineAliases) -> usize {
    vaccine_mentions(text, aliases).len()
}

pub fn vaccine_mentions(text: &str, aliases: &VaccineAliases) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut found: Vec<String> = Vec::new();
    for (alias, canonical) in &aliases.aliases {
        if found.contains(canonical) {
            continue;
        }
        let hit = lower.match_indices(alias.as_str()).any(|(start, m)| {
            let before = lower[..start].chars().next_back();
            let after = lower[start + m.len()..].chars().next();
            !before.is_some_and(is_word_char) && !after.is_some_and(is_word_char)
        });
        if hit {
            found.push(canonical.clone());
        }
    }
    found.sort();
    found
}
