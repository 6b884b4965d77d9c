//! Bundled word lists and the loaders that let analysts substitute their own.
//!
//! Every list is plain UTF-8 text. Line-oriented lists hold one token per
//! line; TSV lists hold `key<TAB>value`. Lines starting with `#` and blank
//! lines are ignored everywhere.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::affect::Emotion;
use crate::syntax::FineTag;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{file}:{line}: {message}")]
    Malformed { file: String, line: usize, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

const STOPWORDS: &str = include_str!("../data/stopwords.txt");
const NEGATORS: &str = include_str!("../data/negators.txt");
const VALENCE: &str = include_str!("../data/valence.tsv");
const EMOTION: &str = include_str!("../data/emotion.tsv");
const VACCINES: &str = include_str!("../data/vaccines.tsv");

/// Closed-class word lists, one file per fine tag. The order of this table
/// is the precedence used when a word appears in more than one list.
const CLOSED_CLASS: &[(FineTag, &str, &str)] = &[
    (FineTag::WDT, "WDT.txt", include_str!("../data/closed_class/WDT.txt")),
    (FineTag::WP, "WP.txt", include_str!("../data/closed_class/WP.txt")),
    (FineTag::WPS, "WP$.txt", include_str!("../data/closed_class/WP$.txt")),
    (FineTag::WRB, "WRB.txt", include_str!("../data/closed_class/WRB.txt")),
    (FineTag::PRP, "PRP.txt", include_str!("../data/closed_class/PRP.txt")),
    (FineTag::PRPS, "PRP$.txt", include_str!("../data/closed_class/PRP$.txt")),
    (FineTag::PDT, "PDT.txt", include_str!("../data/closed_class/PDT.txt")),
    (FineTag::DT, "DT.txt", include_str!("../data/closed_class/DT.txt")),
    (FineTag::CC, "CC.txt", include_str!("../data/closed_class/CC.txt")),
    (FineTag::TO, "TO.txt", include_str!("../data/closed_class/TO.txt")),
    (FineTag::IN, "IN.txt", include_str!("../data/closed_class/IN.txt")),
    (FineTag::MD, "MD.txt", include_str!("../data/closed_class/MD.txt")),
    (FineTag::EX, "EX.txt", include_str!("../data/closed_class/EX.txt")),
    (FineTag::VBP, "VBP.txt", include_str!("../data/closed_class/VBP.txt")),
    (FineTag::VBZ, "VBZ.txt", include_str!("../data/closed_class/VBZ.txt")),
    (FineTag::VBD, "VBD.txt", include_str!("../data/closed_class/VBD.txt")),
    (FineTag::VBN, "VBN.txt", include_str!("../data/closed_class/VBN.txt")),
    (FineTag::VB, "VB.txt", include_str!("../data/closed_class/VB.txt")),
    (FineTag::RB, "RB.txt", include_str!("../data/closed_class/RB.txt")),
    (FineTag::UH, "UH.txt", include_str!("../data/closed_class/UH.txt")),
];

/// All lexical resources used by the feature pipeline.
#[derive(Debug, Clone)]
pub struct Lexicons {
    pub stopwords: HashSet<String>,
    pub negators: HashSet<String>,
    pub closed_class: HashMap<String, FineTag>,
    pub valence: HashMap<String, f64>,
    pub emotions: HashMap<String, Vec<Emotion>>,
    pub vaccines: VaccineAliases,
}

/// Alias table mapping surface forms onto canonical vaccine names.
#[derive(Debug, Clone, Default)]
pub struct VaccineAliases {
    /// (lowercase alias, canonical name), longest alias first.
    pub aliases: Vec<(String, String)>,
}

impl VaccineAliases {
    pub fn canonical_names(&self) -> Vec<String> {
        let set: std::collections::BTreeSet<&String> = self.aliases.iter().map(|(_, c)| c).collect();
        set.into_iter().cloned().collect()
    }
}

impl Lexicons {
    /// The lexicons compiled into the binary.
    pub fn bundled() -> Self {
        Self::parse_all(&Sources::default()).expect("bundled lexicons are well-formed")
    }

    /// Loads lexicons from `dir`, falling back to the bundled copy for any
    /// file the directory does not provide. Recognised names: `stopwords.txt`,
    /// `negators.txt`, `valence.tsv`, `emotion.tsv`, `vaccines.tsv` and
    /// `closed_class/<TAG>.txt`.
    pub fn from_dir(dir: &Path) -> Result<Self, LexiconError> {
        let read = |name: &str| -> Result<Option<String>, LexiconError> {
            let path = dir.join(name);
            if !path.exists() {
                return Ok(None);
            }
            fs::read_to_string(&path).map(Some).map_err(|source| LexiconError::Io { path, source })
        };
        let mut sources = Sources::default();
        if let Some(s) = read("stopwords.txt")? {
            sources.stopwords = s.into();
        }
        if let Some(s) = read("negators.txt")? {
            sources.negators = s.into();
        }
        if let Some(s) = read("valence.tsv")? {
            sources.valence = s.into();
        }
        if let Some(s) = read("emotion.tsv")? {
            sources.emotion = s.into();
        }
        if let Some(s) = read("vaccines.tsv")? {
            sources.vaccines = s.into();
        }
        for (i, (_, file, _)) in CLOSED_CLASS.iter().enumerate() {
            if let Some(s) = read(&format!("closed_class/{file}"))? {
                sources.closed[i] = s.into();
            }
        }
        Self::parse_all(&sources)
    }

    fn parse_all(src: &Sources) -> Result<Self, LexiconError> {
        let stopwords = word_list(&src.stopwords).collect();
        let negators = word_list(&src.negators).collect();

        let mut closed_class = HashMap::new();
        for ((tag, _, _), text) in CLOSED_CLASS.iter().zip(&src.closed) {
            for word in word_list(text) {
                closed_class.entry(word).or_insert(*tag);
            }
        }

        let mut valence = HashMap::new();
        for (line, key, value) in tsv_rows(&src.valence, "valence.tsv")? {
            let v: f64 = value.parse().map_err(|_| malformed("valence.tsv", line, "valence is not a number"))?;
            if !(-4.0..=4.0).contains(&v) {
                return Err(malformed("valence.tsv", line, "valence outside [-4, 4]"));
            }
            valence.insert(key.to_lowercase(), v);
        }

        let mut emotions: HashMap<String, Vec<Emotion>> = HashMap::new();
        for (line, key, value) in tsv_rows(&src.emotion, "emotion.tsv")? {
            let e = Emotion::parse(value).ok_or_else(|| malformed("emotion.tsv", line, "unknown emotion"))?;
            let entry = emotions.entry(key.to_lowercase()).or_default();
            if !entry.contains(&e) {
                entry.push(e);
            }
        }

        let mut table: BTreeMap<String, String> = BTreeMap::new();
        for (_, canonical, alias) in tsv_rows(&src.vaccines, "vaccines.tsv")? {
            table.insert(alias.to_lowercase(), canonical.to_lowercase());
        }
        let mut aliases: Vec<(String, String)> = table.into_iter().collect();
        aliases.sort_by(|a, b| b.0.chars().count().cmp(&a.0.chars().count()).then_with(|| a.0.cmp(&b.0)));

        Ok(Self { stopwords, negators, closed_class, valence, emotions, vaccines: VaccineAliases { aliases } })
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(&word.to_lowercase())
    }

    pub fn is_negator(&self, word: &str) -> bool {
        let w = word.to_lowercase();
        self.negators.contains(&w) || w.ends_with("n't")
    }
}

struct Sources {
    stopwords: std::borrow::Cow<'static, str>,
    negators: std::borrow::Cow<'static, str>,
    valence: std::borrow::Cow<'static, str>,
    emotion: std::borrow::Cow<'static, str>,
    vaccines: std::borrow::Cow<'static, str>,
    closed: Vec<std::borrow::Cow<'static, str>>,
}

impl Default for Sources {
    fn default() -> Self {
        Self {
            stopwords: STOPWORDS.into(),
            negators: NEGATORS.into(),
            valence: VALENCE.into(),
            emotion: EMOTION.into(),
            vaccines: VACCINES.into(),
            closed: CLOSED_CLASS.iter().map(|(_, _, s)| (*s).into()).collect(),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
}

fn word_list(text: &str) -> impl Iterator<Item = String> + '_ {
    content_lines(text).map(|(_, l)| l.trim().to_lowercase())
}

fn tsv_rows<'a>(text: &'a str, file: &str) -> Result<Vec<(usize, &'a str, &'a str)>, LexiconError> {
    content_lines(text)
        .map(|(line, l)| {
            let mut parts = l.splitn(2, '\t');
            match (parts.next(), parts.next()) {
                (Some(k), Some(v)) if !k.trim().is_empty() && !v.trim().is_empty() => Ok((line, k.trim(), v.trim())),
                _ => Err(malformed(file, line, "expected two tab-separated fields")),
            }
        })
        .collect()
}

fn malformed(file: &str, line: usize, message: &str) -> LexiconError {
    LexiconError::Malformed { file: file.to_string(), line, message: message.to_string() }
}
