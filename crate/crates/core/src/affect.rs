//! Lexicon sentiment (compound score) and five-way emotion scoring.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lexicon::Lexicons;
use crate::syntax::Token;

/// Normalisation constant in `S / sqrt(S^2 + ALPHA)`.
pub const ALPHA: f64 = 15.0;
/// Multiplier applied to a lexicon hit preceded by a negator.
pub const NEGATION_SCALAR: f64 = -0.74;
/// Negators are looked for this many word tokens back from a hit.
pub const NEGATION_WINDOW: usize = 3;
pub const THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentCategory {
    Positive,
    Negative,
    Neutral,
}

impl SentimentCategory {
    pub const ALL: [SentimentCategory; 3] = [Self::Positive, Self::Negative, Self::Neutral];

    pub fn from_compound(compound: f64) -> Self {
        if compound >= THRESHOLD {
            Self::Positive
        } else if compound <= -THRESHOLD {
            Self::Negative
        } else {
            Self::Neutral
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Neutral => "neutral",
        }
    }
}

impl fmt::Display for SentimentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore {
    pub compound: f64,
    pub category: SentimentCategory,
}

/// Maps a raw valence sum into (-1, 1).
pub fn normalize(sum: f64) -> f64 {
    if sum == 0.0 {
        return 0.0;
    }
    sum / (sum * sum + ALPHA).sqrt()
}

/// Sums lexicon valences over word tokens, damping hits that follow a
/// negator, and normalises the sum to a compound score.
pub fn sentiment_score(tokens: &[Token], lexicons: &Lexicons) -> SentimentScore {
    let words: Vec<String> = tokens.iter().filter(|t| t.is_word()).map(|t| t.surface.to_lowercase()).collect();
    let mut sum = 0.0;
    for (i, word) in words.iter().enumerate() {
        let Some(&valence) = lexicons.valence.get(word) else {
            continue;
        };
        let negated = words[i.saturating_sub(NEGATION_WINDOW)..i].iter().any(|w| lexicons.is_negator(w));
        sum += if negated { valence * NEGATION_SCALAR } else { valence };
    }
    let compound = normalize(sum);
    SentimentScore { compound, category: SentimentCategory::from_compound(compound) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happiness,
    Fear,
    Anger,
    Surprise,
    Sadness,
}

impl Emotion {
    /// Feature-column order.
    pub const COLUMNS: [Emotion; 5] = [Self::Happiness, Self::Fear, Self::Anger, Self::Surprise, Self::Sadness];
    /// Winner among tied maxima: earlier entries beat later ones.
    pub const TIE_BREAK: [Emotion; 5] = [Self::Fear, Self::Surprise, Self::Sadness, Self::Anger, Self::Happiness];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_lowercase().as_str() {
            "happiness" | "happy" => Some(Self::Happiness),
            "fear" => Some(Self::Fear),
            "anger" | "angry" => Some(Self::Anger),
            "surprise" => Some(Self::Surprise),
            "sadness" | "sad" => Some(Self::Sadness),
            _ => None,
        }
    }

    pub fn column(self) -> usize {
        Self::COLUMNS.iter().position(|e| *e == self).unwrap()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Happiness => "happiness",
            Self::Fear => "fear",
            Self::Anger => "anger",
            Self::Surprise => "surprise",
            Self::Sadness => "sadness",
        }
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmotionScores {
    /// Normalised scores in `Emotion::COLUMNS` order.
    pub scores: [f64; 5],
    pub dominant: Option<Emotion>,
}

impl EmotionScores {
    pub fn score(&self, e: Emotion) -> f64 {
        self.scores[e.column()]
    }

    /// Builds scores from raw per-emotion hit counts (column order).
    pub fn from_counts(counts: [u32; 5]) -> Self {
        let total: u32 = counts.iter().sum();
        if total == 0 {
            return Self { scores: [0.0; 5], dominant: None };
        }
        let scores = counts.map(|c| f64::from(c) / f64::from(total));
        let max = *counts.iter().max().unwrap();
        let dominant = Emotion::TIE_BREAK.iter().copied().find(|e| counts[e.column()] == max);
        Self { scores, dominant }
    }
}

pub fn emotion_scores(tokens: &[Token], lexicons: &Lexicons) -> EmotionScores {
    let mut counts = [0u32; 5];
    for token in tokens.iter().filter(|t| t.is_word()) {
        if let Some(emotions) = lexicons.emotions.get(&token.surface.to_lowercase()) {
            for e in emotions {
                counts[e.column()] += 1;
            }
        }
    }
    EmotionScores::from_counts(counts)
}

/// One-hot over `Emotion::COLUMNS`; all zeros without a dominant emotion.
pub fn one_hot_emotion(e: &EmotionScores) -> [f64; 5] {
    let mut v = [0.0; 5];
    if let Some(d) = e.dominant {
        v[d.column()] = 1.0;
    }
    v
}
