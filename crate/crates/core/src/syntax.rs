//! Tokenization, rule-based part-of-speech tagging and per-tweet syntactic
//! profiles.
//!
//! The tagger is a fixed cascade: closed-class lexicon, suffix heuristics,
//! capitalisation, then a common-noun default. It trades accuracy for
//! being fully deterministic and inspectable.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicons;

#[derive(Debug, Error, PartialEq)]
pub enum SyntaxError {
    #[error("no word tokens in text")]
    NoTokens,
    #[error("cannot tag an empty token list")]
    EmptyInput,
    #[error("{tokens} tokens but {tags} tags")]
    Misaligned { tokens: usize, tags: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    /// Offset in code points into the cleaned text.
    pub start: usize,
}

impl Token {
    /// A token carrying at least one letter or digit.
    pub fn is_word(&self) -> bool {
        self.surface.chars().any(char::is_alphanumeric)
    }
}

/// Penn-Treebank-style tags. `PRPS` and `WPS` stand for `PRP$` and `WP$`.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FineTag {
    CC,
    CD,
    DT,
    EX,
    FW,
    IN,
    JJ,
    JJR,
    JJS,
    MD,
    NN,
    NNS,
    NNP,
    NNPS,
    PDT,
    POS,
    PRP,
    PRPS,
    RB,
    RBR,
    RBS,
    RP,
    SYM,
    TO,
    UH,
    VB,
    VBD,
    VBG,
    VBN,
    VBP,
    VBZ,
    WDT,
    WP,
    WPS,
    WRB,
    Punct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bucket {
    Noun,
    Pronoun,
    Verb,
    Adjective,
    Adverb,
    Conjunction,
    Determiner,
    WhWord,
    Other,
}

impl FineTag {
    pub fn bucket(self) -> Bucket {
        use FineTag::*;
        match self {
            NN | NNS | NNP | NNPS => Bucket::Noun,
            PRP | PRPS => Bucket::Pronoun,
            VB | VBD | VBG | VBN | VBP | VBZ | MD => Bucket::Verb,
            JJ | JJR | JJS => Bucket::Adjective,
            RB | RBR | RBS => Bucket::Adverb,
            CC => Bucket::Conjunction,
            DT | PDT => Bucket::Determiner,
            WDT | WP | WPS | WRB => Bucket::WhWord,
            CD | EX | FW | IN | POS | RP | SYM | TO | UH | Punct => Bucket::Other,
        }
    }

    pub fn as_str(self) -> &'static str {
        use FineTag::*;
        match self {
            PRPS => "PRP$",
            WPS => "WP$",
            Punct => ".",
            CC => "CC",
            CD => "CD",
            DT => "DT",
            EX => "EX",
            FW => "FW",
            IN => "IN",
            JJ => "JJ",
            JJR => "JJR",
            JJS => "JJS",
            MD => "MD",
            NN => "NN",
            NNS => "NNS",
            NNP => "NNP",
            NNPS => "NNPS",
            PDT => "PDT",
            POS => "POS",
            PRP => "PRP",
            RB => "RB",
            RBR => "RBR",
            RBS => "RBS",
            RP => "RP",
            SYM => "SYM",
            TO => "TO",
            UH => "UH",
            VB => "VB",
            VBD => "VBD",
            VBG => "VBG",
            VBN => "VBN",
            VBP => "VBP",
            VBZ => "VBZ",
            WDT => "WDT",
            WP => "WP",
            WRB => "WRB",
        }
    }
}

impl fmt::Display for FineTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PosTag {
    pub fine: FineTag,
    pub bucket: Bucket,
}

impl From<FineTag> for PosTag {
    fn from(fine: FineTag) -> Self {
        Self { fine, bucket: fine.bucket() }
    }
}

/// Splits on whitespace, peels leading and trailing punctuation into
/// one-character tokens, and makes `&` a token of its own. Apostrophes and
/// hyphens inside a word stay in it.
pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && !chars[i].is_whitespace() {
            i += 1;
        }
        split_chunk(&chars[start..i], start, &mut tokens);
    }
    if !tokens.iter().any(Token::is_word) {
        return Err(SyntaxError::NoTokens);
    }
    Ok(tokens)
}

fn split_chunk(chunk: &[char], offset: usize, out: &mut Vec<Token>) {
    // '&' splits the chunk into independent pieces
    let mut piece_start = 0;
    for (j, &c) in chunk.iter().enumerate() {
        if c == '&' {
            split_piece(&chunk[piece_start..j], offset + piece_start, out);
            out.push(Token { surface: "&".into(), start: offset + j });
            piece_start = j + 1;
        }
    }
    split_piece(&chunk[piece_start..], offset + piece_start, out);
}

fn split_piece(piece: &[char], offset: usize, out: &mut Vec<Token>) {
    if piece.is_empty() {
        return;
    }
    let mut lo = 0;
    let mut hi = piece.len();
    while lo < hi && !piece[lo].is_alphanumeric() {
        lo += 1;
    }
    while hi > lo && !piece[hi - 1].is_alphanumeric() {
        hi -= 1;
    }
    for (j, c) in piece[..lo].iter().enumerate() {
        out.push(Token { surface: c.to_string(), start: offset + j });
    }
    if lo < hi {
        out.push(Token { surface: piece[lo..hi].iter().collect(), start: offset + lo });
    }
    for (j, c) in piece[hi..].iter().enumerate() {
        out.push(Token { surface: c.to_string(), start: offset + hi + j });
    }
}

fn is_number(word: &str) -> bool {
    word.chars().any(|c| c.is_ascii_digit()) && word.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | ',' | '%'))
}

fn suffix_tag(lower: &str) -> Option<FineTag> {
    let n = lower.chars().count();
    let ends = |s: &str| lower.ends_with(s);
    if n > 4 && ends("ly") {
        return Some(FineTag::RB);
    }
    if n > 4 && ends("ing") {
        return Some(FineTag::VBG);
    }
    if n > 3 && ends("ed") {
        return Some(FineTag::VBD);
    }
    if n > 4 && ["ous", "ful", "able", "ible", "less", "ive", "ish"].iter().any(|s| ends(s)) {
        return Some(FineTag::JJ);
    }
    if n > 4 && ["tion", "sion", "ment", "ness", "ity"].iter().any(|s| ends(s)) {
        return Some(FineTag::NN);
    }
    None
}

/// Deterministic cascade tagger; see the module docs.
pub fn pos_tag(tokens: &[Token], lexicons: &Lexicons) -> Result<Vec<PosTag>, SyntaxError> {
    if tokens.is_empty() {
        return Err(SyntaxError::EmptyInput);
    }
    let mut tags = Vec::with_capacity(tokens.len());
    let mut sentence_start = true;
    for token in tokens {
        let tag = if !token.is_word() { FineTag::Punct } else { tag_word(&token.surface, sentence_start, lexicons) };
        if tag != FineTag::Punct {
            sentence_start = false;
        } else if matches!(token.surface.as_str(), "." | "!" | "?") {
            sentence_start = true;
        }
        tags.push(PosTag::from(tag));
    }
    Ok(tags)
}

fn tag_word(surface: &str, sentence_start: bool, lexicons: &Lexicons) -> FineTag {
    let lower = surface.to_lowercase();
    if let Some(tag) = lexicons.closed_class.get(&lower) {
        return *tag;
    }
    if is_number(&lower) {
        return FineTag::CD;
    }
    if let Some(tag) = suffix_tag(&lower) {
        return tag;
    }
    let capitalized = !sentence_start && surface.chars().next().is_some_and(char::is_uppercase);
    // plural / third-person: strip the "s" and retry the first two stages
    if lower.chars().count() > 3 && lower.ends_with('s') && !lower.ends_with("ss") {
        let stem = &lower[..lower.len() - 1];
        return match lexicons.closed_class.get(stem).copied().or_else(|| suffix_tag(stem)) {
            Some(FineTag::VB) => FineTag::VBZ,
            _ if capitalized => FineTag::NNPS,
            _ => FineTag::NNS,
        };
    }
    if capitalized {
        return FineTag::NNP;
    }
    FineTag::NN
}

/// Syntactic attribute counts for one tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntacticProfile {
    pub nouns: u32,
    pub pronouns: u32,
    pub verbs: u32,
    pub adjectives: u32,
    pub adverbs: u32,
    pub conjunctions: u32,
    pub determiners: u32,
    pub wh_words: u32,
    /// Tokens (punctuation and other tags) outside the eight named buckets.
    pub other: u32,
    pub stop_words: u32,
    /// Type-token ratio over case-folded word tokens, scaled to 0..=100.
    pub ttr: f64,
    /// Mean characters per word token.
    pub avg_token_length: f64,
    /// Number of word tokens.
    pub n_tokens: u32,
}

impl SyntacticProfile {
    pub fn bucket_count(&self, bucket: Bucket) -> u32 {
        match bucket {
            Bucket::Noun => self.nouns,
            Bucket::Pronoun => self.pronouns,
            Bucket::Verb => self.verbs,
            Bucket::Adjective => self.adjectives,
            Bucket::Adverb => self.adverbs,
            Bucket::Conjunction => self.conjunctions,
            Bucket::Determiner => self.determiners,
            Bucket::WhWord => self.wh_words,
            Bucket::Other => self.other,
        }
    }
}

pub fn syntactic_profile(
    tokens: &[Token],
    tags: &[PosTag],
    lexicons: &Lexicons,
) -> Result<SyntacticProfile, SyntaxError> {
    if tokens.len() != tags.len() {
        return Err(SyntaxError::Misaligned { tokens: tokens.len(), tags: tags.len() });
    }
    let mut p = SyntacticProfile {
        nouns: 0,
        pronouns: 0,
        verbs: 0,
        adjectives: 0,
        adverbs: 0,
        conjunctions: 0,
        determiners: 0,
        wh_words: 0,
        other: 0,
        stop_words: 0,
        ttr: 0.0,
        avg_token_length: 0.0,
        n_tokens: 0,
    };
    let mut types = HashSet::new();
    let mut chars = 0usize;
    for (token, tag) in tokens.iter().zip(tags) {
        let slot = match tag.bucket {
            Bucket::Noun => &mut p.nouns,
            Bucket::Pronoun => &mut p.pronouns,
            Bucket::Verb => &mut p.verbs,
            Bucket::Adjective => &mut p.adjectives,
            Bucket::Adverb => &mut p.adverbs,
            Bucket::Conjunction => &mut p.conjunctions,
            Bucket::Determiner => &mut p.determiners,
            Bucket::WhWord => &mut p.wh_words,
            Bucket::Other => &mut p.other,
        };
        *slot += 1;
        if token.is_word() {
            let lower = token.surface.to_lowercase();
            if lexicons.stopwords.contains(&lower) {
                p.stop_words += 1;
            }
            chars += token.surface.chars().count();
            types.insert(lower);
            p.n_tokens += 1;
        }
    }
    if p.n_tokens == 0 {
        return Err(SyntaxError::NoTokens);
    }
    p.ttr = 100.0 * types.len() as f64 / f64::from(p.n_tokens);
    p.avg_token_length = chars as f64 / f64::from(p.n_tokens);
    Ok(p)
}

/// Tokenize, tag and profile cleaned text in one go.
pub fn analyze(text: &str, lexicons: &Lexicons) -> Result<(Vec<Token>, SyntacticProfile), SyntaxError> {
    let tokens = tokenize(text)?;
    let tags = pos_tag(&tokens, lexicons)?;
    let profile = syntactic_profile(&tokens, &tags, lexicons)?;
    Ok((tokens, profile))
}
