//! Tweet tokenization, n-gram extraction and hashtag word-break segmentation.
//!
//! Tokenization rules:
//!
//! * text is brought to NFC and lowercased;
//! * whitespace-delimited URLs are dropped unless [`TokenizerOptions::keep_urls`]
//!   is set, in which case their punctuation simply splits them
//!   (`pic.twitter.com/x` becomes `pic twitter com x`);
//! * every non-alphanumeric character separates tokens, so `#` and `@`
//!   disappear while the word after them stays, and `don't` becomes `don t`;
//! * numerals and stop words are kept.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::ops::Deref;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MIN_N: usize = 1;
pub const MAX_N: usize = 5;

/// Lowercase, whitespace-free, non-empty tokens of one post.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSeq(Vec<String>);

impl TokenSeq {
    pub fn into_inner(self) -> Vec<String> {
        self.0
    }

    /// Tokens joined by single spaces.
    pub fn joined(&self) -> String {
        self.0.join(" ")
    }
}

impl Deref for TokenSeq {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

impl From<Vec<String>> for TokenSeq {
    fn from(tokens: Vec<String>) -> Self {
        TokenSeq(tokens)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NGram {
    pub text: String,
    pub n: usize,
}

impl NGram {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.text.split(' ')
    }
}

impl fmt::Display for NGram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct TokenizerOptions {
    /// Split URLs on punctuation instead of dropping them.
    pub keep_urls: bool,
    /// When set, `#hashtag` words are replaced by their dictionary segmentation.
    pub hashtag_dictionary: Option<Arc<Dictionary>>,
}

impl TokenizerOptions {
    pub fn keep_urls(keep: bool) -> Self {
        TokenizerOptions {
            keep_urls: keep,
            hashtag_dictionary: None,
        }
    }
}

/// NFC, lowercase, NFC again (lowercasing can decompose).
pub fn fold_case(s: &str) -> String {
    // ASCII is already NFC and lowercases to ASCII.
    if s.is_ascii() {
        return s.to_ascii_lowercase();
    }
    let lowered: String = s.nfc().flat_map(char::to_lowercase).collect();
    lowered.nfc().collect()
}

fn is_url(word: &str) -> bool {
    let w = word.trim_start_matches(|c: char| !c.is_alphanumeric());
    let lower = w.to_ascii_lowercase();
    lower.starts_with("http://")
        || lower.starts_with("https://")
        || lower.starts_with("www.")
        || lower.starts_with("pic.twitter.com/")
        || lower.contains("t.co/")
}

/// Alphanumeric runs of `word`, each flagged with whether a `#` came right before it.
fn runs(word: &str) -> impl Iterator<Item = (bool, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    let mut prev_hash = false;
    let mut run_hash = false;
    for (i, c) in word.char_indices() {
        if c.is_alphanumeric() {
            if start.is_none() {
                start = Some(i);
                run_hash = prev_hash;
            }
        } else if let Some(s) = start.take() {
            out.push((run_hash, &word[s..i]));
        }
        prev_hash = c == '#';
    }
    if let Some(s) = start {
        out.push((run_hash, &word[s..]));
    }
    out.into_iter()
}

pub fn normalize(text: &str) -> TokenSeq {
    normalize_with(text, &TokenizerOptions::default())
}

pub fn normalize_with(text: &str, opts: &TokenizerOptions) -> TokenSeq {
    let folded = fold_case(text);
    let mut tokens = Vec::new();
    for word in folded.split_whitespace() {
        if !opts.keep_urls && is_url(word) {
            continue;
        }
        for (after_hash, run) in runs(word) {
            match &opts.hashtag_dictionary {
                Some(dict) if after_hash => tokens.extend(segment_hashtag(run, dict)),
                _ => tokens.push(run.to_owned()),
            }
        }
    }
    TokenSeq(tokens)
}

/// Hashtags mentioned in `text`: lowercase, without `#`, first occurrence order.
/// Underscores are part of a hashtag; URLs are never searched.
pub fn hashtags_in(text: &str) -> Vec<String> {
    let folded = fold_case(text);
    let mut tags: Vec<String> = Vec::new();
    for word in folded.split_whitespace().filter(|w| !is_url(w)) {
        let mut rest = word;
        while let Some(pos) = rest.find('#') {
            rest = &rest[pos + 1..];
            let end = rest
                .find(|c: char| !(c.is_alphanumeric() || c == '_'))
                .unwrap_or(rest.len());
            let tag = &rest[..end];
            if !tag.is_empty() && !tags.iter().any(|t| t == tag) {
                tags.push(tag.to_owned());
            }
            rest = &rest[end..];
        }
    }
    tags
}

pub(crate) fn check_n(n: usize) -> Result<()> {
    if (MIN_N..=MAX_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::BadN {
            n,
            min: MIN_N,
            max: MAX_N,
        })
    }
}

/// Width-`n` windows over `tokens`, stride one, in order.
pub fn extract_ngrams(tokens: &[String], n: usize) -> Result<Vec<NGram>> {
    check_n(n)?;
    Ok(tokens
        .windows(n)
        .map(|w| NGram {
            text: w.join(" "),
            n,
        })
        .collect())
}

/// Word weights for hashtag segmentation, keyed by lowercase word.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WordDictionary<F> {
    weights: HashMap<String, F>,
    longest: usize,
}

pub type Dictionary = WordDictionary<f64>;

impl<F: Real> WordDictionary<F> {
    pub fn new() -> Self {
        WordDictionary {
            weights: HashMap::new(),
            longest: 0,
        }
    }

    /// Adds `word` with a positive, finite weight. Later entries replace earlier ones.
    pub fn insert(&mut self, word: &str, weight: F) -> Result<()> {
        if !(weight.is_finite() && weight > F::zero()) {
            return Err(Error::MalformedRecord(format!(
                "weight for `{word}` must be positive and finite"
            )));
        }
        let word = fold_case(word.trim());
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(Error::MalformedRecord(format!("invalid dictionary word `{word}`")));
        }
        self.longest = self.longest.max(word.chars().count());
        self.weights.insert(word, weight);
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, F)>) -> Result<Self> {
        let mut dict = Self::new();
        for (w, f) in pairs {
            dict.insert(w, f)?;
        }
        Ok(dict)
    }

    pub fn weight(&self, word: &str) -> Option<F> {
        self.weights.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `word<TAB>weight` lines; blank lines and `#` comments are skipped.
    pub fn parse(input: impl BufRead, origin: &Path) -> Result<Self> {
        let mut dict = Self::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::bad_file(origin, i + 1, msg);
            let (word, weight) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `word<TAB>weight`".into()))?;
            let weight: f64 = weight
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad weight: {e}")))?;
            let weight = F::from_f64(weight).ok_or_else(|| bad("weight out of range".into()))?;
            dict.insert(word, weight).map_err(|e| bad(e.to_string()))?;
        }
        Ok(dict)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), path)
    }
}

impl Dictionary {
    /// Small built-in English dictionary with a few protest-related words.
    pub fn demo() -> Self {
        Self::parse(
            include_str!("../data/demo_dictionary.tsv").as_bytes(),
            Path::new("<demo dictionary>"),
        )
        .expect("demo dictionary is well formed")
    }
}

/// Scores within this relative distance are treated as tied.
const SCORE_TIE_EPS: f64 = 1e-9;

pub(crate) fn scores_tied<F: Real>(a: F, b: F) -> bool {
    let scale = F::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= F::from_f64(SCORE_TIE_EPS).unwrap() * scale
}

struct Split<F> {
    score: F,
    words: Vec<String>,
}

impl<F: Real> Split<F> {
    /// Higher log-weight sum, then fewer words, then lexicographically smaller.
    fn beats(&self, other: &Split<F>) -> bool {
        if !scores_tied(self.score, other.score) {
            return self.score > other.score;
        }
        if self.words.len() != other.words.len() {
            return self.words.len() < other.words.len();
        }
        self.words < other.words
    }
}

/// Best split of `tag` into dictionary words by total log weight, or `[tag]`
/// when no complete split exists.
pub fn segment_hashtag<F: Real>(tag: &str, dict: &WordDictionary<F>) -> Vec<String> {
    let bounds: Vec<usize> = tag
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(tag.len()))
        .collect();
    let chars = bounds.len() - 1;
    if chars == 0 {
        return vec![tag.to_owned()];
    }

    // best[i]: optimal segmentation of the suffix starting at char i.
    let mut best: Vec<Option<Split<F>>> = (0..=chars).map(|_| None).collect();
    best[chars] = Some(Split {
        score: F::zero(),
        words: Vec::new(),
    });
    for i in (0..chars).rev() {
        let mut winner: Option<Split<F>> = None;
        for j in (i + 1)..=chars.min(i + dict.longest) {
            let Some(rest) = &best[j] else { continue };
            let piece = &tag[bounds[i]..bounds[j]];
            let Some(weight) = dict.weight(piece) else { continue };
            let mut words = Vec::with_capacity(rest.words.len() + 1);
            words.push(piece.to_owned());
            words.extend(rest.words.iter().cloned());
            let candidate = Split {
                score: weight.ln() + rest.score,
                words,
            };
            if winner.as_ref().is_none_or(|w| candidate.beats(w)) {
                winner = Some(candidate);
            }
        }
        best[i] = winner;
    }

    match best.swap_remove(0) {
        Some(split) => split.words,
        None => vec![tag.to_owned()],
    }
}
