//! Event detection over timestamped short posts.
//!
//! The pipeline reads tweet records ([`ingest`]), tokenizes them and cuts the
//! token streams into word n-grams ([`textproc`]), builds per-gram daily time
//! series ([`aggregate`]), and ranks grams that are frequent, widespread and
//! persistent as burst or sustained events ([`detect`]). [`sentiment`] averages
//! lexicon polarity per hashtag, and [`synthbench`] generates corpora with known
//! events to measure detector precision and recall.
//!
//! Metric and scoring code is generic over the number type (see [`scalar`]);
//! the aliases below fix the usual choices.

pub mod aggregate;
pub mod detect;
pub mod error;
pub mod ingest;
pub mod scalar;
pub mod sentiment;
pub mod synthbench;
pub mod textproc;

pub use aggregate::{build_index, build_index_with, top_k, timeline, AggregateIndex, IndexOptions, NGramStats};
pub use detect::{
    classify, confirm_popularity, consecutive_top_m, density, detect_events, detect_events_with,
    duration, scatter_data, Category, DetectOptions, PopularityOracle, ScatterRow, ThresholdConfig,
};
pub use error::{Error, Result};
pub use ingest::{
    bucket_of, load_corpus, parse_record, Bucket, Corpus, Granularity, IngestReport, LoadOptions,
    RecordFormat, TimeWindow, TweetRecord,
};
pub use scalar::{Rational, Real, Scalar};
pub use synthbench::{evaluate, generate, EvalReport, SyntheticSpec};
pub use textproc::{extract_ngrams, normalize, segment_hashtag, NGram, TokenSeq, TokenizerOptions};

/// Candidate with a floating point density.
pub type EventCandidate = detect::EventCandidate<f64>;
/// Candidate whose density is an exact fraction.
pub type ExactEventCandidate = detect::EventCandidate<Rational>;
pub type Dictionary = textproc::WordDictionary<f64>;
pub type PolarityLexicon = sentiment::PolarityLexicon<f64>;
pub type SentimentScore = sentiment::SentimentScore<f64>;
pub type HashtagSentiment = sentiment::HashtagSentiment<f64>;
