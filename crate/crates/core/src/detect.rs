//! Event metrics, candidate filters, burst classification and ranking.
//!
//! A gram becomes an event candidate when it
//!
//! 1. occurs in at least `min_distinct_tweets` tweets from `min_distinct_accounts` accounts,
//! 2. ranks within the daily top `top_m` of its order on `min_consecutive` consecutive buckets,
//! 3. classifies as [`Category::Burst`] or [`Category::Sustained`].
//!
//! Candidates are ranked by density (occurrences per bucket), then total count,
//! then gram text.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aggregate::{self, AggregateIndex, NGramStats};
use crate::error::{Error, Result};
use crate::ingest::Bucket;
use crate::scalar::Scalar;
use crate::textproc::fold_case;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub min_distinct_tweets: u64,
    pub min_distinct_accounts: u64,
    pub top_m: usize,
    pub min_consecutive: usize,
    pub burst_min_count: u64,
    /// Largest effective duration (buckets) a burst may span.
    pub burst_max_duration: u64,
    pub sustained_min_count: u64,
    /// Smallest effective duration (buckets) of a sustained event.
    pub sustained_min_duration: u64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            min_distinct_tweets: 10,
            min_distinct_accounts: 5,
            top_m: 10,
            min_consecutive: 3,
            burst_min_count: 1000,
            burst_max_duration: 31,
            sustained_min_count: 500,
            sustained_min_duration: 90,
        }
    }
}

impl ThresholdConfig {
    pub const KEYS: [&'static str; 8] = [
        "min_distinct_tweets",
        "min_distinct_accounts",
        "top_m",
        "min_consecutive",
        "burst_min_count",
        "burst_max_duration",
        "sustained_min_count",
        "sustained_min_duration",
    ];

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.min_distinct_tweets,
            self.min_distinct_accounts,
            self.top_m as u64,
            self.min_consecutive as u64,
            self.burst_min_count,
            self.burst_max_duration,
            self.sustained_min_count,
            self.sustained_min_duration,
        ];
        if let Some((key, _)) = Self::KEYS.iter().zip(fields).find(|(_, v)| *v == 0) {
            return Err(Error::BadConfig(format!("{key} must be at least 1")));
        }
        if self.burst_max_duration >= self.sustained_min_duration {
            return Err(Error::BadConfig(format!(
                "burst_max_duration ({}) must be below sustained_min_duration ({})",
                self.burst_max_duration, self.sustained_min_duration
            )));
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse = |v: &str| {
            v.parse::<u64>()
                .map_err(|e| Error::BadConfig(format!("{key} = {v}: {e}")))
        };
        match key {
            "min_distinct_tweets" => self.min_distinct_tweets = parse(value)?,
            "min_distinct_accounts" => self.min_distinct_accounts = parse(value)?,
            "top_m" => self.top_m = parse(value)? as usize,
            "min_consecutive" => self.min_consecutive = parse(value)? as usize,
            "burst_min_count" => self.burst_min_count = parse(value)?,
            "burst_max_duration" => self.burst_max_duration = parse(value)?,
            "sustained_min_count" => self.sustained_min_count = parse(value)?,
            "sustained_min_duration" => self.sustained_min_duration = parse(value)?,
            other => return Err(Error::BadConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse(input: &str) -> Result<Self> {
        let mut cfg = ThresholdConfig::default();
        for (i, raw) in input.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::BadConfig(format!("line {}: expected `key = value`", i + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| Error::BadConfig(format!("line {}: {e}", i + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::bad_file(path, 0, e.to_string()))
    }

    /// The config as `key = value` lines, readable by [`ThresholdConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let values = [
            self.min_distinct_tweets,
            self.min_distinct_accounts,
            self.top_m as u64,
            self.min_consecutive as u64,
            self.burst_min_count,
            self.burst_max_duration,
            self.sustained_min_count,
            self.sustained_min_duration,
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Category {
    Burst,
    Sustained,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Burst => "Burst",
            Category::Sustained => "Sustained",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCandidate<T = f64> {
    pub gram: String,
    pub total_count: u64,
    pub distinct_tweets: u64,
    pub distinct_accounts: u64,
    pub raw_duration: u64,
    pub effective_duration: u64,
    pub density: T,
    pub category: Category,
    pub peak_bucket: Bucket,
    pub window: [Bucket; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub popularity: Option<f64>,
}

impl<T> EventCandidate<T> {
    pub fn n(&self) -> usize {
        self.gram.split(' ').count()
    }
}

/// `(last - first, last - first + 1)` in buckets.
pub fn duration(stats: &NGramStats) -> (u64, u64) {
    let raw = stats.last_bucket - stats.first_bucket;
    (raw, raw + 1)
}

/// Occurrences per bucket over the effective duration.
pub fn density<T: Scalar>(stats: &NGramStats) -> T {
    T::ratio(stats.total_count, duration(stats).1)
}

pub fn classify(stats: &NGramStats, cfg: &ThresholdConfig) -> Option<Category> {
    let (_, effective) = duration(stats);
    if stats.total_count >= cfg.burst_min_count && effective <= cfg.burst_max_duration {
        Some(Category::Burst)
    } else if stats.total_count >= cfg.sustained_min_count && effective >= cfg.sustained_min_duration
    {
        Some(Category::Sustained)
    } else {
        None
    }
}

/// Whether `gram` holds rank `<= m` on at least `run` consecutive buckets.
/// A missing bucket key breaks a run.
pub fn consecutive_top_m(
    daily: &BTreeMap<Bucket, Vec<String>>,
    gram: &str,
    m: usize,
    run: usize,
) -> bool {
    let mut streak = 0;
    let mut prev: Option<Bucket> = None;
    for (&bucket, list) in daily {
        if prev.is_some_and(|p| p + 1 != bucket) {
            streak = 0;
        }
        prev = Some(bucket);
        if list.iter().take(m).any(|g| g == gram) {
            streak += 1;
            if streak >= run {
                return true;
            }
        } else {
            streak = 0;
        }
    }
    false
}

/// Offline stand-in for search-trend confirmation: query → score in `[0, 100]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopularityOracle {
    scores: HashMap<String, f64>,
}

impl PopularityOracle {
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut scores = HashMap::new();
        for (q, s) in pairs {
            if !(0.0..=100.0).contains(&s) {
                return Err(Error::MalformedRecord(format!("score {s} for `{q}` outside [0, 100]")));
            }
            scores.insert(fold_case(q.trim()), s);
        }
        Ok(PopularityOracle { scores })
    }

    /// CSV rows `query,score`; a leading `query,score` header is allowed.
    pub fn parse(input: impl Read, origin: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(input);
        let mut pairs = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::bad_file(origin, i + 1, e.to_string()))?;
            if row.len() != 2 {
                return Err(Error::bad_file(origin, i + 1, "expected `query,score`"));
            }
            if i == 0 && row[0].eq_ignore_ascii_case("query") && row[1].eq_ignore_ascii_case("score") {
                continue;
            }
            let score: f64 = row[1]
                .parse()
                .map_err(|e| Error::bad_file(origin, i + 1, format!("bad score: {e}")))?;
            if !(0.0..=100.0).contains(&score) {
                return Err(Error::bad_file(origin, i + 1, "score outside [0, 100]"));
            }
            pairs.push((row[0].to_owned(), score));
        }
        Self::from_pairs(pairs.iter().map(|(q, s)| (q.as_str(), *s)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(file, path)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Case-insensitive exact lookup of `gram` in `oracle`.
pub fn confirm_popularity(gram: &str, oracle: &PopularityOracle) -> Option<f64> {
    oracle.scores.get(&fold_case(gram.trim())).copied()
}

#[derive(Debug, Clone, Copy)]
pub struct DetectOptions<'a> {
    pub oracle: Option<&'a PopularityOracle>,
    /// Drop candidates whose popularity is absent or below `popularity_floor`.
    pub require_confirmation: bool,
    pub popularity_floor: f64,
    /// Drop a gram when a longer indexed gram containing it has the exact same
    /// bucket series, i.e. every occurrence is part of the longer gram.
    pub suppress_subsumed: bool,
}

impl Default for DetectOptions<'_> {
    fn default() -> Self {
        DetectOptions {
            oracle: None,
            require_confirmation: false,
            popularity_floor: 0.0,
            suppress_subsumed: true,
        }
    }
}

fn passes_floors(stats: &NGramStats, cfg: &ThresholdConfig) -> bool {
    stats.distinct_tweets >= cfg.min_distinct_tweets
        && stats.distinct_accounts >= cfg.min_distinct_accounts
}

/// Grams of order `n` whose every occurrence extends to one (n+1)-gram.
fn subsumed_grams(index: &AggregateIndex, n: usize, min_count: u64) -> HashSet<String> {
    let mut out = HashSet::new();
    let (Ok(table), Ok(parents)) = (index.table(n), index.table(n + 1)) else {
        return out;
    };
    for parent in parents.values().filter(|p| p.total_count >= min_count) {
        let text = &parent.gram.text;
        let prefix_end = text.rfind(' ').expect("parent has n+1 >= 2 tokens");
        let suffix_start = text.find(' ').expect("parent has n+1 >= 2 tokens") + 1;
        for child in [&text[..prefix_end], &text[suffix_start..]] {
            if table
                .get(child)
                .is_some_and(|c| c.bucket_counts == parent.bucket_counts)
            {
                out.insert(child.to_owned());
            }
        }
    }
    out
}

/// Exact density order: higher density first, then higher count, then gram.
fn rank_order<T>(a: &EventCandidate<T>, b: &EventCandidate<T>) -> Ordering {
    let lhs = a.total_count as u128 * b.effective_duration as u128;
    let rhs = b.total_count as u128 * a.effective_duration as u128;
    rhs.cmp(&lhs)
        .then_with(|| b.total_count.cmp(&a.total_count))
        .then_with(|| a.gram.cmp(&b.gram))
}

pub fn candidate_from<T: Scalar>(stats: &NGramStats, category: Category) -> EventCandidate<T> {
    let (raw, effective) = duration(stats);
    EventCandidate {
        gram: stats.gram.text.clone(),
        total_count: stats.total_count,
        distinct_tweets: stats.distinct_tweets,
        distinct_accounts: stats.distinct_accounts,
        raw_duration: raw,
        effective_duration: effective,
        density: density(stats),
        category,
        peak_bucket: stats.peak_bucket(),
        window: [stats.first_bucket, stats.last_bucket],
        popularity: None,
    }
}

pub fn detect_events(index: &AggregateIndex, cfg: &ThresholdConfig) -> Result<Vec<EventCandidate>> {
    detect_events_with(index, cfg, &DetectOptions::default())
}

pub fn detect_events_with<T: Scalar>(
    index: &AggregateIndex,
    cfg: &ThresholdConfig,
    opts: &DetectOptions<'_>,
) -> Result<Vec<EventCandidate<T>>> {
    cfg.validate()?;
    if opts.require_confirmation && opts.oracle.is_none() {
        return Err(Error::OracleUnavailable);
    }
    let min_count = cfg.burst_min_count.min(cfg.sustained_min_count);

    let mut out = Vec::new();
    for n in index.nmin()..=index.nmax() {
        let table = index.table(n)?;
        let eligible: Vec<(&NGramStats, Category)> = table
            .values()
            .filter(|s| passes_floors(s, cfg))
            .filter_map(|s| classify(s, cfg).map(|c| (s, c)))
            .collect();
        if eligible.is_empty() {
            continue;
        }
        let daily = aggregate::daily_top_lists(index, n, cfg.top_m)?;
        let subsumed = if opts.suppress_subsumed {
            subsumed_grams(index, n, min_count)
        } else {
            HashSet::new()
        };
        for (stats, category) in eligible {
            let text = stats.gram.text.as_str();
            if subsumed.contains(text)
                || !consecutive_top_m(&daily, text, cfg.top_m, cfg.min_consecutive)
            {
                continue;
            }
            let mut cand = candidate_from::<T>(stats, category);
            if let Some(oracle) = opts.oracle {
                cand.popularity = confirm_popularity(text, oracle);
            }
            if opts.require_confirmation
                && cand.popularity.is_none_or(|p| p < opts.popularity_floor)
            {
                continue;
            }
            out.push(cand);
        }
    }
    out.sort_by(rank_order);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub gram: String,
    /// Effective duration in buckets.
    pub duration: u64,
    pub count: u64,
}

/// Duration/count pairs for the `k` most frequent grams of order `n`.
pub fn scatter_data(index: &AggregateIndex, n: usize, k: usize) -> Result<Vec<ScatterRow>> {
    let table = index.table(n)?;
    aggregate::top_k(index, n, k, None)?
        .into_iter()
        .map(|(gram, count)| {
            let stats = &table[&gram];
            Ok(ScatterRow {
                duration: duration(stats).1,
                gram,
                count,
            })
        })
        .collect()
}
