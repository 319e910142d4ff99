//! Reading tweet records from JSONL or CSV files into a time-bucketed corpus.
//!
//! Ingestion never aborts on a bad line. Malformed, duplicate and out-of-window
//! lines are skipped and tallied in an [`IngestReport`], so that
//! `accepted + duplicates + malformed + out_of_window == total_lines` always
//! holds. Blank lines (and a leading CSV header) are not counted as records.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::textproc;

/// Discrete time bucket index (days or hours since the epoch).
pub type Bucket = u64;

const CSV_HEADER_PREFIX: &str = "tweet_id,";
const MAX_REPORTED_ERRORS: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub account_id: String,
    /// UTC epoch seconds.
    pub timestamp: u64,
    pub text: String,
    /// Lowercase, without the leading `#`.
    pub hashtags: Vec<String>,
}

impl TweetRecord {
    pub fn bucket(&self, granularity: Granularity) -> Bucket {
        bucket_of(self.timestamp, granularity)
    }

    pub fn has_hashtag(&self, tag: &str) -> bool {
        self.hashtags.iter().any(|h| h == tag)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Hour,
    #[default]
    Day,
}

impl Granularity {
    pub fn seconds(self) -> u64 {
        match self {
            Granularity::Hour => 3_600,
            Granularity::Day => 86_400,
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Hour => "hour",
            Granularity::Day => "day",
        })
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hour" => Ok(Granularity::Hour),
            "day" => Ok(Granularity::Day),
            other => Err(format!("unknown granularity `{other}` (expected hour or day)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordFormat {
    #[default]
    Jsonl,
    Csv,
}

impl RecordFormat {
    /// Guess from a file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => RecordFormat::Csv,
            _ => RecordFormat::Jsonl,
        }
    }
}

impl fmt::Display for RecordFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecordFormat::Jsonl => "jsonl",
            RecordFormat::Csv => "csv",
        })
    }
}

impl FromStr for RecordFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(RecordFormat::Jsonl),
            "csv" => Ok(RecordFormat::Csv),
            other => Err(format!("unknown record format `{other}` (expected jsonl or csv)")),
        }
    }
}

/// Inclusive range of epoch seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: u64,
    pub end: u64,
}

impl TimeWindow {
    pub fn contains(&self, timestamp: u64) -> bool {
        self.start <= timestamp && timestamp <= self.end
    }
}

impl FromStr for TimeWindow {
    type Err = String;

    /// `start,end` in epoch seconds.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(',')
            .ok_or_else(|| format!("window `{s}` must be `start,end`"))?;
        let start = a.trim().parse().map_err(|e| format!("window start: {e}"))?;
        let end = b.trim().parse().map_err(|e| format!("window end: {e}"))?;
        if start > end {
            return Err(format!("window start {start} is after end {end}"));
        }
        Ok(TimeWindow { start, end })
    }
}

pub fn bucket_of(timestamp: u64, granularity: Granularity) -> Bucket {
    timestamp / granularity.seconds()
}

/// Records sorted by `(timestamp, tweet_id)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    records: Vec<TweetRecord>,
    granularity: Granularity,
    origin_bucket: Bucket,
}

impl Corpus {
    /// Sorts the records; ids are assumed unique.
    pub fn new(mut records: Vec<TweetRecord>, granularity: Granularity) -> Self {
        records.sort_by(|a, b| {
            a.timestamp
                .cmp(&b.timestamp)
                .then_with(|| a.tweet_id.cmp(&b.tweet_id))
        });
        let origin_bucket = records
            .first()
            .map(|r| r.bucket(granularity))
            .unwrap_or(0);
        Corpus {
            records,
            granularity,
            origin_bucket,
        }
    }

    pub fn records(&self) -> &[TweetRecord] {
        &self.records
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn origin_bucket(&self) -> Bucket {
        self.origin_bucket
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// First and last occupied bucket.
    pub fn bucket_range(&self) -> Option<(Bucket, Bucket)> {
        let first = self.records.first()?.bucket(self.granularity);
        let last = self.records.last()?.bucket(self.granularity);
        Some((first, last))
    }

    pub fn with_granularity(self, granularity: Granularity) -> Self {
        Corpus::new(self.records, granularity)
    }

    /// One JSON object per line, in corpus order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub total_lines: usize,
    pub accepted: usize,
    pub duplicates: usize,
    pub malformed: usize,
    pub out_of_window: usize,
    /// The first few rejected lines, 1-based.
    pub errors: Vec<LineError>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

impl IngestReport {
    pub fn is_empty_corpus(&self) -> bool {
        self.accepted == 0
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    pub format: RecordFormat,
    pub window: Option<TimeWindow>,
    pub granularity: Granularity,
    /// Parser worker count; 0 or 1 parses on the calling thread.
    pub threads: usize,
}

pub fn parse_record(line: &str, format: RecordFormat) -> Result<TweetRecord> {
    match format {
        RecordFormat::Jsonl => parse_json(line),
        RecordFormat::Csv => parse_csv(line),
    }
}

fn parse_json(line: &str) -> Result<TweetRecord> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| Error::MalformedRecord(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::MalformedRecord("expected a JSON object".into()))?;

    let tweet_id = match obj.get("tweet_id") {
        None | Some(Value::Null) => return Err(Error::MissingField("tweet_id")),
        Some(v) => scalar_string(v, "tweet_id")?,
    };
    let account_id = match obj.get("account_id") {
        None | Some(Value::Null) => String::new(),
        Some(v) => scalar_string(v, "account_id")?,
    };
    let timestamp = match obj.get("timestamp") {
        None | Some(Value::Null) => return Err(Error::MissingField("timestamp")),
        Some(Value::Number(n)) => match n.as_u64() {
            Some(t) => t,
            None => return Err(Error::BadTimestamp(n.to_string())),
        },
        Some(Value::String(s)) => parse_timestamp(s)?,
        Some(other) => return Err(Error::BadTimestamp(other.to_string())),
    };
    let text = match obj.get("text") {
        None | Some(Value::Null) => return Err(Error::MissingField("text")),
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(Error::MalformedRecord("`text` must be a string".into())),
    };
    let hashtags = match obj.get("hashtags") {
        None | Some(Value::Null) => None,
        Some(Value::Array(items)) => {
            let tags = items
                .iter()
                .map(|v| {
                    v.as_str().map(str::to_owned).ok_or_else(|| {
                        Error::MalformedRecord("`hashtags` entries must be strings".into())
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Some(tags)
        }
        Some(_) => return Err(Error::MalformedRecord("`hashtags` must be an array".into())),
    };

    build_record(tweet_id, account_id, timestamp, text, hashtags)
}

fn scalar_string(v: &Value, field: &'static str) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::MalformedRecord(format!(
            "`{field}` must be a string or integer"
        ))),
    }
}

fn parse_timestamp(s: &str) -> Result<u64> {
    let s = s.trim();
    match s.parse::<i64>() {
        Ok(t) if t >= 0 => Ok(t as u64),
        _ => Err(Error::BadTimestamp(s.to_owned())),
    }
}

/// Columns: `tweet_id,account_id,timestamp,text[,hashtags]`, where the optional
/// hashtag column is separated by spaces or semicolons.
fn parse_csv(line: &str) -> Result<TweetRecord> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(line.as_bytes());
    let row = match reader.records().next() {
        Some(Ok(row)) => row,
        Some(Err(e)) => return Err(Error::MalformedRecord(e.to_string())),
        None => return Err(Error::MalformedRecord("empty CSV row".into())),
    };
    if row.len() > 5 {
        return Err(Error::MalformedRecord(format!(
            "expected at most 5 columns, found {}",
            row.len()
        )));
    }
    let field = |i: usize| row.get(i).filter(|f| !f.is_empty());

    let tweet_id = field(0).ok_or(Error::MissingField("tweet_id"))?.to_owned();
    let account_id = row.get(1).unwrap_or("").to_owned();
    let timestamp = parse_timestamp(field(2).ok_or(Error::MissingField("timestamp"))?)?;
    let text = row.get(3).ok_or(Error::MissingField("text"))?.to_owned();
    let hashtags = field(4).map(|tags| {
        tags.split(|c: char| c == ';' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(str::to_owned)
            .collect()
    });

    build_record(tweet_id, account_id, timestamp, text, hashtags)
}

fn build_record(
    tweet_id: String,
    account_id: String,
    timestamp: u64,
    text: String,
    hashtags: Option<Vec<String>>,
) -> Result<TweetRecord> {
    if tweet_id.is_empty() {
        return Err(Error::MissingField("tweet_id"));
    }
    let hashtags = match hashtags {
        Some(raw) => {
            let mut tags = Vec::with_capacity(raw.len());
            for tag in raw {
                let tag = normalize_hashtag(&tag)?;
                if !tags.contains(&tag) {
                    tags.push(tag);
                }
            }
            tags
        }
        None => textproc::hashtags_in(&text),
    };
    Ok(TweetRecord {
        tweet_id,
        account_id,
        timestamp,
        text,
        hashtags,
    })
}

fn normalize_hashtag(raw: &str) -> Result<String> {
    let tag = raw.trim().trim_start_matches('#');
    if tag.is_empty() || tag.contains(|c: char| c.is_whitespace() || c == '#') {
        return Err(Error::MalformedRecord(format!("invalid hashtag `{raw}`")));
    }
    Ok(textproc::fold_case(tag))
}

/// Parses `input` as if it were the contents of a file.
pub fn load_corpus_from_str(input: &str, opts: &LoadOptions) -> (Corpus, IngestReport) {
    let mut lines: Vec<(usize, &str)> = input
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();
    if opts.format == RecordFormat::Csv
        && lines
            .first()
            .is_some_and(|(_, l)| l.trim_start().starts_with(CSV_HEADER_PREFIX))
    {
        lines.remove(0);
    }

    let parse = |&(n, l): &(usize, &str)| (n, parse_record(l, opts.format));
    let parsed: Vec<(usize, Result<TweetRecord>)> = if opts.threads > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(opts.threads).build() {
            Ok(pool) => pool.install(|| lines.par_iter().map(parse).collect()),
            Err(_) => lines.iter().map(parse).collect(),
        }
    } else {
        lines.iter().map(parse).collect()
    };

    let mut report = IngestReport {
        total_lines: parsed.len(),
        ..IngestReport::default()
    };
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (line, result) in parsed {
        match result {
            Err(e) => {
                report.malformed += 1;
                if report.errors.len() < MAX_REPORTED_ERRORS {
                    report.errors.push(LineError {
                        line,
                        message: e.to_string(),
                    });
                }
            }
            Ok(rec) => {
                if !seen.insert(rec.tweet_id.clone()) {
                    report.duplicates += 1;
                } else if opts.window.is_some_and(|w| !w.contains(rec.timestamp)) {
                    report.out_of_window += 1;
                } else {
                    records.push(rec);
                }
            }
        }
    }
    report.accepted = records.len();
    (Corpus::new(records, opts.granularity), report)
}

pub fn load_corpus(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<(Corpus, IngestReport)> {
    let path = path.as_ref();
    let input = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(load_corpus_from_str(&input, opts))
}
