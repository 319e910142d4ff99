//! Per-gram time series and corpus-wide n-gram statistics.
//!
//! An [`AggregateIndex`] holds one table per n-gram order. Building it may be
//! split across worker shards; partial tables merge by summing counts and
//! unioning account sets, so the result does not depend on the shard layout.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Bucket, Corpus, Granularity, TweetRecord};
use crate::textproc::{self, NGram, TokenizerOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NGramStats {
    pub gram: NGram,
    /// Every occurrence, overlapping and repeated ones included.
    pub total_count: u64,
    pub bucket_counts: BTreeMap<Bucket, u64>,
    pub distinct_tweets: u64,
    pub distinct_accounts: u64,
    pub first_bucket: Bucket,
    pub last_bucket: Bucket,
}

impl NGramStats {
    /// Occurrences inside the inclusive bucket range.
    pub fn count_in(&self, (from, to): (Bucket, Bucket)) -> u64 {
        if from > to {
            return 0;
        }
        self.bucket_counts.range(from..=to).map(|(_, c)| c).sum()
    }

    /// Dense `(bucket, count)` series over `[first_bucket, last_bucket]`.
    pub fn timeline(&self) -> Vec<(Bucket, u64)> {
        (self.first_bucket..=self.last_bucket)
            .map(|b| (b, self.bucket_counts.get(&b).copied().unwrap_or(0)))
            .collect()
    }

    /// Bucket with the highest count; the earliest wins ties.
    pub fn peak_bucket(&self) -> Bucket {
        let mut peak = (self.first_bucket, 0);
        for (&b, &c) in &self.bucket_counts {
            if c > peak.1 {
                peak = (b, c);
            }
        }
        peak.0
    }
}

#[derive(Debug, Clone)]
pub struct IndexOptions {
    pub nmin: usize,
    pub nmax: usize,
    pub tokenizer: TokenizerOptions,
    /// Only records carrying this (lowercase, `#`-less) hashtag are indexed.
    pub filter_hashtag: Option<String>,
    /// Worker shards; 0 or 1 builds on the calling thread.
    pub threads: usize,
}

impl IndexOptions {
    pub fn new(nmin: usize, nmax: usize) -> Self {
        IndexOptions {
            nmin,
            nmax,
            tokenizer: TokenizerOptions::default(),
            filter_hashtag: None,
            threads: 1,
        }
    }
}

impl Default for IndexOptions {
    fn default() -> Self {
        IndexOptions::new(2, 5)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateIndex {
    nmin: usize,
    nmax: usize,
    granularity: Granularity,
    bucket_range: Option<(Bucket, Bucket)>,
    tables: Vec<BTreeMap<String, NGramStats>>,
}

impl AggregateIndex {
    pub fn nmin(&self) -> usize {
        self.nmin
    }

    pub fn nmax(&self) -> usize {
        self.nmax
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    /// First and last bucket of the indexed records.
    pub fn bucket_range(&self) -> Option<(Bucket, Bucket)> {
        self.bucket_range
    }

    pub fn check_n(&self, n: usize) -> Result<()> {
        if (self.nmin..=self.nmax).contains(&n) {
            Ok(())
        } else {
            Err(Error::BadN {
                n,
                min: self.nmin,
                max: self.nmax,
            })
        }
    }

    /// All grams of order `n`, keyed by text.
    pub fn table(&self, n: usize) -> Result<&BTreeMap<String, NGramStats>> {
        self.check_n(n)?;
        Ok(&self.tables[n - self.nmin])
    }

    pub fn get(&self, gram: &str) -> Option<&NGramStats> {
        let n = gram.split(' ').count();
        self.table(n).ok()?.get(gram)
    }

    /// Every gram of every order, shorter orders first.
    pub fn iter(&self) -> impl Iterator<Item = &NGramStats> {
        self.tables.iter().flat_map(|t| t.values())
    }

    pub fn len(&self) -> usize {
        self.tables.iter().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Default)]
struct Acc {
    total: u64,
    buckets: BTreeMap<Bucket, u64>,
    tweets: u64,
    last_tweet: Option<usize>,
    accounts: Vec<u32>,
}

impl Acc {
    fn add(&mut self, tweet: usize, account: u32, bucket: Bucket) {
        self.total += 1;
        *self.buckets.entry(bucket).or_insert(0) += 1;
        if self.last_tweet != Some(tweet) {
            self.last_tweet = Some(tweet);
            self.tweets += 1;
            if self.accounts.last() != Some(&account) {
                self.accounts.push(account);
            }
        }
    }

    // Shards hold disjoint tweets, so tweet counts add.
    fn merge(&mut self, other: Acc) {
        self.total += other.total;
        for (b, c) in other.buckets {
            *self.buckets.entry(b).or_insert(0) += c;
        }
        self.tweets += other.tweets;
        self.accounts.extend(other.accounts);
    }

    fn finish(mut self, text: String, n: usize) -> NGramStats {
        self.accounts.sort_unstable();
        self.accounts.dedup();
        let first_bucket = *self.buckets.keys().next().expect("non-empty accumulator");
        let last_bucket = *self.buckets.keys().next_back().expect("non-empty accumulator");
        NGramStats {
            gram: NGram { text, n },
            total_count: self.total,
            bucket_counts: self.buckets,
            distinct_tweets: self.tweets,
            distinct_accounts: self.accounts.len() as u64,
            first_bucket,
            last_bucket,
        }
    }
}

type Partial = Vec<HashMap<String, Acc>>;

fn index_shard(
    records: &[(usize, &TweetRecord, u32)],
    opts: &IndexOptions,
    granularity: Granularity,
) -> Partial {
    let mut tables: Partial = (opts.nmin..=opts.nmax).map(|_| HashMap::new()).collect();
    for &(idx, rec, account) in records {
        let tokens = textproc::normalize_with(&rec.text, &opts.tokenizer);
        let bucket = rec.bucket(granularity);
        for (slot, n) in (opts.nmin..=opts.nmax).enumerate() {
            for window in tokens.windows(n) {
                let key = window.join(" ");
                tables[slot].entry(key).or_default().add(idx, account, bucket);
            }
        }
    }
    tables
}

fn merge_partials(mut a: Partial, b: Partial) -> Partial {
    for (table, other) in a.iter_mut().zip(b) {
        for (key, acc) in other {
            match table.get_mut(&key) {
                Some(existing) => existing.merge(acc),
                None => {
                    table.insert(key, acc);
                }
            }
        }
    }
    a
}

pub fn build_index(corpus: &Corpus, nmin: usize, nmax: usize) -> Result<AggregateIndex> {
    build_index_with(corpus, &IndexOptions::new(nmin, nmax))
}

pub fn build_index_with(corpus: &Corpus, opts: &IndexOptions) -> Result<AggregateIndex> {
    textproc::check_n(opts.nmin)?;
    textproc::check_n(opts.nmax)?;
    if opts.nmin > opts.nmax {
        return Err(Error::BadN {
            n: opts.nmin,
            min: textproc::MIN_N,
            max: opts.nmax,
        });
    }
    let granularity = corpus.granularity();

    let mut account_ids: HashMap<&str, u32> = HashMap::new();
    let mut selected = Vec::new();
    for (idx, rec) in corpus.records().iter().enumerate() {
        if let Some(tag) = &opts.filter_hashtag {
            if !rec.has_hashtag(tag) {
                continue;
            }
        }
        let next = account_ids.len() as u32;
        let account = *account_ids.entry(rec.account_id.as_str()).or_insert(next);
        selected.push((idx, rec, account));
    }
    let bucket_range = match (selected.first(), selected.last()) {
        (Some(first), Some(last)) => Some((first.1.bucket(granularity), last.1.bucket(granularity))),
        _ => None,
    };

    let shards = opts.threads.max(1);
    let partial = if shards == 1 || selected.len() < 2 {
        index_shard(&selected, opts, granularity)
    } else {
        let chunk = selected.len().div_ceil(shards);
        let run = || {
            selected
                .par_chunks(chunk)
                .map(|c| index_shard(c, opts, granularity))
                .reduce_with(merge_partials)
                .unwrap_or_default()
        };
        match rayon::ThreadPoolBuilder::new().num_threads(shards).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        }
    };

    let mut tables: Vec<BTreeMap<String, NGramStats>> =
        (opts.nmin..=opts.nmax).map(|_| BTreeMap::new()).collect();
    for (slot, table) in partial.into_iter().enumerate() {
        let n = opts.nmin + slot;
        let mut entries: Vec<(String, Acc)> = table.into_iter().collect();
        // Pre-sorted input lets the map build in one linear pass.
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        tables[slot] = entries
            .into_iter()
            .map(|(key, acc)| {
                let stats = acc.finish(key.clone(), n);
                (key, stats)
            })
            .collect();
    }

    Ok(AggregateIndex {
        nmin: opts.nmin,
        nmax: opts.nmax,
        granularity,
        bucket_range,
        tables,
    })
}

/// Sorts by count descending then text ascending and keeps the first `k`.
pub(crate) fn rank(mut items: Vec<(&str, u64)>, k: usize) -> Vec<(&str, u64)> {
    let order = |a: &(&str, u64), b: &(&str, u64)| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0));
    if items.len() > k {
        items.select_nth_unstable_by(k - 1, order);
        items.truncate(k);
    }
    items.sort_unstable_by(order);
    items
}

/// The `k` most frequent grams of order `n`, optionally counting only inside
/// an inclusive bucket range.
pub fn top_k(
    index: &AggregateIndex,
    n: usize,
    k: usize,
    scope: Option<(Bucket, Bucket)>,
) -> Result<Vec<(String, u64)>> {
    if k == 0 {
        return Err(Error::BadK);
    }
    let table = index.table(n)?;
    let items = table
        .iter()
        .map(|(g, s)| {
            let count = match scope {
                Some(range) => s.count_in(range),
                None => s.total_count,
            };
            (g.as_str(), count)
        })
        .filter(|&(_, c)| c > 0)
        .collect();
    Ok(rank(items, k)
        .into_iter()
        .map(|(g, c)| (g.to_owned(), c))
        .collect())
}

/// Per-bucket top-`m` gram lists of order `n` over the index's whole bucket
/// range; buckets with no grams map to empty lists.
pub fn daily_top_lists(
    index: &AggregateIndex,
    n: usize,
    m: usize,
) -> Result<BTreeMap<Bucket, Vec<String>>> {
    if m == 0 {
        return Err(Error::BadK);
    }
    let table = index.table(n)?;
    let Some((first, last)) = index.bucket_range() else {
        return Ok(BTreeMap::new());
    };
    let mut per_bucket: BTreeMap<Bucket, Vec<(&str, u64)>> =
        (first..=last).map(|b| (b, Vec::new())).collect();
    for (gram, stats) in table {
        for (&b, &c) in &stats.bucket_counts {
            per_bucket.entry(b).or_default().push((gram.as_str(), c));
        }
    }
    Ok(per_bucket
        .into_iter()
        .map(|(b, items)| (b, rank(items, m).into_iter().map(|(g, _)| g.to_owned()).collect()))
        .collect())
}

/// Zero-filled `(bucket, count)` series for `gram`.
pub fn timeline(index: &AggregateIndex, gram: &str) -> Result<Vec<(Bucket, u64)>> {
    index
        .get(gram)
        .map(NGramStats::timeline)
        .ok_or_else(|| Error::UnknownGram(gram.to_owned()))
}
