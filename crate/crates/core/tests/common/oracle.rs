//! Brute-force reference implementations. They share nothing with the library
//! beyond the tokenizer, the input types and the documented rules, and favour
//! obviousness over speed.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ngram_events::textproc::{normalize_with, TokenizerOptions};
use ngram_events::{Corpus, Granularity, TweetRecord};
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct NaiveStats {
    pub total: u64,
    pub buckets: BTreeMap<u64, u64>,
    pub tweets: BTreeSet<String>,
    pub accounts: BTreeSet<String>,
}

pub fn tokens_of(rec: &TweetRecord) -> Vec<String> {
    normalize_with(&rec.text, &TokenizerOptions::default()).into_inner()
}

/// Every window of `n` tokens, joined by spaces.
pub fn grams_of(tokens: &[String], n: usize) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    while start + n <= tokens.len() {
        let mut text = String::new();
        for (i, t) in tokens[start..start + n].iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(t);
        }
        out.push(text);
        start += 1;
    }
    out
}

fn day_of(rec: &TweetRecord, g: Granularity) -> u64 {
    let width = match g {
        Granularity::Day => 86_400,
        Granularity::Hour => 3_600,
    };
    rec.timestamp / width
}

/// Concatenates every record's n-gram list and tallies it.
pub fn naive_index(corpus: &Corpus, n: usize) -> BTreeMap<String, NaiveStats> {
    let mut all: Vec<(String, &TweetRecord)> = Vec::new();
    for rec in corpus.records() {
        for g in grams_of(&tokens_of(rec), n) {
            all.push((g, rec));
        }
    }
    let mut out: BTreeMap<String, NaiveStats> = BTreeMap::new();
    for (g, rec) in all {
        let s = out.entry(g).or_default();
        s.total += 1;
        *s.buckets.entry(day_of(rec, corpus.granularity())).or_default() += 1;
        s.tweets.insert(rec.tweet_id.clone());
        s.accounts.insert(rec.account_id.clone());
    }
    out
}

/// Full sort by (count desc, gram asc), then truncate.
pub fn naive_top_k(
    corpus: &Corpus,
    n: usize,
    k: usize,
    scope: Option<(u64, u64)>,
) -> Vec<(String, u64)> {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for rec in corpus.records() {
        let day = day_of(rec, corpus.granularity());
        if let Some((a, b)) = scope {
            if day < a || day > b {
                continue;
            }
        }
        for g in grams_of(&tokens_of(rec), n) {
            *counts.entry(g).or_default() += 1;
        }
    }
    let mut v: Vec<(String, u64)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(k);
    v
}

/// `(last - first, last - first + 1)` found by rescanning the raw records.
pub fn naive_duration(corpus: &Corpus, gram: &str) -> Option<(u64, u64)> {
    let want: Vec<&str> = gram.split(' ').collect();
    let mut days = Vec::new();
    for rec in corpus.records() {
        let toks = tokens_of(rec);
        let hit = toks
            .windows(want.len())
            .any(|w| w.iter().zip(&want).all(|(a, b)| a == b));
        if hit {
            days.push(day_of(rec, corpus.granularity()));
        }
    }
    let first = *days.iter().min()?;
    let last = *days.iter().max()?;
    Some((last - first, last - first + 1))
}

pub fn naive_density(stats: &NaiveStats) -> Ratio<i64> {
    let first = *stats.buckets.keys().next().unwrap();
    let last = *stats.buckets.keys().last().unwrap();
    Ratio::new(stats.total as i64, (last - first + 1) as i64)
}

/// Longest run of consecutive buckets on which `gram` is within the first `m`
/// entries, by checking every window of buckets.
pub fn longest_top_m_run(daily: &BTreeMap<u64, Vec<String>>, gram: &str, m: usize) -> usize {
    let buckets: Vec<u64> = daily.keys().copied().collect();
    let in_top = |b: &u64| daily[b].iter().take(m).any(|g| g == gram);
    let mut best = 0;
    for i in 0..buckets.len() {
        for j in i..buckets.len() {
            let contiguous = buckets[j] - buckets[i] == (j - i) as u64;
            if contiguous && buckets[i..=j].iter().all(in_top) {
                best = best.max(j - i + 1);
            }
        }
    }
    best
}

/// Exhaustive word-break: try every subset of split points.
pub fn brute_segment(tag: &str, words: &BTreeMap<String, f64>) -> Vec<String> {
    let chars: Vec<char> = tag.chars().collect();
    let cuts = chars.len().saturating_sub(1);
    let mut best: Option<(f64, Vec<String>)> = None;
    for mask in 0u32..(1u32 << cuts) {
        let mut pieces = Vec::new();
        let mut cur = String::new();
        for (i, c) in chars.iter().enumerate() {
            cur.push(*c);
            if i < cuts && mask & (1 << i) != 0 {
                pieces.push(std::mem::take(&mut cur));
            }
        }
        pieces.push(cur);
        if !pieces.iter().all(|p| words.contains_key(p)) {
            continue;
        }
        let score: f64 = pieces.iter().map(|p| words[p].ln()).sum();
        let better = match &best {
            None => true,
            Some((s, w)) => {
                let scale = 1f64.max(s.abs()).max(score.abs());
                if (score - s).abs() > 1e-9 * scale {
                    score > *s
                } else if pieces.len() != w.len() {
                    pieces.len() < w.len()
                } else {
                    pieces < *w
                }
            }
        };
        if better {
            best = Some((score, pieces));
        }
    }
    best.map(|(_, w)| w).unwrap_or_else(|| vec![tag.to_owned()])
}

/// Up to `max_tweets` short tweets over a tiny vocabulary, so grams collide.
pub fn random_corpus(rng: &mut impl Rng, max_tweets: usize) -> Corpus {
    const VOCAB: [&str; 8] = ["a", "b", "c", "d", "pic", "twitter", "com", "mizzou"];
    let tweets = rng.gen_range(1..=max_tweets);
    let accounts = rng.gen_range(1..=6);
    let records = (0..tweets)
        .map(|i| {
            let len = rng.gen_range(0..=9);
            let words: Vec<&str> = (0..len).map(|_| *VOCAB.choose(rng).unwrap()).collect();
            let mut text = words.join(" ");
            if rng.gen_bool(0.2) {
                text = text.replace(" b", " B'");
            }
            TweetRecord {
                tweet_id: format!("t{i:03}"),
                account_id: format!("u{}", rng.gen_range(0..accounts)),
                timestamp: rng.gen_range(0..10u64) * 86_400 + rng.gen_range(0..86_400),
                text,
                hashtags: Vec::new(),
            }
        })
        .collect();
    Corpus::new(records, Granularity::Day)
}
