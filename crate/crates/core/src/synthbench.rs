//! Synthetic corpora with injected events, and scoring of detector output
//! against them.
//!
//! Background tweets draw tokens `w0, w1, ...` from a Zipf-weighted vocabulary
//! and authors `u0, u1, ...` from an account pool. Each injected event adds
//! exactly `occurrences` tweets that contain its gram contiguously, spread
//! evenly over its window and round-robin over `account_spread` accounts.
//!
//! All randomness comes from ChaCha8 seeded with [`SyntheticSpec::seed`]
//! ([`RNG_ALGORITHM`]); uniform reals are `rand`'s standard `f64` draw, so a
//! spec always yields the same corpus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detect::EventCandidate;
use crate::error::{Error, Result};
use crate::ingest::{Bucket, Corpus, Granularity, TweetRecord};
use crate::textproc;

pub const RNG_ALGORITHM: &str = "chacha8";

/// 2015-11-01 in days since the epoch.
pub const DEFAULT_ORIGIN_BUCKET: Bucket = 16_740;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    /// Corpus length in buckets.
    pub days: u64,
    #[serde(default)]
    pub granularity: Granularity,
    /// Absolute bucket of relative bucket 0.
    #[serde(default = "default_origin")]
    pub origin_bucket: Bucket,
    #[serde(default)]
    pub background: Background,
    #[serde(default)]
    pub events: Vec<InjectedEvent>,
}

fn default_origin() -> Bucket {
    DEFAULT_ORIGIN_BUCKET
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Background {
    pub tweets_per_day: u64,
    pub vocabulary_size: usize,
    /// Zipf exponent of token ranks; 0 is uniform.
    pub zipf_exponent: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub accounts: usize,
    /// Zipf exponent of account activity; 0 is uniform.
    pub account_exponent: f64,
}

impl Default for Background {
    fn default() -> Self {
        Background {
            tweets_per_day: 100,
            vocabulary_size: 5_000,
            zipf_exponent: 1.1,
            min_tokens: 6,
            max_tokens: 14,
            accounts: 2_000,
            account_exponent: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectedEvent {
    pub gram: Vec<String>,
    /// Relative to the corpus start.
    pub start_bucket: u64,
    pub duration_buckets: u64,
    pub occurrences: u64,
    pub account_spread: u64,
    /// Up to this many background tokens are drawn before and after the gram.
    #[serde(default)]
    pub context_tokens: usize,
}

impl InjectedEvent {
    pub fn text(&self) -> String {
        self.gram.join(" ")
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadSpec(m));
        if self.days == 0 {
            return bad("days must be at least 1".into());
        }
        let bg = &self.background;
        if bg.tweets_per_day > 0 {
            if bg.vocabulary_size == 0 || bg.accounts == 0 {
                return bad("background needs a non-empty vocabulary and account pool".into());
            }
            if bg.min_tokens == 0 || bg.min_tokens > bg.max_tokens {
                return bad("background token range must satisfy 1 <= min_tokens <= max_tokens".into());
            }
        }
        for exp in [bg.zipf_exponent, bg.account_exponent] {
            if !(exp.is_finite() && exp >= 0.0) {
                return bad(format!("zipf exponent {exp} must be finite and non-negative"));
            }
        }
        for (i, ev) in self.events.iter().enumerate() {
            if !(2..=5).contains(&ev.gram.len()) {
                return bad(format!("event {i}: gram length {} outside [2, 5]", ev.gram.len()));
            }
            for tok in &ev.gram {
                if textproc::normalize(tok).into_inner() != [tok.clone()] {
                    return bad(format!("event {i}: token `{tok}` is not a normalized token"));
                }
            }
            if ev.duration_buckets == 0 || ev.occurrences == 0 || ev.account_spread == 0 {
                return bad(format!(
                    "event {i}: duration, occurrences and account_spread must be at least 1"
                ));
            }
            if ev.start_bucket + ev.duration_buckets > self.days {
                return bad(format!("event {i}: window exceeds the corpus length"));
            }
            if ev.context_tokens > 0 && (bg.vocabulary_size == 0 || bg.accounts == 0) {
                return bad(format!("event {i}: context tokens need a background vocabulary"));
            }
        }
        Ok(())
    }

    /// Absolute inclusive bucket window of event `i`.
    pub fn event_window(&self, i: usize) -> [Bucket; 2] {
        let ev = &self.events[i];
        let start = self.origin_bucket + ev.start_bucket;
        [start, start + ev.duration_buckets - 1]
    }
}

/// Inverse-CDF sampler over ranks `0..n` with weight `(rank + 1)^-s`.
struct Zipf {
    cdf: Vec<f64>,
}

impl Zipf {
    fn new(n: usize, s: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (1..=n)
            .map(|k| {
                acc += (k as f64).powf(-s);
                acc
            })
            .collect();
        for c in &mut cdf {
            *c /= acc;
        }
        Zipf { cdf }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<Corpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let bg = &spec.background;
    let bucket_secs = spec.granularity.seconds();
    let needs_background = bg.tweets_per_day > 0 || spec.events.iter().any(|e| e.context_tokens > 0);
    let (words, accounts) = if needs_background {
        (
            Some(Zipf::new(bg.vocabulary_size, bg.zipf_exponent)),
            Some(Zipf::new(bg.accounts, bg.account_exponent)),
        )
    } else {
        (None, None)
    };
    let draw_words = |rng: &mut ChaCha8Rng, count: usize, out: &mut Vec<String>| {
        let zipf = words.as_ref().expect("background vocabulary");
        out.extend((0..count).map(|_| format!("w{}", zipf.sample(rng))));
    };

    let mut records = Vec::new();
    for day in 0..spec.days {
        let base = (spec.origin_bucket + day) * bucket_secs;
        for i in 0..bg.tweets_per_day {
            let len = rng.gen_range(bg.min_tokens..=bg.max_tokens);
            let mut tokens = Vec::with_capacity(len);
            draw_words(&mut rng, len, &mut tokens);
            let account = accounts.as_ref().expect("account pool").sample(&mut rng);
            let offset = rng.gen_range(0..bucket_secs);
            records.push(TweetRecord {
                tweet_id: format!("b{day:05}-{i:06}"),
                account_id: format!("u{account}"),
                timestamp: base + offset,
                text: tokens.join(" "),
                hashtags: Vec::new(),
            });
        }
    }

    for (e, ev) in spec.events.iter().enumerate() {
        let start = spec.origin_bucket + ev.start_bucket;
        for i in 0..ev.occurrences {
            let bucket = start + i * ev.duration_buckets / ev.occurrences;
            let mut tokens = Vec::new();
            if ev.context_tokens > 0 {
                let before = rng.gen_range(0..=ev.context_tokens);
                draw_words(&mut rng, before, &mut tokens);
            }
            tokens.extend(ev.gram.iter().cloned());
            if ev.context_tokens > 0 {
                let after = rng.gen_range(0..=ev.context_tokens);
                draw_words(&mut rng, after, &mut tokens);
            }
            let offset = rng.gen_range(0..bucket_secs);
            records.push(TweetRecord {
                tweet_id: format!("e{e:03}-{i:07}"),
                account_id: format!("e{e}a{}", i % ev.account_spread),
                timestamp: bucket * bucket_secs + offset,
                text: tokens.join(" "),
                hashtags: Vec::new(),
            });
        }
    }

    Ok(Corpus::new(records, spec.granularity))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventMatch {
    pub event: usize,
    pub gram: String,
    pub injected_window: [Bucket; 2],
    /// Zero-based rank of the matching candidate.
    pub candidate_rank: Option<usize>,
    pub candidate_window: Option<[Bucket; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: Vec<EventMatch>,
}

impl EvalReport {
    /// Precision and recall are 1 when their denominators are 0; F1 is 0 when
    /// both are 0.
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            precision,
            recall,
            f1,
            matches: Vec::new(),
        }
    }
}

fn overlaps(a: [Bucket; 2], b: [Bucket; 2], slack: u64) -> bool {
    a[0] <= b[1].saturating_add(slack) && b[0] <= a[1].saturating_add(slack)
}

/// Greedy one-to-one matching in candidate order: a candidate matches the first
/// unmatched injection with the same gram text whose window, widened by
/// `window_slack` on both sides, overlaps the candidate window.
pub fn evaluate<T>(
    candidates: &[EventCandidate<T>],
    spec: &SyntheticSpec,
    window_slack: u64,
) -> EvalReport {
    let mut matches: Vec<EventMatch> = spec
        .events
        .iter()
        .enumerate()
        .map(|(i, ev)| EventMatch {
            event: i,
            gram: ev.text(),
            injected_window: spec.event_window(i),
            candidate_rank: None,
            candidate_window: None,
        })
        .collect();

    let mut tp = 0;
    for (rank, cand) in candidates.iter().enumerate() {
        let hit = matches.iter_mut().find(|m| {
            m.candidate_rank.is_none()
                && m.gram == cand.gram
                && overlaps(cand.window, m.injected_window, window_slack)
        });
        if let Some(m) = hit {
            m.candidate_rank = Some(rank);
            m.candidate_window = Some(cand.window);
            tp += 1;
        }
    }
    let fp = candidates.len() as u64 - tp;
    let fn_ = spec.events.len() as u64 - tp;
    EvalReport {
        matches,
        ..EvalReport::from_counts(tp, fp, fn_)
    }
}
