mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::oracle;
use ngram_events::aggregate::daily_top_lists;
use ngram_events::ingest::load_corpus_from_str;
use ngram_events::sentiment::{hashtag_averages, score_text};
use ngram_events::synthbench::{generate, Background, InjectedEvent};
use ngram_events::textproc::{normalize, WordDictionary};
use ngram_events::{
    build_index, build_index_with, classify, consecutive_top_m, density, detect_events,
    detect_events_with, duration, evaluate, segment_hashtag, top_k, Category, Corpus,
    DetectOptions, Dictionary, Granularity, IndexOptions, LoadOptions, PolarityLexicon, Rational,
    SyntheticSpec, ThresholdConfig, TweetRecord,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(id: &str, account: &str, day: u64, text: &str) -> TweetRecord {
    TweetRecord {
        tweet_id: id.into(),
        account_id: account.into(),
        timestamp: day * 86_400 + 60,
        text: text.into(),
        hashtags: Vec::new(),
    }
}

#[test]
fn index_matches_brute_force_on_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let index = build_index(&corpus, 1, 5).unwrap();
        for n in 1..=5 {
            let naive = oracle::naive_index(&corpus, n);
            let table = index.table(n).unwrap();
            assert_eq!(
                table.keys().collect::<Vec<_>>(),
                naive.keys().collect::<Vec<_>>(),
                "gram set differs for n={n}"
            );
            for (gram, want) in &naive {
                let got = &table[gram];
                assert_eq!(got.total_count, want.total);
                assert_eq!(got.bucket_counts, want.buckets);
                assert_eq!(got.distinct_tweets, want.tweets.len() as u64);
                assert_eq!(got.distinct_accounts, want.accounts.len() as u64);
                assert_eq!(got.gram.n, n);

                let (raw, eff) = duration(got);
                assert_eq!(Some((raw, eff)), oracle::naive_duration(&corpus, gram));
                assert_eq!(density::<Rational>(got), oracle::naive_density(want));
            }
        }
    }
}

#[test]
fn top_k_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let index = build_index(&corpus, 1, 5).unwrap();
        let (first, last) = corpus.bucket_range().unwrap();
        for n in 1..=5 {
            let k = rng.gen_range(1..=12);
            assert_eq!(
                top_k(&index, n, k, None).unwrap(),
                oracle::naive_top_k(&corpus, n, k, None)
            );
            let a = rng.gen_range(first..=last);
            let b = rng.gen_range(a..=last);
            assert_eq!(
                top_k(&index, n, k, Some((a, b))).unwrap(),
                oracle::naive_top_k(&corpus, n, k, Some((a, b)))
            );
        }
    }
}

#[test]
fn consecutive_rule_matches_window_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..60 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let index = build_index(&corpus, 2, 2).unwrap();
        let m = rng.gen_range(1..=4);
        let daily = daily_top_lists(&index, 2, m).unwrap();
        for gram in index.table(2).unwrap().keys() {
            let longest = oracle::longest_top_m_run(&daily, gram, m);
            for run in 1..=4 {
                assert_eq!(
                    consecutive_top_m(&daily, gram, m, run),
                    longest >= run,
                    "{gram} m={m} run={run}"
                );
            }
        }
    }
}

#[test]
fn sharded_and_parallel_builds_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let single = build_index(&corpus, 1, 5).unwrap();
        for threads in [2, 3, 8] {
            let opts = IndexOptions {
                threads,
                ..IndexOptions::new(1, 5)
            };
            assert_eq!(build_index_with(&corpus, &opts).unwrap(), single);
        }
    }
}

fn assert_containment(corpus: &Corpus) {
    let index = build_index(corpus, 2, 5).unwrap();
    for n in 2..=4 {
        let children = index.table(n).unwrap();
        for parent in index.table(n + 1).unwrap().values() {
            let words: Vec<&str> = parent.gram.tokens().collect();
            for child in [words[..n].join(" "), words[1..].join(" ")] {
                let c = &children[&child];
                assert!(parent.total_count <= c.total_count, "{} > {child}", parent.gram);
                for (b, count) in &parent.bucket_counts {
                    assert!(*count <= c.bucket_counts[b]);
                }
            }
        }
    }
}

#[test]
fn longer_grams_never_outcount_their_parts() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..50 {
        assert_containment(&oracle::random_corpus(&mut rng, 50));
    }
}

#[test]
fn always_co_occurring_trigram_ties_its_bigrams() {
    let texts = [
        "look pic.twitter.com/aaa",
        "great game pic.twitter.com/bbb tonight",
        "pic.twitter.com/ccc",
        "pic.twitter.com/ddd again pic.twitter.com/eee",
    ];
    let records = texts
        .iter()
        .enumerate()
        .map(|(i, t)| record(&format!("{i}"), "a", i as u64, t))
        .collect();
    let corpus = Corpus::new(records, Granularity::Day);
    let opts = IndexOptions {
        tokenizer: ngram_events::TokenizerOptions::keep_urls(true),
        ..IndexOptions::new(2, 3)
    };
    let index = build_index_with(&corpus, &opts).unwrap();
    let tri = index.get("pic twitter com").unwrap().total_count;
    assert_eq!(tri, 5);
    assert_eq!(index.get("pic twitter").unwrap().total_count, tri);
    assert_eq!(index.get("twitter com").unwrap().total_count, tri);

    // Without URL retention none of those grams exist.
    let plain = build_index(&corpus, 2, 3).unwrap();
    assert!(plain.get("pic twitter").is_none());
}

#[test]
fn density_times_effective_duration_is_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..50 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let index = build_index(&corpus, 1, 5).unwrap();
        for s in index.iter() {
            let (raw, _) = duration(s);
            let d: Rational = density(s);
            assert_eq!(d * Rational::from_integer(raw as i64 + 1), Rational::from_integer(s.total_count as i64));
            let f: f64 = density(s);
            assert!((f * (raw + 1) as f64 - s.total_count as f64).abs() < 1e-9);
        }
    }
}

#[test]
fn classify_respects_duration_bands() {
    let cfg = ThresholdConfig {
        burst_min_count: 4,
        burst_max_duration: 2,
        sustained_min_count: 3,
        sustained_min_duration: 6,
        ..ThresholdConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        let corpus = oracle::random_corpus(&mut rng, 50);
        let index = build_index(&corpus, 1, 3).unwrap();
        for s in index.iter() {
            let (_, eff) = duration(s);
            match classify(s, &cfg) {
                Some(Category::Burst) => {
                    assert!(s.total_count >= 4 && eff <= 2);
                }
                Some(Category::Sustained) => {
                    assert!(s.total_count >= 3 && eff >= 6);
                }
                None => {
                    assert!(!(s.total_count >= 4 && eff <= 2));
                    assert!(!(s.total_count >= 3 && eff >= 6));
                }
            }
        }
    }
}

fn small_spec(seed: u64) -> SyntheticSpec {
    let event = |gram: &[&str], start, duration, occurrences, spread| InjectedEvent {
        gram: gram.iter().map(|s| s.to_string()).collect(),
        start_bucket: start,
        duration_buckets: duration,
        occurrences,
        account_spread: spread,
        context_tokens: 2,
    };
    SyntheticSpec {
        seed,
        days: 40,
        granularity: Granularity::Day,
        origin_bucket: 16_740,
        background: Background {
            tweets_per_day: 30,
            vocabulary_size: 400,
            zipf_exponent: 0.8,
            accounts: 100,
            ..Background::default()
        },
        events: vec![
            event(&["quick", "flash", "news"], 10, 3, 90, 12),
            event(&["slow", "burn"], 2, 36, 70, 15),
        ],
    }
}

fn loose_config() -> ThresholdConfig {
    ThresholdConfig {
        min_distinct_tweets: 5,
        min_distinct_accounts: 3,
        top_m: 10,
        min_consecutive: 2,
        burst_min_count: 60,
        burst_max_duration: 5,
        sustained_min_count: 40,
        sustained_min_duration: 30,
    }
}

fn tighten(cfg: &ThresholdConfig, rng: &mut impl Rng) -> ThresholdConfig {
    let mut t = *cfg;
    t.min_distinct_tweets += rng.gen_range(0..20);
    t.min_distinct_accounts += rng.gen_range(0..10);
    t.top_m = rng.gen_range(1..=t.top_m);
    t.min_consecutive += rng.gen_range(0..3);
    t.burst_min_count += rng.gen_range(0..60);
    t.burst_max_duration = rng.gen_range(1..=t.burst_max_duration);
    t.sustained_min_count += rng.gen_range(0..60);
    t.sustained_min_duration += rng.gen_range(0..8);
    t
}

#[test]
fn tightening_thresholds_only_removes_candidates() {
    let corpus = generate(&small_spec(3)).unwrap();
    let index = build_index(&corpus, 2, 4).unwrap();
    let base = loose_config();
    let all: BTreeSet<String> = detect_events(&index, &base)
        .unwrap()
        .into_iter()
        .map(|c| c.gram)
        .collect();
    assert!(all.contains("quick flash news") && all.contains("slow burn"), "{all:?}");

    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let tight = tighten(&base, &mut rng);
        let kept: BTreeSet<String> = detect_events(&index, &tight)
            .unwrap()
            .into_iter()
            .map(|c| c.gram)
            .collect();
        assert!(kept.is_subset(&all), "{tight:?} added {:?}", kept.difference(&all));
    }
}

#[test]
fn two_day_burst_with_custom_thresholds() {
    // 500 occurrences of one 3-gram across 2 days by 20 accounts.
    let mut records: Vec<TweetRecord> = (0..500)
        .map(|i| record(&format!("e{i}"), &format!("a{}", i % 20), 100 + i / 250, "alpha beta gamma"))
        .collect();
    for d in 100..103 {
        for i in 0..5 {
            records.push(record(&format!("b{d}-{i}"), "bg", d, "some other words here"));
        }
    }
    let corpus = Corpus::new(records, Granularity::Day);
    let index = build_index(&corpus, 2, 5).unwrap();
    let cfg = ThresholdConfig {
        burst_min_count: 500,
        min_consecutive: 2,
        ..ThresholdConfig::default()
    };
    let found = detect_events(&index, &cfg).unwrap();
    assert_eq!(found.len(), 1, "{found:?}");
    let c = &found[0];
    assert_eq!(c.gram, "alpha beta gamma");
    assert_eq!(c.category, Category::Burst);
    assert_eq!((c.raw_duration, c.effective_duration), (1, 2));
    assert_eq!(c.density, 250.0);
    assert_eq!(c.window, [100, 101]);

    // Defaults demand 1000 occurrences.
    assert!(detect_events(&index, &ThresholdConfig::default()).unwrap().is_empty());
}

#[test]
fn exact_and_float_candidates_rank_identically() {
    let corpus = generate(&small_spec(5)).unwrap();
    let index = build_index(&corpus, 2, 4).unwrap();
    let cfg = loose_config();
    let f: Vec<_> = detect_events(&index, &cfg).unwrap();
    let q = detect_events_with::<Rational>(&index, &cfg, &DetectOptions::default()).unwrap();
    assert_eq!(
        f.iter().map(|c| &c.gram).collect::<Vec<_>>(),
        q.iter().map(|c| &c.gram).collect::<Vec<_>>()
    );
    for w in q.windows(2) {
        assert!(w[0].density >= w[1].density);
    }
    let burst = f.iter().position(|c| c.gram == "quick flash news").unwrap();
    let slow = f.iter().position(|c| c.gram == "slow burn").unwrap();
    assert!(burst < slow);

    let report = evaluate(&f, &small_spec(5), 1);
    assert_eq!(report.recall, 1.0);
}

#[test]
fn injected_grams_occur_exactly_as_specified() {
    let spec = small_spec(9);
    let corpus = generate(&spec).unwrap();
    for (i, ev) in spec.events.iter().enumerate() {
        let text = ev.text();
        let naive = oracle::naive_index(&corpus, ev.gram.len());
        let stats = &naive[&text];
        assert_eq!(stats.total, ev.occurrences);
        assert_eq!(stats.accounts.len() as u64, ev.account_spread);
        let window = spec.event_window(i);
        assert_eq!(*stats.buckets.keys().next().unwrap(), window[0]);
        assert_eq!(*stats.buckets.keys().last().unwrap(), window[1]);
    }
    assert_eq!(generate(&spec).unwrap(), corpus);
}

#[test]
fn hashtag_averages_match_rescan() {
    let lexicon = PolarityLexicon::demo();
    let texts = [
        ("great win #mizzou", vec!["mizzou"]),
        ("sad and angry #mizzou #news", vec!["mizzou", "news"]),
        ("nothing to see #news", vec!["news"]),
        ("love this campus #mizzou", vec!["mizzou"]),
        ("no tags at all", vec![]),
    ];
    let records: Vec<TweetRecord> = texts
        .iter()
        .enumerate()
        .map(|(i, (t, tags))| TweetRecord {
            hashtags: tags.iter().map(|s| s.to_string()).collect(),
            ..record(&format!("{i}"), "a", 1, t)
        })
        .collect();
    let corpus = Corpus::new(records.clone(), Granularity::Day);
    let rows: Vec<ngram_events::HashtagSentiment> = hashtag_averages(&corpus, &lexicon);

    let mut want: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in &records {
        let toks = normalize(&r.text);
        let pols: Vec<f64> = toks.iter().filter_map(|t| lexicon.get(t)).collect();
        let p = if pols.is_empty() { 0.0 } else { pols.iter().sum::<f64>() / pols.len() as f64 };
        for tag in &r.hashtags {
            want.entry(tag).or_default().push((1.0 + p) / 2.0);
        }
    }
    assert_eq!(rows.len(), want.len());
    for row in &rows {
        let pos = &want[row.hashtag.as_str()];
        assert_eq!(row.tweets, pos.len() as u64);
        assert!((row.avg_pos - pos.iter().sum::<f64>() / pos.len() as f64).abs() < 1e-12);
        assert!((row.avg_pos + row.avg_neg - 1.0).abs() < 1e-12);
    }
    assert_eq!(rows[0].hashtag, "mizzou");

    let neutral: PolarityLexicon = PolarityLexicon::new();
    for row in hashtag_averages(&corpus, &neutral) {
        assert_eq!((row.avg_pos, row.avg_neg), (0.5, 0.5));
    }
    let s = score_text(&normalize("xyz"), &lexicon);
    assert_eq!((s.pos, s.neg), (0.5, 0.5));
}

#[test]
fn load_is_idempotent_and_thread_independent() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let corpus = oracle::random_corpus(&mut rng, 50);
    let mut text = Vec::new();
    corpus.write_jsonl(&mut text).unwrap();
    let mut text = String::from_utf8(text).unwrap();
    text.push_str("not json\n");
    let dup = text.lines().next().unwrap().to_owned();
    text.push_str(&dup);
    text.push('\n');

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    std::fs::write(&path, &text).unwrap();
    let opts = LoadOptions::default();
    let a = ngram_events::load_corpus(&path, &opts).unwrap();
    let b = ngram_events::load_corpus(&path, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.0, corpus);
    let r = &a.1;
    assert_eq!((r.malformed, r.duplicates), (1, 1));
    assert_eq!(r.accepted + r.duplicates + r.malformed + r.out_of_window, r.total_lines);

    for threads in [2, 8] {
        let par = load_corpus_from_str(&text, &LoadOptions { threads, ..LoadOptions::default() });
        assert_eq!(par, a);
    }
}

fn fifty_words() -> Vec<&'static str> {
    vec![
        "a", "an", "and", "at", "be", "black", "blue", "by", "campus", "day", "do", "for", "go",
        "game", "hat", "he", "her", "here", "in", "is", "it", "lives", "mat", "matter", "me",
        "miz", "mizzou", "no", "now", "of", "on", "or", "pray", "rally", "s", "so", "star",
        "start", "the", "then", "there", "tiger", "tigers", "to", "up", "us", "we", "win",
        "with", "zou",
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn segmentation_equals_exhaustive_optimum(
        weights in proptest::collection::vec(1u32..50, 50),
        picks in proptest::collection::vec(0usize..50, 1..5),
        noise in proptest::option::of("[a-z]{1,3}"),
    ) {
        let words = fifty_words();
        let pairs: BTreeMap<String, f64> = words
            .iter()
            .zip(&weights)
            .map(|(w, &x)| (w.to_string(), x as f64))
            .collect();
        let dict: Dictionary =
            WordDictionary::from_pairs(pairs.iter().map(|(w, &x)| (w.as_str(), x))).unwrap();
        let mut tag: String = picks.iter().map(|&i| words[i]).collect();
        if let Some(extra) = noise {
            tag.push_str(&extra);
        }
        let tag: String = tag.chars().take(12).collect();
        prop_assert_eq!(segment_hashtag(&tag, &dict), oracle::brute_segment(&tag, &pairs));
    }

    #[test]
    fn containment_holds_on_arbitrary_text(
        texts in proptest::collection::vec("[abc ]{0,30}", 1..20),
    ) {
        let records = texts
            .iter()
            .enumerate()
            .map(|(i, t)| record(&format!("{i}"), "a", i as u64 % 3, t))
            .collect();
        assert_containment(&Corpus::new(records, Granularity::Day));
    }
}

#[test]
fn demo_dictionary_segments_known_tags() {
    let dict = Dictionary::demo();
    assert_eq!(segment_hashtag("prayformizzou", &dict), ["pray", "for", "mizzou"]);
    assert_eq!(segment_hashtag("blacklivesmatter", &dict), ["black", "lives", "matter"]);
}
