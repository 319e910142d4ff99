//! Lexicon-based polarity scoring and per-hashtag sentiment averages.

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Corpus;
use crate::scalar::Real;
use crate::textproc::{self, fold_case};

/// Token polarities in `[-1, 1]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PolarityLexicon<F = f64> {
    polarity: HashMap<String, F>,
}

impl<F: Real> PolarityLexicon<F> {
    pub fn new() -> Self {
        PolarityLexicon {
            polarity: HashMap::new(),
        }
    }

    pub fn insert(&mut self, token: &str, polarity: F) -> Result<()> {
        if !(polarity >= -F::one() && polarity <= F::one()) {
            return Err(Error::MalformedRecord(format!(
                "polarity for `{token}` outside [-1, 1]"
            )));
        }
        let token = fold_case(token.trim());
        if token.is_empty() || token.contains(char::is_whitespace) {
            return Err(Error::MalformedRecord(format!("invalid lexicon token `{token}`")));
        }
        self.polarity.insert(token, polarity);
        Ok(())
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, F)>) -> Result<Self> {
        let mut lex = Self::new();
        for (t, p) in pairs {
            lex.insert(t, p)?;
        }
        Ok(lex)
    }

    pub fn get(&self, token: &str) -> Option<F> {
        self.polarity.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.polarity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarity.is_empty()
    }

    /// Every polarity multiplied by `factor`, which must lie in `(0, 1]`.
    pub fn scaled(&self, factor: F) -> Result<Self> {
        if !(factor > F::zero() && factor <= F::one()) {
            return Err(Error::MalformedRecord("scale factor outside (0, 1]".into()));
        }
        Ok(PolarityLexicon {
            polarity: self
                .polarity
                .iter()
                .map(|(t, &p)| (t.clone(), p * factor))
                .collect(),
        })
    }

    /// `token<TAB>polarity` lines; blank lines and `#` comments are skipped.
    pub fn parse(input: impl BufRead, origin: &Path) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::io(origin, e))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::bad_file(origin, i + 1, msg);
            let (token, value) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `token<TAB>polarity`".into()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad polarity: {e}")))?;
            let value = F::from_f64(value).ok_or_else(|| bad("polarity out of range".into()))?;
            lex.insert(token, value).map_err(|e| bad(e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), path)
    }
}

impl PolarityLexicon<f64> {
    /// Small built-in English lexicon.
    pub fn demo() -> Self {
        Self::parse(
            include_str!("../data/demo_lexicon.tsv").as_bytes(),
            Path::new("<demo lexicon>"),
        )
        .expect("demo lexicon is well formed")
    }
}

/// Complementary positive/negative shares; `pos + neg == 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentimentScore<F = f64> {
    pub pos: F,
    pub neg: F,
}

impl<F: Real> SentimentScore<F> {
    /// Maps a polarity `p` in `[-1, 1]` to `((1 + p) / 2, (1 - p) / 2)`.
    pub fn from_polarity(p: F) -> Self {
        let two = F::one() + F::one();
        SentimentScore {
            pos: (F::one() + p) / two,
            neg: (F::one() - p) / two,
        }
    }

    pub fn neutral() -> Self {
        Self::from_polarity(F::zero())
    }
}

/// Mean polarity of the tokens found in `lexicon`, as a score.
pub fn score_text<F: Real>(tokens: &[String], lexicon: &PolarityLexicon<F>) -> SentimentScore<F> {
    let (sum, hits) = tokens
        .iter()
        .filter_map(|t| lexicon.get(t))
        .fold((F::zero(), 0usize), |(s, n), p| (s + p, n + 1));
    if hits == 0 {
        return SentimentScore::neutral();
    }
    SentimentScore::from_polarity(sum / F::from_usize(hits).expect("hit count fits"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashtagSentiment<F = f64> {
    pub hashtag: String,
    pub tweets: u64,
    pub avg_pos: F,
    pub avg_neg: F,
}

/// Mean per-tweet score for every hashtag in the corpus, most used first
/// (ties by hashtag).
pub fn hashtag_averages<F: Real>(
    corpus: &Corpus,
    lexicon: &PolarityLexicon<F>,
) -> Vec<HashtagSentiment<F>> {
    let mut sums: BTreeMap<&str, (u64, F, F)> = BTreeMap::new();
    for rec in corpus.records() {
        if rec.hashtags.is_empty() {
            continue;
        }
        let tokens = textproc::normalize(&rec.text);
        let score = score_text(&tokens, lexicon);
        for tag in &rec.hashtags {
            let e = sums.entry(tag.as_str()).or_insert((0, F::zero(), F::zero()));
            e.0 += 1;
            e.1 = e.1 + score.pos;
            e.2 = e.2 + score.neg;
        }
    }
    let mut rows: Vec<_> = sums
        .into_iter()
        .map(|(tag, (n, pos, neg))| {
            let count = F::from_u64(n).expect("count fits");
            HashtagSentiment {
                hashtag: tag.to_owned(),
                tweets: n,
                avg_pos: pos / count,
                avg_neg: neg / count,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.tweets.cmp(&a.tweets).then_with(|| a.hashtag.cmp(&b.hashtag)));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Granularity, TweetRecord};

    fn toks(words: &[&str]) -> Vec<String> {
        words.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn text_scores() {
        let lex = PolarityLexicon::from_pairs([("good", 0.6), ("meh", -0.2), ("best", 1.0)]).unwrap();
        assert_eq!(score_text(&toks(&["nothing", "here"]), &lex), SentimentScore { pos: 0.5, neg: 0.5 });
        assert_eq!(score_text(&toks(&["best"]), &lex), SentimentScore { pos: 1.0, neg: 0.0 });
        let s: SentimentScore = score_text(&toks(&["good", "x", "meh"]), &lex);
        assert!((s.pos - 0.6).abs() < 1e-15 && (s.neg - 0.4).abs() < 1e-15);
        let s: SentimentScore<f32> =
            score_text(&toks(&["good"]), &PolarityLexicon::from_pairs([("good", 0.5f32)]).unwrap());
        assert_eq!(s, SentimentScore { pos: 0.75, neg: 0.25 });
    }

    fn tweet(id: &str, text: &str) -> TweetRecord {
        TweetRecord {
            tweet_id: id.into(),
            account_id: "a".into(),
            timestamp: 0,
            text: text.into(),
            hashtags: textproc::hashtags_in(text),
        }
    }

    #[test]
    fn averages_per_hashtag() {
        let lex = PolarityLexicon::from_pairs([("ok", 0.2), ("great", 0.6)]).unwrap();
        let corpus = Corpus::new(
            vec![tweet("1", "ok #x"), tweet("2", "great #x #y"), tweet("3", "plain")],
            Granularity::Day,
        );
        let rows: Vec<HashtagSentiment> = hashtag_averages(&corpus, &lex);
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].hashtag.as_str(), rows[0].tweets), ("x", 2));
        assert!((rows[0].avg_pos - 0.7).abs() < 1e-12);
        assert!((rows[0].avg_neg - 0.3).abs() < 1e-12);
        assert_eq!((rows[1].hashtag.as_str(), rows[1].tweets), ("y", 1));
        assert!((rows[1].avg_pos - 0.8).abs() < 1e-12);
    }

    #[test]
    fn neutral_single_tweet() {
        let corpus = Corpus::new(vec![tweet("1", "hello #tag")], Granularity::Day);
        let rows = hashtag_averages(&corpus, &PolarityLexicon::<f64>::new());
        assert_eq!(rows[0].tweets, 1);
        assert_eq!((rows[0].avg_pos, rows[0].avg_neg), (0.5, 0.5));
    }

    #[test]
    fn lexicon_validation() {
        assert!(PolarityLexicon::from_pairs([("x", 1.5)]).is_err());
        assert!(PolarityLexicon::from_pairs([("x", f64::NAN)]).is_err());
        assert!(PolarityLexicon::<f64>::parse("a 1\n".as_bytes(), Path::new("l")).is_err());
        let lex = PolarityLexicon::<f64>::parse("# c\nGood\t0.5\n".as_bytes(), Path::new("l")).unwrap();
        assert_eq!(lex.get("good"), Some(0.5));
        assert!(lex.scaled(0.0).is_err());
        assert_eq!(lex.scaled(0.5).unwrap().get("good"), Some(0.25));
        assert!(!PolarityLexicon::demo().is_empty());
    }
}
