use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ngram_events::detect::{self, DetectOptions};
use ngram_events::sentiment::hashtag_averages;
use ngram_events::synthbench::{self, RNG_ALGORITHM};
use ngram_events::textproc::{self, normalize_with};
use ngram_events::{
    aggregate, build_index_with, load_corpus, AggregateIndex, Corpus, Dictionary, EventCandidate,
    Granularity, IndexOptions, LoadOptions, PolarityLexicon, PopularityOracle, RecordFormat,
    SyntheticSpec, ThresholdConfig, TimeWindow, TokenizerOptions,
};

use crate::provenance::RunConfig;

/// Event detection over timestamped short posts via n-gram time series.
#[derive(Debug, Parser)]
#[command(name = "ngev", version, arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate, deduplicate and sort a record file; print an ingestion report.
    Ingest(IngestCmd),
    /// Top-k n-gram table as `gram,count` CSV.
    Ngrams(NgramsCmd),
    /// Zero-filled per-bucket counts of one gram.
    Timeline(TimelineCmd),
    /// Duration/count pairs of the top-k grams as `gram,duration,count` CSV.
    Scatter(ScatterCmd),
    /// Ranked burst and sustained event candidates.
    Detect(DetectCmd),
    /// Per-hashtag average positive/negative sentiment.
    Sentiment(SentimentCmd),
    /// Generate a synthetic corpus with injected events.
    Synth(SynthCmd),
    /// Score detector candidates against a synthetic spec.
    Eval(EvalCmd),
    /// Split concatenated hashtags into dictionary words.
    Segment(SegmentCmd),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Record file (JSONL or CSV).
    #[arg(long = "in", value_name = "PATH")]
    input: PathBuf,
    /// Record format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<RecordFormat>,
    /// Keep only records with `start <= timestamp <= end` (epoch seconds).
    #[arg(long, value_name = "START,END")]
    window: Option<TimeWindow>,
    #[arg(long, default_value_t = Granularity::Day)]
    granularity: Granularity,
    /// Worker threads for parsing and indexing; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl InputArgs {
    fn load(&self, run: &mut RunConfig) -> Result<Corpus> {
        let format = self.format.unwrap_or_else(|| RecordFormat::from_path(&self.input));
        run.set("format", format)
            .set("window", self.window)
            .set("granularity", self.granularity);
        run.input(&self.input)
            .with_context(|| format!("reading {}", self.input.display()))?;
        let opts = LoadOptions {
            format,
            window: self.window,
            granularity: self.granularity,
            threads: self.threads,
        };
        let (corpus, report) = load_corpus(&self.input, &opts)?;
        if report.malformed > 0 {
            let first = &report.errors[0];
            eprintln!(
                "warning: {}: skipped {} malformed line(s); first at line {}: {}",
                self.input.display(),
                report.malformed,
                first.line,
                first.message
            );
        }
        Ok(corpus)
    }
}

#[derive(Debug, Args)]
struct IndexArgs {
    #[arg(long, default_value_t = 2)]
    nmin: usize,
    #[arg(long, default_value_t = 5)]
    nmax: usize,
    /// Split URLs on punctuation instead of dropping them.
    #[arg(long)]
    keep_urls: bool,
    /// Index only records carrying this hashtag.
    #[arg(long, value_name = "TAG")]
    filter_hashtag: Option<String>,
    /// Replace `#hashtags` by their dictionary segmentation.
    #[arg(long)]
    segment_hashtags: bool,
    /// `word<TAB>weight` dictionary for --segment-hashtags (built-in demo otherwise).
    #[arg(long, value_name = "PATH")]
    dict: Option<PathBuf>,
}

impl IndexArgs {
    fn tokenizer(&self, run: &mut RunConfig) -> Result<TokenizerOptions> {
        run.set("keep_urls", self.keep_urls)
            .set("segment_hashtags", self.segment_hashtags);
        let hashtag_dictionary = if self.segment_hashtags {
            let dict = match &self.dict {
                Some(path) => {
                    run.input(path)?;
                    Dictionary::load(path)?
                }
                None => Dictionary::demo(),
            };
            run.set("dict", self.dict.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<demo>".into()));
            Some(Arc::new(dict))
        } else {
            None
        };
        Ok(TokenizerOptions {
            keep_urls: self.keep_urls,
            hashtag_dictionary,
        })
    }

    fn options(&self, nmin: usize, nmax: usize, threads: usize, run: &mut RunConfig) -> Result<IndexOptions> {
        let filter_hashtag = self
            .filter_hashtag
            .as_ref()
            .map(|t| textproc::fold_case(t.trim_start_matches('#')));
        run.set("nmin", nmin)
            .set("nmax", nmax)
            .set("filter_hashtag", &filter_hashtag);
        Ok(IndexOptions {
            nmin,
            nmax,
            tokenizer: self.tokenizer(run)?,
            filter_hashtag,
            threads,
        })
    }
}

fn build(input: &InputArgs, index: &IndexArgs, n: Option<usize>, run: &mut RunConfig) -> Result<AggregateIndex> {
    let corpus = input.load(run)?;
    let (nmin, nmax) = n.map_or((index.nmin, index.nmax), |n| (n, n));
    let opts = index.options(nmin, nmax, input.threads, run)?;
    Ok(build_index_with(&corpus, &opts)?)
}

#[derive(Debug, Args)]
struct OutputArg {
    /// Output file; standard output when omitted or `-`.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl OutputArg {
    fn open(&self) -> Result<Box<dyn Write>> {
        open_output(self.out.as_deref())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) if p != Path::new("-") => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        _ => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn write_json<T: Serialize>(mut out: impl Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

/// Writes the provenance header followed by CSV rows.
fn write_csv<R: Serialize>(
    mut out: impl Write,
    run: &RunConfig,
    header: &[&str],
    rows: impl IntoIterator<Item = R>,
) -> Result<()> {
    out.write_all(run.comment_header().as_bytes())?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Artifact<'a, T> {
    run: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Debug, Args)]
struct IngestCmd {
    #[command(flatten)]
    input: InputArgs,
    /// Write the cleaned corpus here as JSONL.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Ingestion report destination; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NgramsCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// N-gram order.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// First bucket of the counting scope.
    #[arg(long, requires = "to")]
    from: Option<u64>,
    /// Last bucket of the counting scope.
    #[arg(long, requires = "from")]
    to: Option<u64>,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Args)]
struct TimelineCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Gram text; tokenized the same way as the corpus.
    #[arg(long)]
    gram: String,
    /// Whitespace-separated columns for gnuplot instead of CSV.
    #[arg(long)]
    gnuplot: bool,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Args)]
struct ScatterCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    index: IndexArgs,
    #[arg(long, default_value_t = 3)]
    n: usize,
    #[arg(long, default_value_t = 138)]
    k: usize,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CandidateFormat {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct DetectCmd {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// `key = value` threshold overrides.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// `query,score` popularity table.
    #[arg(long, value_name = "CSV")]
    oracle: Option<PathBuf>,
    /// Keep only candidates whose popularity score reaches --popularity-floor.
    #[arg(long)]
    require_confirmation: bool,
    #[arg(long, default_value_t = 0.0)]
    popularity_floor: f64,
    /// Report grams whose occurrences all lie inside a longer gram.
    #[arg(long)]
    keep_subsumed: bool,
    /// Output format; inferred from the --out extension, JSON by default.
    #[arg(long = "format-out", value_enum)]
    format_out: Option<CandidateFormat>,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Args)]
struct SentimentCmd {
    #[command(flatten)]
    input: InputArgs,
    /// `token<TAB>polarity` lexicon (built-in demo otherwise).
    #[arg(long, value_name = "PATH")]
    lexicon: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Args)]
struct SynthCmd {
    /// Generator spec (JSON).
    #[arg(long, value_name = "JSON")]
    spec: PathBuf,
    /// Corpus destination (JSONL); metadata goes to `<out>.meta.json`.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalCmd {
    /// Candidate JSON written by `detect`.
    #[arg(long, value_name = "JSON")]
    candidates: PathBuf,
    #[arg(long, value_name = "JSON")]
    spec: PathBuf,
    /// Buckets by which injected windows are widened on each side.
    #[arg(long, default_value_t = 1)]
    slack: u64,
    #[command(flatten)]
    output: OutputArg,
}

#[derive(Debug, Args)]
struct SegmentCmd {
    /// `word<TAB>weight` dictionary (built-in demo otherwise).
    #[arg(long, value_name = "PATH")]
    dict: Option<PathBuf>,
    /// Hashtags, with or without `#`.
    #[arg(required = true)]
    tags: Vec<String>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(cmd) => ingest(cmd),
        Command::Ngrams(cmd) => ngrams(cmd),
        Command::Timeline(cmd) => timeline(cmd),
        Command::Scatter(cmd) => scatter(cmd),
        Command::Detect(cmd) => detect(cmd),
        Command::Sentiment(cmd) => sentiment(cmd),
        Command::Synth(cmd) => synth(cmd),
        Command::Eval(cmd) => eval(cmd),
        Command::Segment(cmd) => segment(cmd),
    }
}

fn ingest(cmd: IngestCmd) -> Result<()> {
    let mut run = RunConfig::new("ingest");
    let format = cmd.input.format.unwrap_or_else(|| RecordFormat::from_path(&cmd.input.input));
    run.set("format", format)
        .set("window", cmd.input.window)
        .set("granularity", cmd.input.granularity);
    run.input(&cmd.input.input)
        .with_context(|| format!("reading {}", cmd.input.input.display()))?;
    let opts = LoadOptions {
        format,
        window: cmd.input.window,
        granularity: cmd.input.granularity,
        threads: cmd.input.threads,
    };
    let (corpus, report) = load_corpus(&cmd.input.input, &opts)?;
    if let Some(path) = &cmd.out {
        let mut out = open_output(Some(path))?;
        corpus.write_jsonl(&mut out)?;
        out.flush()?;
    }

    #[derive(Serialize)]
    struct Body<'a> {
        report: &'a ngram_events::IngestReport,
        origin_bucket: u64,
        bucket_range: Option<(u64, u64)>,
    }
    let body = Body {
        report: &report,
        origin_bucket: corpus.origin_bucket(),
        bucket_range: corpus.bucket_range(),
    };
    write_json(open_output(cmd.report.as_deref())?, &Artifact { run: &run, body })
}

fn ngrams(cmd: NgramsCmd) -> Result<()> {
    let mut run = RunConfig::new("ngrams");
    let scope = cmd.from.zip(cmd.to);
    run.set("n", cmd.n).set("k", cmd.k).set("scope", scope);
    let index = build(&cmd.input, &cmd.index, Some(cmd.n), &mut run)?;
    let rows = aggregate::top_k(&index, cmd.n, cmd.k, scope)?;
    write_csv(cmd.output.open()?, &run, &["gram", "count"], rows)
}

fn timeline(cmd: TimelineCmd) -> Result<()> {
    let mut run = RunConfig::new("timeline");
    let probe = normalize_with(&cmd.gram, &cmd.index.tokenizer(&mut RunConfig::new("timeline"))?);
    if probe.is_empty() || probe.len() > textproc::MAX_N {
        bail!("gram `{}` must have 1 to {} tokens", cmd.gram, textproc::MAX_N);
    }
    let gram = probe.joined();
    run.set("gram", &gram).set("gnuplot", cmd.gnuplot);
    let index = build(&cmd.input, &cmd.index, Some(probe.len()), &mut run)?;
    let series = aggregate::timeline(&index, &gram)?;
    let mut out = cmd.output.open()?;
    if cmd.gnuplot {
        out.write_all(run.comment_header().as_bytes())?;
        writeln!(out, "# bucket count")?;
        for (b, c) in series {
            writeln!(out, "{b} {c}")?;
        }
        out.flush()?;
        Ok(())
    } else {
        write_csv(out, &run, &["bucket", "count"], series)
    }
}

fn scatter(cmd: ScatterCmd) -> Result<()> {
    let mut run = RunConfig::new("scatter");
    run.set("n", cmd.n).set("k", cmd.k);
    let index = build(&cmd.input, &cmd.index, Some(cmd.n), &mut run)?;
    let rows = detect::scatter_data(&index, cmd.n, cmd.k)?;
    write_csv(cmd.output.open()?, &run, &["gram", "duration", "count"], rows)
}

#[derive(Serialize)]
struct CandidateRow<'a> {
    gram: &'a str,
    total_count: u64,
    distinct_tweets: u64,
    distinct_accounts: u64,
    raw_duration: u64,
    effective_duration: u64,
    density: f64,
    category: String,
    peak_bucket: u64,
    first_bucket: u64,
    last_bucket: u64,
    popularity: Option<f64>,
}

fn detect(cmd: DetectCmd) -> Result<()> {
    let mut run = RunConfig::new("detect");
    let cfg = match &cmd.config {
        Some(path) => {
            run.input(path)?;
            ThresholdConfig::load(path)?
        }
        None => ThresholdConfig::default(),
    };
    let oracle = match &cmd.oracle {
        Some(path) => {
            run.input(path)?;
            Some(PopularityOracle::load(path)?)
        }
        None => None,
    };
    if cmd.require_confirmation && oracle.is_none() {
        return Err(ngram_events::Error::OracleUnavailable.into());
    }
    run.set("thresholds", cfg)
        .set("require_confirmation", cmd.require_confirmation)
        .set("popularity_floor", cmd.popularity_floor)
        .set("suppress_subsumed", !cmd.keep_subsumed);
    let index = build(&cmd.input, &cmd.index, None, &mut run)?;
    let opts = DetectOptions {
        oracle: oracle.as_ref(),
        require_confirmation: cmd.require_confirmation,
        popularity_floor: cmd.popularity_floor,
        suppress_subsumed: !cmd.keep_subsumed,
    };
    let candidates: Vec<EventCandidate> = detect::detect_events_with(&index, &cfg, &opts)?;

    let format = cmd.format_out.unwrap_or_else(|| match &cmd.output.out {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => CandidateFormat::Csv,
        _ => CandidateFormat::Json,
    });
    let out = cmd.output.open()?;
    match format {
        CandidateFormat::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                candidates: &'a [EventCandidate],
            }
            write_json(out, &Artifact { run: &run, body: Body { candidates: &candidates } })
        }
        CandidateFormat::Csv => {
            let rows = candidates.iter().map(|c| CandidateRow {
                gram: &c.gram,
                total_count: c.total_count,
                distinct_tweets: c.distinct_tweets,
                distinct_accounts: c.distinct_accounts,
                raw_duration: c.raw_duration,
                effective_duration: c.effective_duration,
                density: c.density,
                category: c.category.to_string(),
                peak_bucket: c.peak_bucket,
                first_bucket: c.window[0],
                last_bucket: c.window[1],
                popularity: c.popularity,
            });
            let header = [
                "gram",
                "total_count",
                "distinct_tweets",
                "distinct_accounts",
                "raw_duration",
                "effective_duration",
                "density",
                "category",
                "peak_bucket",
                "first_bucket",
                "last_bucket",
                "popularity",
            ];
            write_csv(out, &run, &header, rows)
        }
    }
}

fn sentiment(cmd: SentimentCmd) -> Result<()> {
    let mut run = RunConfig::new("sentiment");
    let corpus = cmd.input.load(&mut run)?;
    let lexicon = match &cmd.lexicon {
        Some(path) => {
            run.input(path)?;
            PolarityLexicon::load(path)?
        }
        None => PolarityLexicon::demo(),
    };
    run.set(
        "lexicon",
        cmd.lexicon.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<demo>".into()),
    );
    let rows: Vec<_> = hashtag_averages(&corpus, &lexicon)
        .into_iter()
        .map(|r| (r.hashtag, r.tweets, r.avg_pos, r.avg_neg))
        .collect();
    write_csv(cmd.output.open()?, &run, &["hashtag", "tweets", "avg_pos", "avg_neg"], rows)
}

fn read_spec(path: &Path) -> Result<SyntheticSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec: SyntheticSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    spec.validate()?;
    Ok(spec)
}

fn synth(cmd: SynthCmd) -> Result<()> {
    let mut run = RunConfig::new("synth");
    run.input(&cmd.spec)?;
    let spec = read_spec(&cmd.spec)?;
    run.set("rng", RNG_ALGORITHM).set("spec", &spec);
    let corpus = synthbench::generate(&spec)?;
    let mut out = open_output(Some(&cmd.out))?;
    corpus.write_jsonl(&mut out)?;
    out.flush()?;
    drop(out);

    let mut meta_path = cmd.out.clone().into_os_string();
    meta_path.push(".meta.json");
    let mut output_run = RunConfig::new("synth");
    output_run.input(&cmd.out)?;

    #[derive(Serialize)]
    struct Body<'a> {
        records: usize,
        output: &'a crate::provenance::InputDigest,
    }
    write_json(
        open_output(Some(Path::new(&meta_path)))?,
        &Artifact {
            run: &run,
            body: Body {
                records: corpus.len(),
                output: &output_run.inputs[0],
            },
        },
    )
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CandidateFile {
    Wrapped { candidates: Vec<EventCandidate> },
    Bare(Vec<EventCandidate>),
}

fn eval(cmd: EvalCmd) -> Result<()> {
    let mut run = RunConfig::new("eval");
    run.input(&cmd.candidates)?.input(&cmd.spec)?;
    run.set("slack", cmd.slack);
    let text = std::fs::read_to_string(&cmd.candidates)
        .with_context(|| format!("reading {}", cmd.candidates.display()))?;
    let candidates = match serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", cmd.candidates.display()))?
    {
        CandidateFile::Wrapped { candidates } | CandidateFile::Bare(candidates) => candidates,
    };
    let spec = read_spec(&cmd.spec)?;
    let report = synthbench::evaluate(&candidates, &spec, cmd.slack);
    write_json(cmd.output.open()?, &Artifact { run: &run, body: report })
}

fn segment(cmd: SegmentCmd) -> Result<()> {
    let dict = match &cmd.dict {
        Some(path) => Dictionary::load(path)?,
        None => Dictionary::demo(),
    };
    let mut out = open_output(None)?;
    for tag in &cmd.tags {
        let tag = textproc::fold_case(tag.trim_start_matches('#'));
        if tag.is_empty() || tag.contains(char::is_whitespace) {
            bail!("invalid hashtag `{tag}`");
        }
        writeln!(out, "{tag}\t{}", textproc::segment_hashtag(&tag, &dict).join(" "))?;
    }
    out.flush()?;
    Ok(())
}
