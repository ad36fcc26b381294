//! The `dissent` command-line front end.
//!
//! Every stage reads and writes plain TSV, so a pipeline run can be
//! reproduced one command at a time:
//!
//! ```text
//! dissent filter    --corpus letters.tsv --out filtered.tsv
//! dissent sample    --corpus filtered.tsv --n 1000 --out sampled.tsv
//! dissent score     --corpus sampled.tsv --lexicon SentiWordNet_3.0.0.txt --out scores.tsv
//! dissent aggregate --scores scores.tsv --out aggregate.tsv
//! dissent normalize --series aggregate.tsv --out series.tsv
//! dissent correlate --x conspiracy.tsv --y aggregate.tsv
//! ```
//!
//! Failures exit with code 2 for input or configuration errors and 3 for
//! statistically degenerate data.

pub mod config;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{self, CorpusError, CorpusRecord, KeywordPattern};
use crate::eval::{self, EvalError, EvalReport, UkpColumns};
use crate::lexicon::{self, AggregationPolicy, LexiconError, WordScoreTable};
use crate::scoring::{self, PeriodScore, ScoringError};
use crate::timeseries::{self, PraisWinstenFit, PraisWinstenOptions, Series, StatsError};

pub use config::{FileConfig, Overrides, RunConfig, BUILTIN_VACCINE, CONFIG_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn degenerate(message: impl Into<String>) -> Self {
        Self { code: EXIT_DEGENERATE, message: message.into() }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<LexiconError> for CliError {
    fn from(e: LexiconError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ScoringError> for CliError {
    fn from(e: ScoringError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        if e.is_degenerate() {
            CliError::degenerate(e.to_string())
        } else {
            CliError::input(e.to_string())
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptyInput => CliError::degenerate(e.to_string()),
            other => CliError::input(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dissent", version, about = "Lexicon-based disagreement scoring for text corpora")]
#[command(propagate_version = true, arg_required_else_help = true)]
pub struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true, env = CONFIG_ENV, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lexicon operations.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Score every document of a corpus.
    Score(ScoreArgs),
    /// Keep documents matching at least one keyword pattern.
    Filter(FilterArgs),
    /// Draw a seeded per-period sample.
    Sample(SampleArgs),
    /// Average document scores per period.
    Aggregate(AggregateArgs),
    /// Min-max normalize a series onto [0, 1].
    Normalize(NormalizeArgs),
    /// Fit a Prais-Winsten regression of one series on another.
    Correlate(CorrelateArgs),
    /// Filter, sample, score, aggregate, normalize and optionally correlate.
    Pipeline(PipelineArgs),
    /// Median-split validation against a labeled corpus.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Subcommand)]
pub enum LexiconCommand {
    /// Build a word score table from a SentiWordNet file.
    Build(LexiconBuildArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct LexiconArgs {
    /// SentiWordNet 3.0 file.
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    /// Prebuilt word table (see `lexicon build`), used instead of --lexicon.
    #[arg(long, value_name = "FILE", conflicts_with = "lexicon")]
    pub table: Option<PathBuf>,
    /// mean-all-senses, first-sense or rank-weighted.
    #[arg(long)]
    pub policy: Option<String>,
    /// Drop @handles before scoring.
    #[arg(long)]
    pub strip_mentions: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SchemaArgs {
    /// tsv, csv or jsonl.
    #[arg(long)]
    pub format: Option<String>,
    /// Field separator for delimited input.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Id column; an empty value means `<file>:<line>` ids.
    #[arg(long)]
    pub id_field: Option<String>,
    #[arg(long)]
    pub timestamp_field: Option<String>,
    #[arg(long)]
    pub text_field: Option<String>,
    #[arg(long)]
    pub label_field: Option<String>,
    /// auto, year, or a strftime pattern.
    #[arg(long)]
    pub timestamp_format: Option<String>,
}

#[derive(Debug, Args)]
pub struct LexiconBuildArgs {
    #[arg(long, value_name = "FILE")]
    pub lexicon: Option<PathBuf>,
    #[arg(long)]
    pub policy: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// year or month.
    #[arg(long)]
    pub granularity: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Pattern file, one per line, or `builtin:vaccine`.
    #[arg(long)]
    pub keywords: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Documents per period.
    #[arg(long)]
    pub n: Option<usize>,
    /// Decimal or 0x-prefixed hex. Defaults to 0x5EED.
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub granularity: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[arg(long)]
    pub granularity: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct NormalizeArgs {
    #[arg(long, value_name = "FILE")]
    pub series: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct FitArgs {
    /// Convergence tolerance on successive rho estimates.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub max_iter: usize,
}

impl FitArgs {
    fn options(&self) -> Result<PraisWinstenOptions, CliError> {
        if self.tol.is_nan() || self.tol <= 0.0 || self.max_iter == 0 {
            return Err(CliError::input("--tol and --max-iter must be positive"));
        }
        Ok(PraisWinstenOptions { tol: self.tol, max_iter: self.max_iter })
    }
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    /// Regressor series (period, value, n).
    #[arg(long, value_name = "FILE")]
    pub x: PathBuf,
    /// Response series.
    #[arg(long, value_name = "FILE")]
    pub y: PathBuf,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub schema: SchemaArgs,
    /// Filter first with this pattern file (or `builtin:vaccine`).
    #[arg(long)]
    pub keywords: Option<String>,
    #[arg(long)]
    pub sample_n: Option<usize>,
    #[arg(long, value_parser = parse_seed)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub granularity: Option<String>,
    /// External series to regress disagreement on.
    #[arg(long, value_name = "FILE")]
    pub correlate: Option<PathBuf>,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Also write plot.tsv.
    #[arg(long)]
    pub plot_data: bool,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Dataset {
    Imdb,
    Ukp,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, value_enum)]
    pub dataset: Dataset,
    /// Dataset file or directory.
    #[arg(long, value_name = "PATH")]
    pub path: PathBuf,
    /// Policy name, or `all` to compare every policy.
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[arg(long, default_value = "sentence")]
    pub sentence_column: String,
    #[arg(long, default_value = "annotation")]
    pub annotation_column: String,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_seed(raw: &str) -> Result<u64, String> {
    let raw = raw.trim();
    let parsed = match raw.strip_prefix("0x").or_else(|| raw.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => raw.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {raw:?}: {e}"))
}

/// Parse `args` (program name first), run the command and return the exit
/// code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Lexicon(LexiconCommand::Build(a)) => cmd_lexicon_build(file, a),
        Command::Score(a) => cmd_score(file, a),
        Command::Filter(a) => cmd_filter(file, a),
        Command::Sample(a) => cmd_sample(file, a),
        Command::Aggregate(a) => cmd_aggregate(file, a),
        Command::Normalize(a) => cmd_normalize(a),
        Command::Correlate(a) => cmd_correlate(a),
        Command::Pipeline(a) => cmd_pipeline(file, a),
        Command::Evaluate(a) => cmd_evaluate(file, a),
    }
}

fn apply_lexicon(o: &mut Overrides, a: &LexiconArgs) {
    o.lexicon = a.lexicon.clone();
    o.table = a.table.clone();
    o.policy = a.policy.clone();
    o.strip_mentions = a.strip_mentions;
}

fn apply_schema(o: &mut Overrides, a: &SchemaArgs) {
    o.format = a.format.clone();
    o.delimiter = a.delimiter;
    o.id_field = a.id_field.clone();
    o.timestamp_field = a.timestamp_field.clone();
    o.text_field = a.text_field.clone();
    o.label_field = a.label_field.clone();
    o.timestamp_format = a.timestamp_format.clone();
}

fn require_exists(path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::input(format!("{}: no such file or directory", path.display())))
    }
}

fn require_lexicon(cfg: &RunConfig) -> Result<(), CliError> {
    match (&cfg.table_path, &cfg.lexicon_path) {
        (Some(p), _) | (None, Some(p)) => require_exists(p),
        (None, None) => Err(CliError::input("a lexicon is required (--lexicon or --table)")),
    }
}

fn require_keywords(source: Option<&str>) -> Result<(), CliError> {
    match source {
        Some(k) if k != BUILTIN_VACCINE => require_exists(Path::new(k)),
        _ => Ok(()),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_table(cfg: &RunConfig) -> Result<WordScoreTable, CliError> {
    if let Some(path) = &cfg.table_path {
        return WordScoreTable::read_sidecar(open(path)?, cfg.aggregation_policy)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())));
    }
    let path = cfg.lexicon_path.as_ref().ok_or_else(|| CliError::input("a lexicon is required"))?;
    let records = read_lexicon(path)?;
    Ok(lexicon::build_word_table(&records, cfg.aggregation_policy)?)
}

fn read_lexicon(path: &Path) -> Result<Vec<lexicon::SynsetRecord>, CliError> {
    lexicon::parse_sentiwordnet(open(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn load_patterns(source: Option<&str>) -> Result<Vec<KeywordPattern>, CliError> {
    let patterns = match source {
        None => KeywordPattern::vaccine_defaults(),
        Some(k) if k == BUILTIN_VACCINE => KeywordPattern::vaccine_defaults(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("{path}: {e}")))?;
            KeywordPattern::parse_list(&text)
        }
    };
    if patterns.is_empty() {
        return Err(CorpusError::EmptyPatternList.into());
    }
    Ok(patterns)
}

/// Write to `path`, or to standard output when `None`.
fn emit<F>(path: Option<&Path>, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            let mut out = BufWriter::new(file);
            body(&mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = BufWriter::new(stdout.lock());
            body(&mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn write_corpus_to(out: &mut dyn Write, records: &[CorpusRecord]) -> io::Result<()> {
    corpus::write_corpus(out, records).map_err(|e| match e {
        CorpusError::Io(io) => io,
        other => io::Error::other(other.to_string()),
    })
}

fn cmd_lexicon_build(file: FileConfig, a: LexiconBuildArgs) -> Result<(), CliError> {
    let flags = Overrides { lexicon: a.lexicon, policy: a.policy, ..Default::default() };
    let cfg = RunConfig::resolve(file, flags)?;
    let path = cfg.lexicon_path.as_ref().ok_or_else(|| CliError::input("--lexicon is required"))?;
    require_exists(path)?;
    let records = read_lexicon(path)?;
    let table = lexicon::build_word_table(&records, cfg.aggregation_policy)?;
    emit(a.out.as_deref(), |out| table.write_sidecar(out))?;
    let entries: usize = records.iter().map(|r| r.terms.len()).sum();
    eprintln!("{} synsets, {entries} word senses, {} words ({})", records.len(), table.len(), cfg.aggregation_policy);
    Ok(())
}

/// Score `records` and tag each score with its period, in input order.
fn score_records(records: &[CorpusRecord], cfg: &RunConfig) -> Result<Vec<PeriodScore>, CliError> {
    let table = load_table(cfg)?;
    let scores = scoring::score_corpus(records, &table, &cfg.tokenizer)?;
    Ok(records.iter().zip(scores).map(|(r, score)| PeriodScore { period: r.period(cfg.granularity), score }).collect())
}

fn write_score_rows(out: &mut dyn Write, rows: &[PeriodScore]) -> io::Result<()> {
    // An empty corpus yields an empty file, not a bare header.
    if rows.is_empty() {
        return Ok(());
    }
    scoring::write_scores(out, rows)
}

fn cmd_score(file: FileConfig, a: ScoreArgs) -> Result<(), CliError> {
    let mut flags = Overrides { granularity: a.granularity, ..Default::default() };
    apply_lexicon(&mut flags, &a.lexicon);
    apply_schema(&mut flags, &a.schema);
    let cfg = RunConfig::resolve(file, flags)?;
    require_exists(&a.corpus)?;
    require_lexicon(&cfg)?;
    let records = corpus::ingest(&a.corpus, &cfg.schema)?;
    let rows = score_records(&records, &cfg)?;
    emit(a.out.as_deref(), |out| write_score_rows(out, &rows))
}

fn cmd_filter(file: FileConfig, a: FilterArgs) -> Result<(), CliError> {
    let mut flags = Overrides { keywords: a.keywords, ..Default::default() };
    apply_schema(&mut flags, &a.schema);
    let cfg = RunConfig::resolve(file, flags)?;
    require_exists(&a.corpus)?;
    require_keywords(cfg.keywords.as_deref())?;
    let patterns = load_patterns(cfg.keywords.as_deref())?;
    let records = corpus::ingest(&a.corpus, &cfg.schema)?;
    let total = records.len();
    let kept = corpus::filter_corpus(records, &patterns)?;
    eprintln!("kept {} of {total} documents", kept.len());
    emit(a.out.as_deref(), |out| write_corpus_to(out, &kept))
}

fn cmd_sample(file: FileConfig, a: SampleArgs) -> Result<(), CliError> {
    let mut flags = Overrides { sample_n: a.n, seed: a.seed, granularity: a.granularity, ..Default::default() };
    apply_schema(&mut flags, &a.schema);
    let cfg = RunConfig::resolve(file, flags)?;
    let n = cfg.sample_n.ok_or_else(|| CliError::input("--n is required"))?;
    require_exists(&a.corpus)?;
    let records = corpus::ingest(&a.corpus, &cfg.schema)?;
    let sample = corpus::sample_per_period(records, n, cfg.seed, cfg.granularity);
    emit(a.out.as_deref(), |out| write_corpus_to(out, &sample))
}

fn read_score_file(path: &Path) -> Result<Vec<PeriodScore>, CliError> {
    scoring::read_scores(open(path)?).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn read_series_file(path: &Path) -> Result<Series, CliError> {
    require_exists(path)?;
    timeseries::read_series(open(path)?).map_err(|e| {
        let wrapped: CliError = e.into();
        CliError { code: wrapped.code, message: format!("{}: {}", path.display(), wrapped.message) }
    })
}

fn aggregate_scores(rows: &[PeriodScore], cfg: &RunConfig) -> Result<Series, CliError> {
    let agg = timeseries::aggregate(rows, cfg.granularity)?;
    for p in &agg.empty_periods {
        eprintln!("warning: period {p} has no document with a defined score; omitted");
    }
    Ok(agg.series.to_series())
}

fn cmd_aggregate(file: FileConfig, a: AggregateArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(file, Overrides { granularity: a.granularity, ..Default::default() })?;
    require_exists(&a.scores)?;
    let rows = read_score_file(&a.scores)?;
    let series = aggregate_scores(&rows, &cfg)?;
    emit(a.out.as_deref(), |out| timeseries::write_series(out, &series))
}

fn cmd_normalize(a: NormalizeArgs) -> Result<(), CliError> {
    let series = read_series_file(&a.series)?;
    let normalized = timeseries::normalize_series(&series)?.to_series();
    emit(a.out.as_deref(), |out| timeseries::write_series(out, &normalized))
}

fn fit_series(x: &Series, y: &Series, opts: PraisWinstenOptions) -> Result<PraisWinstenFit, CliError> {
    let aligned = timeseries::align(x, y)?;
    for (before, after) in &aligned.gaps {
        eprintln!("warning: gap in aligned series between {before} and {after}");
    }
    Ok(timeseries::prais_winsten_aligned(&aligned, opts)?)
}

fn write_fit(out: &mut dyn Write, fit: &PraisWinstenFit) -> io::Result<()> {
    writeln!(out, "{fit}")?;
    writeln!(out, "{}", fit.to_json_line())
}

fn cmd_correlate(a: CorrelateArgs) -> Result<(), CliError> {
    let opts = a.fit.options()?;
    let x = read_series_file(&a.x)?;
    let y = read_series_file(&a.y)?;
    let fit = fit_series(&x, &y, opts)?;
    emit(a.out.as_deref(), |out| write_fit(out, &fit))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// `period`, then raw and normalized columns per series, over the union of
/// periods.
fn write_plot_data(
    out: &mut dyn Write,
    disagreement: &Series,
    disagreement_norm: &Series,
    external: Option<(&Series, &Series)>,
) -> io::Result<()> {
    let lookup = |s: &Series, p| s.points().iter().find(|q| q.period == p).map(|q| q.value);
    let mut periods: Vec<_> = disagreement.points().iter().map(|p| p.period).collect();
    if let Some((raw, _)) = external {
        periods.extend(raw.points().iter().map(|p| p.period));
    }
    periods.sort();
    periods.dedup();
    write!(out, "period\tdisagreement\tdisagreement_normalized")?;
    if external.is_some() {
        write!(out, "\texternal\texternal_normalized")?;
    }
    writeln!(out)?;
    for p in periods {
        write!(out, "{p}\t{}\t{}", fmt_opt(lookup(disagreement, p)), fmt_opt(lookup(disagreement_norm, p)))?;
        if let Some((raw, norm)) = external {
            write!(out, "\t{}\t{}", fmt_opt(lookup(raw, p)), fmt_opt(lookup(norm, p)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn cmd_pipeline(file: FileConfig, a: PipelineArgs) -> Result<(), CliError> {
    let opts = a.fit.options()?;
    let mut flags = Overrides {
        keywords: a.keywords,
        sample_n: a.sample_n,
        seed: a.seed,
        granularity: a.granularity,
        output_dir: a.out_dir,
        ..Default::default()
    };
    apply_lexicon(&mut flags, &a.lexicon);
    apply_schema(&mut flags, &a.schema);
    let cfg = RunConfig::resolve(file, flags)?;
    let out_dir = cfg.output_dir.clone().ok_or_else(|| CliError::input("--out-dir is required"))?;
    require_exists(&a.corpus)?;
    require_lexicon(&cfg)?;
    require_keywords(cfg.keywords.as_deref())?;
    if let Some(c) = &a.correlate {
        require_exists(c)?;
    }
    fs::create_dir_all(&out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;

    let mut records = corpus::ingest(&a.corpus, &cfg.schema)?;
    if cfg.keywords.is_some() {
        let patterns = load_patterns(cfg.keywords.as_deref())?;
        records = corpus::filter_corpus(records, &patterns)?;
    }
    if let Some(n) = cfg.sample_n {
        records = corpus::sample_per_period(records, n, cfg.seed, cfg.granularity);
    }
    eprintln!("scoring {} documents", records.len());
    let rows = score_records(&records, &cfg)?;
    emit(Some(&out_dir.join("scores.tsv")), |out| write_score_rows(out, &rows))?;

    let raw = aggregate_scores(&rows, &cfg)?;
    emit(Some(&out_dir.join("aggregate.tsv")), |out| timeseries::write_series(out, &raw))?;
    let normalized = timeseries::normalize_series(&raw)?.to_series();
    emit(Some(&out_dir.join("series.tsv")), |out| timeseries::write_series(out, &normalized))?;

    let external = match &a.correlate {
        Some(path) => {
            let ext = read_series_file(path)?;
            let fit = fit_series(&ext, &raw, opts)?;
            emit(Some(&out_dir.join("fit.txt")), |out| write_fit(out, &fit))?;
            println!("{fit}");
            let ext_norm = timeseries::normalize_series(&ext)?.to_series();
            Some((ext, ext_norm))
        }
        None => None,
    };
    if a.plot_data {
        let ext = external.as_ref().map(|(r, n)| (r, n));
        emit(Some(&out_dir.join("plot.tsv")), |out| write_plot_data(out, &raw, &normalized, ext))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PolicyReport<'a> {
    policy: String,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn cmd_evaluate(file: FileConfig, mut a: EvaluateArgs) -> Result<(), CliError> {
    let all = a.lexicon.policy.as_deref() == Some("all");
    if all {
        a.lexicon.policy = None;
    }
    let mut flags = Overrides::default();
    apply_lexicon(&mut flags, &a.lexicon);
    let cfg = RunConfig::resolve(file, flags)?;
    require_exists(&a.path)?;
    require_lexicon(&cfg)?;
    if all && cfg.table_path.is_some() {
        return Err(CliError::input("--policy all needs --lexicon; a prebuilt table has a single policy"));
    }
    let docs = match a.dataset {
        Dataset::Imdb => eval::load_imdb(&a.path)?,
        Dataset::Ukp => eval::load_ukp(
            &a.path,
            &UkpColumns { sentence: a.sentence_column.clone(), annotation: a.annotation_column.clone() },
        )?,
    };
    let policies: Vec<AggregationPolicy> =
        if all { AggregationPolicy::ALL.to_vec() } else { vec![cfg.aggregation_policy] };

    let mut reports = Vec::with_capacity(policies.len());
    if let Some(path) = &cfg.table_path {
        let table = WordScoreTable::read_sidecar(open(path)?, cfg.aggregation_policy)?;
        reports.push((cfg.aggregation_policy, eval::evaluate_corpus(&docs, &table, &cfg.tokenizer)?));
    } else {
        let path = cfg.lexicon_path.as_ref().expect("checked by require_lexicon");
        let records = read_lexicon(path)?;
        for policy in policies {
            let table = lexicon::build_word_table(&records, policy)?;
            reports.push((policy, eval::evaluate_corpus(&docs, &table, &cfg.tokenizer)?));
        }
    }

    emit(a.out.as_deref(), |out| {
        writeln!(out, "{} documents", docs.len())?;
        writeln!(
            out,
            "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8}",
            "policy", "prec", "recall", "f1", "acc", "macro_f1", "skipped"
        )?;
        for (policy, r) in &reports {
            writeln!(
                out,
                "{:<16} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>8}",
                policy.to_string(),
                r.precision,
                r.recall,
                r.f1,
                r.accuracy,
                r.macro_f1,
                r.n_excluded_undefined
            )?;
        }
        for (policy, report) in &reports {
            let line = PolicyReport { policy: policy.to_string(), report };
            writeln!(out, "{}", serde_json::to_string(&line).map_err(io::Error::other)?)?;
        }
        Ok(())
    })
}
