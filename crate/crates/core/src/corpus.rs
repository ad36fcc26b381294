//! Reading corpora and selecting documents from them by keyword or by
//! per-period sampling.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::period::{Granularity, PeriodKey};
use crate::rng::SplitMix64;
use crate::scoring::{Document, Scorable, Tokenizer};

/// The bundled vaccine keyword list.
pub const VACCINE_KEYWORDS: &str = include_str!("../data/vaccine_keywords.txt");

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {cause}")]
    Parse { line: usize, cause: String },
    #[error("missing field {0:?}")]
    MissingField(String),
    #[error("keyword pattern list is empty")]
    EmptyPatternList,
    #[error("{path}: {source}")]
    File { path: String, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CorpusError {
    fn parse(line: usize, cause: impl Into<String>) -> Self {
        CorpusError::Parse { line, cause: cause.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusRecord {
    pub id: String,
    pub timestamp: NaiveDate,
    pub text: String,
    pub gold_label: Option<String>,
}

impl CorpusRecord {
    pub fn period(&self, granularity: Granularity) -> PeriodKey {
        PeriodKey::of_date(self.timestamp, granularity)
    }
}

impl Scorable for CorpusRecord {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

impl From<CorpusRecord> for Document {
    fn from(r: CorpusRecord) -> Self {
        Document { id: r.id, timestamp: r.timestamp, text: r.text }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    Delimited { delimiter: u8 },
    JsonLines,
}

impl Default for InputFormat {
    fn default() -> Self {
        InputFormat::Delimited { delimiter: b'\t' }
    }
}

impl FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" | "delimited" => Ok(InputFormat::Delimited { delimiter: b'\t' }),
            "csv" => Ok(InputFormat::Delimited { delimiter: b',' }),
            "jsonl" | "json-lines" | "jsonlines" => Ok(InputFormat::JsonLines),
            _ => Err(format!("unknown corpus format {s:?} (expected tsv, csv or jsonl)")),
        }
    }
}

/// How timestamps are read.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TimestampFormat {
    /// ISO-8601 date (a time part is ignored) or a bare `YYYY`.
    #[default]
    Auto,
    /// Bare `YYYY` only.
    Year,
    /// A chrono `strftime`-style pattern for a date or date-time.
    Custom(String),
}

impl FromStr for TimestampFormat {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "auto" | "iso" | "iso8601" => TimestampFormat::Auto,
            "year" | "%Y" => TimestampFormat::Year,
            other => TimestampFormat::Custom(other.to_string()),
        })
    }
}

/// Year-only timestamps are pinned to this day of the year.
const YEAR_ONLY_MONTH: u32 = 7;
const YEAR_ONLY_DAY: u32 = 1;

fn year_only(raw: &str) -> Option<NaiveDate> {
    if raw.len() == 4 && raw.bytes().all(|b| b.is_ascii_digit()) {
        NaiveDate::from_ymd_opt(raw.parse().ok()?, YEAR_ONLY_MONTH, YEAR_ONLY_DAY)
    } else {
        None
    }
}

impl TimestampFormat {
    pub fn parse(&self, raw: &str) -> Result<NaiveDate, String> {
        let raw = raw.trim();
        let date = match self {
            TimestampFormat::Year => year_only(raw),
            TimestampFormat::Auto => year_only(raw).or_else(|| {
                raw.get(..10)
                    .filter(|_| raw.len() == 10 || !raw.as_bytes()[10].is_ascii_digit())
                    .and_then(|head| NaiveDate::parse_from_str(head, "%Y-%m-%d").ok())
            }),
            TimestampFormat::Custom(fmt) => NaiveDate::parse_from_str(raw, fmt)
                .ok()
                .or_else(|| NaiveDateTime::parse_from_str(raw, fmt).ok().map(|dt| dt.date())),
        }
        .ok_or_else(|| format!("unparseable timestamp {raw:?}"))?;
        let lo = NaiveDate::from_ymd_opt(1900, 1, 1).expect("valid date");
        let hi = NaiveDate::from_ymd_opt(2100, 12, 31).expect("valid date");
        if date < lo || date > hi {
            return Err(format!("timestamp {date} outside 1900-01-01..2100-12-31"));
        }
        Ok(date)
    }
}

/// Field mapping for an input corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub format: InputFormat,
    /// When unset, ids default to `<file name>:<line number>`.
    pub id_field: Option<String>,
    pub timestamp_field: String,
    pub text_field: String,
    pub label_field: Option<String>,
    pub timestamp_format: TimestampFormat,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            format: InputFormat::default(),
            id_field: Some("id".into()),
            timestamp_field: "timestamp".into(),
            text_field: "text".into(),
            label_field: None,
            timestamp_format: TimestampFormat::Auto,
        }
    }
}

/// Read a corpus file. Records come back in file order; the first bad row
/// aborts ingestion.
pub fn ingest(path: &Path, schema: &Schema) -> Result<Vec<CorpusRecord>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::File { path: path.display().to_string(), source })?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string());
    ingest_reader(BufReader::new(file), &name, schema)
}

pub fn ingest_reader<R: Read>(source: R, source_name: &str, schema: &Schema) -> Result<Vec<CorpusRecord>, CorpusError> {
    let records = match schema.format {
        InputFormat::Delimited { delimiter } => ingest_delimited(source, source_name, schema, delimiter)?,
        InputFormat::JsonLines => ingest_json_lines(BufReader::new(source), source_name, schema)?,
    };
    Ok(records)
}

struct RawRow {
    line: usize,
    id: Option<String>,
    timestamp: String,
    text: String,
    label: Option<String>,
}

/// Shared validation for both input formats.
struct RecordBuilder<'a> {
    source_name: &'a str,
    schema: &'a Schema,
    labelled: Option<bool>,
    records: Vec<CorpusRecord>,
}

impl<'a> RecordBuilder<'a> {
    fn new(source_name: &'a str, schema: &'a Schema) -> Self {
        Self { source_name, schema, labelled: None, records: Vec::new() }
    }

    fn push(&mut self, row: RawRow) -> Result<(), CorpusError> {
        let timestamp =
            self.schema.timestamp_format.parse(&row.timestamp).map_err(|cause| CorpusError::parse(row.line, cause))?;
        let label = row.label.filter(|l| !l.is_empty());
        if self.schema.label_field.is_some() {
            let has = label.is_some();
            match self.labelled {
                None => self.labelled = Some(has),
                Some(prev) if prev != has => {
                    return Err(CorpusError::parse(row.line, "gold labels must be present on every record or on none"))
                }
                _ => {}
            }
        }
        let id = match row.id {
            Some(id) if !id.is_empty() => id,
            Some(_) => return Err(CorpusError::parse(row.line, "empty id")),
            None => format!("{}:{}", self.source_name, row.line),
        };
        self.records.push(CorpusRecord { id, timestamp, text: row.text, gold_label: label });
        Ok(())
    }
}

fn ingest_delimited<R: Read>(
    source: R,
    source_name: &str,
    schema: &Schema,
    delimiter: u8,
) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut reader = csv::ReaderBuilder::new().delimiter(delimiter).has_headers(true).from_reader(source);
    let headers = reader.headers().map_err(|e| CorpusError::parse(1, e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}') == name)
            .ok_or_else(|| CorpusError::MissingField(name.to_string()))
    };
    let id_col = schema.id_field.as_deref().map(column).transpose()?;
    let ts_col = column(&schema.timestamp_field)?;
    let text_col = column(&schema.text_field)?;
    let label_col = schema.label_field.as_deref().map(column).transpose()?;

    let mut builder = RecordBuilder::new(source_name, schema);
    for result in reader.records() {
        let record = result.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            CorpusError::parse(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |col: usize| record.get(col).unwrap_or_default().to_string();
        builder.push(RawRow {
            line,
            id: id_col.map(field),
            timestamp: field(ts_col),
            text: field(text_col),
            label: label_col.map(field),
        })?;
    }
    Ok(builder.records)
}

fn json_scalar(value: &serde_json::Value) -> Option<String> {
    match value {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn ingest_json_lines<R: BufRead>(
    source: R,
    source_name: &str,
    schema: &Schema,
) -> Result<Vec<CorpusRecord>, CorpusError> {
    let mut builder = RecordBuilder::new(source_name, schema);
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| CorpusError::parse(line_no, e.to_string()))?;
        let object = value.as_object().ok_or_else(|| CorpusError::parse(line_no, "expected a JSON object"))?;
        let required = |name: &str| {
            object.get(name).and_then(json_scalar).ok_or_else(|| CorpusError::MissingField(name.to_string()))
        };
        let optional = |name: &str| object.get(name).and_then(json_scalar);
        builder.push(RawRow {
            line: line_no,
            id: match &schema.id_field {
                Some(f) => Some(required(f)?),
                None => None,
            },
            timestamp: required(&schema.timestamp_field)?,
            text: required(&schema.text_field)?,
            label: schema.label_field.as_deref().and_then(optional),
        })?;
    }
    Ok(builder.records)
}

/// Write records as a tab-separated corpus readable with [`Schema::default`]
/// (plus `label_field = "label"` when the records carry labels).
pub fn write_corpus<W: Write>(out: W, records: &[CorpusRecord]) -> Result<(), CorpusError> {
    let labelled = records.iter().any(|r| r.gold_label.is_some());
    let mut writer = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    let to_io = |e: csv::Error| CorpusError::Io(io::Error::other(e));
    if labelled {
        writer.write_record(["id", "timestamp", "text", "label"]).map_err(to_io)?;
    } else {
        writer.write_record(["id", "timestamp", "text"]).map_err(to_io)?;
    }
    for r in records {
        let date = r.timestamp.format("%Y-%m-%d").to_string();
        if labelled {
            let label = r.gold_label.as_deref().unwrap_or_default();
            writer.write_record([r.id.as_str(), &date, &r.text, label]).map_err(to_io)?;
        } else {
            writer.write_record([r.id.as_str(), &date, &r.text]).map_err(to_io)?;
        }
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    /// Case-insensitive containment; `%` is a wildcard.
    Substring,
    /// Case-insensitive match against the text's tokens. A pattern of several
    /// words matches a contiguous run of tokens.
    WholeToken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordPattern {
    raw: String,
    kind: PatternKind,
    /// Literal pieces between wildcards, or the pattern's tokens.
    parts: Vec<String>,
}

impl KeywordPattern {
    /// Patterns containing `%` are substring patterns. Other patterns match
    /// whole tokens, unless tokenizing would alter them ("c0v1d", "va((ine",
    /// "covid-19 passport"), in which case they are matched literally
    /// against the lowercased raw text.
    pub fn parse(raw: &str) -> Self {
        let lower = raw.trim().to_lowercase();
        if lower.contains('%') {
            let parts = lower.split('%').filter(|p| !p.is_empty()).map(str::to_string).collect();
            return Self { raw: raw.trim().to_string(), kind: PatternKind::Substring, parts };
        }
        let tokens = Tokenizer::default().tokenize(&lower);
        if !tokens.is_empty() && tokens.join(" ") == lower.split_whitespace().collect::<Vec<_>>().join(" ") {
            Self { raw: raw.trim().to_string(), kind: PatternKind::WholeToken, parts: tokens }
        } else {
            Self { raw: raw.trim().to_string(), kind: PatternKind::Substring, parts: vec![lower] }
        }
    }

    /// One pattern per line; blank lines and `#` comments are ignored.
    pub fn parse_list(text: &str) -> Vec<Self> {
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(Self::parse).collect()
    }

    pub fn vaccine_defaults() -> Vec<Self> {
        Self::parse_list(VACCINE_KEYWORDS)
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn kind(&self) -> PatternKind {
        self.kind
    }

    pub fn matches(&self, text: &str) -> bool {
        self.matches_prepared(&PreparedText::new(text))
    }

    fn matches_prepared(&self, text: &PreparedText) -> bool {
        match self.kind {
            PatternKind::Substring => {
                let mut rest = text.lower.as_str();
                for part in &self.parts {
                    match rest.find(part.as_str()) {
                        Some(at) => rest = &rest[at + part.len()..],
                        None => return false,
                    }
                }
                true
            }
            PatternKind::WholeToken => {
                text.tokens.windows(self.parts.len()).any(|w| w.iter().zip(&self.parts).all(|(a, b)| a == b))
            }
        }
    }
}

/// Text lowercased and tokenized once, for matching against many patterns.
struct PreparedText {
    lower: String,
    tokens: Vec<String>,
}

impl PreparedText {
    fn new(text: &str) -> Self {
        Self { lower: text.to_lowercase(), tokens: Tokenizer::default().tokenize(text) }
    }
}

pub fn match_keyword(text: &str, pattern: &KeywordPattern) -> bool {
    pattern.matches(text)
}

/// Keep the records matching at least one pattern, in their original order.
pub fn filter_corpus(
    records: Vec<CorpusRecord>,
    patterns: &[KeywordPattern],
) -> Result<Vec<CorpusRecord>, CorpusError> {
    if patterns.is_empty() {
        return Err(CorpusError::EmptyPatternList);
    }
    let keep: Vec<bool> = records
        .par_iter()
        .map(|r| {
            let prepared = PreparedText::new(&r.text);
            patterns.iter().any(|p| p.matches_prepared(&prepared))
        })
        .collect();
    Ok(records.into_iter().zip(keep).filter_map(|(r, k)| k.then_some(r)).collect())
}

/// Draw a uniform sample of at most `n` records from every period, without
/// replacement. Within a period the candidates are ordered by id before
/// drawing, so the result depends only on the set of records and the seed.
/// The output is sorted by `(period, id)`.
pub fn sample_per_period(
    records: Vec<CorpusRecord>,
    n: usize,
    seed: u64,
    granularity: Granularity,
) -> Vec<CorpusRecord> {
    let mut by_period: BTreeMap<PeriodKey, Vec<CorpusRecord>> = BTreeMap::new();
    for r in records {
        by_period.entry(r.period(granularity)).or_default().push(r);
    }
    let mut rng = SplitMix64::new(seed);
    let mut out = Vec::new();
    for (_, mut group) in by_period {
        group.sort_by(|a, b| a.id.cmp(&b.id));
        if group.len() > n {
            // Partial Fisher-Yates: the first n slots end up a uniform sample.
            for i in 0..n {
                let j = i + rng.below((group.len() - i) as u64) as usize;
                group.swap(i, j);
            }
            group.truncate(n);
            group.sort_by(|a, b| a.id.cmp(&b.id));
        }
        out.extend(group);
    }
    out
}
