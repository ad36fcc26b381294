//! Median-split validation of the disagreement score as a binary classifier.
//!
//! Scores are thresholded at their own median: documents scoring strictly
//! above the lower median are predicted to be in the positive class
//! (negative sentiment, or an argument against). The predictions are then
//! compared with gold labels.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;
use walkdir::WalkDir;

use crate::lexicon::WordScoreTable;
use crate::scoring::{score_corpus, Scorable, ScoringError, Tokenizer};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no scores to split")]
    EmptyInput,
    #[error("prediction and gold lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("dataset {path}: {cause}")]
    Dataset { path: String, cause: String },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    /// Negative sentiment / opposing argument.
    Positive,
    Negative,
}

impl Label {
    pub fn flipped(self) -> Self {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianSplit {
    /// Lower median of the scores.
    pub median: f64,
    pub predictions: Vec<(String, Label)>,
}

/// Predict [`Label::Positive`] for scores strictly above the lower median
/// (the element at index `ceil(k/2) - 1` of the sorted scores). Ties at the
/// median predict [`Label::Negative`].
pub fn median_split(scores: &[(String, f64)]) -> Result<MedianSplit, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let mut sorted: Vec<f64> = scores.iter().map(|s| s.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len().div_ceil(2) - 1];
    let predictions = scores
        .iter()
        .map(|(id, d)| (id.clone(), if *d > median { Label::Positive } else { Label::Negative }))
        .collect();
    Ok(MedianSplit { median, predictions })
}

/// Map a UKP annotation onto the binary scheme: arguments against are
/// positive, supporting and non-arguments negative.
pub fn collapse_ukp(label: &str) -> Result<Label, EvalError> {
    match label.trim() {
        "Argument_against" | "oppose argument" => Ok(Label::Positive),
        "Argument_for" | "NoArgument" | "support argument" | "no argument" => Ok(Label::Negative),
        other => Err(EvalError::UnknownLabel(other.to_string())),
    }
}

/// Map an IMDB polarity label; negative reviews are the positive class.
pub fn collapse_imdb(label: &str) -> Result<Label, EvalError> {
    match label.trim().to_ascii_lowercase().as_str() {
        "neg" | "negative" | "0" => Ok(Label::Positive),
        "pos" | "positive" | "1" => Ok(Label::Negative),
        _ => Err(EvalError::UnknownLabel(label.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    /// Mean of the F1 scores of both classes.
    pub macro_f1: f64,
    /// Split threshold; absent when the report was built from predictions.
    pub median: Option<f64>,
    pub n_excluded_undefined: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Confusion counts and metrics, with [`Label::Positive`] as the positive
/// class.
pub fn evaluate(pred: &[Label], gold: &[Label]) -> Result<EvalReport, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::LengthMismatch(pred.len(), gold.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (p, g) in pred.iter().zip(gold) {
        match (p, g) {
            (Label::Positive, Label::Positive) => tp += 1,
            (Label::Positive, Label::Negative) => fp += 1,
            (Label::Negative, Label::Positive) => fn_ += 1,
            (Label::Negative, Label::Negative) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = f1_of(precision, recall);
    let f1_negative = f1_of(ratio(tn, tn + fn_), ratio(tn, tn + fp));
    Ok(EvalReport {
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        f1,
        accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
        macro_f1: (f1 + f1_negative) / 2.0,
        median: None,
        n_excluded_undefined: 0,
    })
}

/// A document with a gold label, as loaded from a validation corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledDoc {
    pub id: String,
    pub text: String,
    pub gold: Label,
}

impl Scorable for LabeledDoc {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

/// Score the documents and compare the median split of the defined scores
/// with gold.
pub fn evaluate_corpus(
    docs: &[LabeledDoc],
    table: &WordScoreTable,
    tokenizer: &Tokenizer,
) -> Result<EvalReport, EvalError> {
    let scores = score_corpus(docs, table, tokenizer)?;
    let mut defined = Vec::with_capacity(scores.len());
    let mut gold = Vec::with_capacity(scores.len());
    let mut excluded = 0u64;
    for (doc, score) in docs.iter().zip(scores) {
        match score.d {
            Some(d) => {
                defined.push((score.doc_id, d));
                gold.push(doc.gold);
            }
            None => excluded += 1,
        }
    }
    let split = median_split(&defined)?;
    let pred: Vec<Label> = split.predictions.iter().map(|p| p.1).collect();
    let mut report = evaluate(&pred, &gold)?;
    report.median = Some(split.median);
    report.n_excluded_undefined = excluded;
    Ok(report)
}

fn dataset_err(path: &Path, cause: impl Into<String>) -> EvalError {
    EvalError::Dataset { path: path.display().to_string(), cause: cause.into() }
}

/// Load IMDB reviews.
///
/// `path` is either the extracted review release (text files under `pos/`
/// and `neg/` directories, at any depth; `unsup/` is ignored) or a flattened
/// TSV `id<TAB>label<TAB>text`. Documents are returned sorted by id.
pub fn load_imdb(path: &Path) -> Result<Vec<LabeledDoc>, EvalError> {
    if path.is_file() {
        return load_imdb_tsv(path);
    }
    let mut docs = Vec::new();
    for entry in WalkDir::new(path).sort_by_file_name() {
        let entry = entry.map_err(|e| dataset_err(path, e.to_string()))?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|e| e != "txt") {
            continue;
        }
        let parent = entry.path().parent().and_then(|p| p.file_name()).and_then(|n| n.to_str());
        let gold = match parent {
            Some("neg") => Label::Positive,
            Some("pos") => Label::Negative,
            _ => continue,
        };
        let text = fs::read_to_string(entry.path())?;
        let id = entry.path().strip_prefix(path).unwrap_or(entry.path()).to_string_lossy().replace('\\', "/");
        docs.push(LabeledDoc { id, text, gold });
    }
    if docs.is_empty() {
        return Err(dataset_err(path, "no reviews found under pos/ or neg/"));
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(docs)
}

fn load_imdb_tsv(path: &Path) -> Result<Vec<LabeledDoc>, EvalError> {
    let content = fs::read_to_string(path)?;
    let mut docs = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        if line.trim().is_empty() || (idx == 0 && line.starts_with("id\t")) {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(label), Some(text)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(dataset_err(path, format!("line {}: expected id, label and text", idx + 1)));
        };
        docs.push(LabeledDoc { id: id.to_string(), text: text.to_string(), gold: collapse_imdb(label)? });
    }
    Ok(docs)
}

/// Column names of a UKP sentential argument TSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UkpColumns {
    pub sentence: String,
    pub annotation: String,
}

impl Default for UkpColumns {
    fn default() -> Self {
        Self { sentence: "sentence".into(), annotation: "annotation".into() }
    }
}

/// Load UKP sentences from one TSV file, or from every `.tsv` in a
/// directory (all topics pooled). Ids are `<file stem>:<line>`.
pub fn load_ukp(path: &Path, columns: &UkpColumns) -> Result<Vec<LabeledDoc>, EvalError> {
    let files: Vec<_> = if path.is_dir() {
        let mut files: Vec<_> = fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "tsv"))
            .collect();
        files.sort();
        files
    } else {
        vec![path.to_path_buf()]
    };
    if files.is_empty() {
        return Err(dataset_err(path, "no .tsv files"));
    }
    let mut docs = Vec::new();
    for file in files {
        let content = fs::read_to_string(&file)?;
        let mut lines = content.lines().enumerate();
        let header: Vec<&str> = match lines.next() {
            Some((_, h)) => h.split('\t').collect(),
            None => continue,
        };
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| dataset_err(&file, format!("missing column {name:?}")))
        };
        let (s_col, a_col) = (col(&columns.sentence)?, col(&columns.annotation)?);
        let stem = file.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let (Some(sentence), Some(annotation)) = (fields.get(s_col), fields.get(a_col)) else {
                return Err(dataset_err(&file, format!("line {}: too few columns", idx + 1)));
            };
            docs.push(LabeledDoc {
                id: format!("{stem}:{}", idx + 1),
                text: sentence.to_string(),
                gold: collapse_ukp(annotation)?,
            });
        }
    }
    Ok(docs)
}
