//! Tokenization and the per-document disagreement score.
//!
//! The score of a document is the mean negative score over its tokens that
//! the lexicon knows:
//!
//! ```text
//! d = (neg(w_1) + ... + neg(w_N)) / N
//! ```
//!
//! where `w_1 .. w_N` are the in-lexicon token occurrences (repeats count
//! once per occurrence). Out-of-vocabulary tokens do not enter `N`. A
//! document with no in-lexicon tokens has no score at all rather than a
//! score of zero.

use std::collections::HashSet;
use std::io::{self, BufRead, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::WordScoreTable;
use crate::numeric::CompensatedSum;
use crate::period::PeriodKey;

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("scores file line {line}: {cause}")]
    Parse { line: usize, cause: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Unicode word tokenizer.
///
/// Tokens are maximal runs of alphabetic characters, with apostrophes kept
/// when they sit between two letters ("don't"). Everything else separates
/// tokens, including the `#` and `@` sigils, so `#vaccine` yields
/// `vaccine`. URLs are dropped whole. With `strip_mentions`, `@user`
/// handles are dropped whole as well, which suits social-media posts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    #[serde(default)]
    pub strip_mentions: bool,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn url_prefix_len(rest: &str) -> Option<usize> {
    const PREFIXES: [&str; 3] = ["https://", "http://", "www."];
    PREFIXES.iter().find_map(|p| rest.get(..p.len()).filter(|head| head.eq_ignore_ascii_case(p)).map(|_| p.len()))
}

impl Tokenizer {
    pub fn social() -> Self {
        Self { strip_mentions: true }
    }

    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let mut tokens = Vec::new();
        self.for_each_token(text, |t| tokens.push(t.to_string()));
        tokens
    }

    /// Streams tokens through `sink` without allocating a vector.
    pub fn for_each_token<F: FnMut(&str)>(&self, text: &str, mut sink: F) {
        let mut current = String::new();
        let mut chars = text.char_indices().peekable();

        while let Some((idx, c)) = chars.next() {
            if c.is_alphabetic() {
                if current.is_empty() {
                    if let Some(len) = url_prefix_len(&text[idx..]) {
                        skip_until_whitespace(&mut chars, idx + len);
                        continue;
                    }
                }
                current.extend(c.to_lowercase());
                continue;
            }
            if is_apostrophe(c) && !current.is_empty() {
                if let Some(&(_, next)) = chars.peek() {
                    if next.is_alphabetic() {
                        current.push('\'');
                        continue;
                    }
                }
            }
            if !current.is_empty() {
                sink(&current);
                current.clear();
            }
            if self.strip_mentions && c == '@' {
                while let Some(&(_, next)) = chars.peek() {
                    if next.is_alphanumeric() || next == '_' {
                        chars.next();
                    } else {
                        break;
                    }
                }
            }
        }
        if !current.is_empty() {
            sink(&current);
        }
    }
}

fn skip_until_whitespace<I>(chars: &mut std::iter::Peekable<I>, from: usize)
where
    I: Iterator<Item = (usize, char)>,
{
    while let Some(&(i, c)) = chars.peek() {
        if i >= from && c.is_whitespace() {
            break;
        }
        chars.next();
    }
}

/// Tokenize with the default options.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

/// Anything with an identifier and text can be scored.
pub trait Scorable {
    fn id(&self) -> &str;
    fn text(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub timestamp: NaiveDate,
    pub text: String,
}

impl Document {
    pub fn new(id: impl Into<String>, timestamp: NaiveDate, text: impl Into<String>) -> Self {
        Self { id: id.into(), timestamp, text: text.into() }
    }
}

impl Scorable for Document {
    fn id(&self) -> &str {
        &self.id
    }
    fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentScore {
    pub doc_id: String,
    /// `None` exactly when no token was found in the lexicon.
    pub d: Option<f64>,
    /// In-lexicon token occurrences.
    pub matched: usize,
    pub total_tokens: usize,
}

pub fn score_document<D: Scorable + ?Sized>(doc: &D, table: &WordScoreTable, tokenizer: &Tokenizer) -> DocumentScore {
    let mut sum = CompensatedSum::new();
    let mut matched = 0usize;
    let mut total = 0usize;
    tokenizer.for_each_token(doc.text(), |token| {
        total += 1;
        if let Some(neg) = table.neg_of_lowercase(token) {
            sum.add(neg);
            matched += 1;
        }
    });
    let d = (matched > 0).then(|| (sum.total() / matched as f64).clamp(0.0, 1.0));
    DocumentScore { doc_id: doc.id().to_string(), d, matched, total_tokens: total }
}

/// Score every document, in input order. Documents are scored in parallel;
/// the result does not depend on scheduling.
pub fn score_corpus<D: Scorable + Sync>(
    docs: &[D],
    table: &WordScoreTable,
    tokenizer: &Tokenizer,
) -> Result<Vec<DocumentScore>, ScoringError> {
    let mut seen = HashSet::with_capacity(docs.len());
    for doc in docs {
        if !seen.insert(doc.id()) {
            return Err(ScoringError::DuplicateDocId(doc.id().to_string()));
        }
    }
    Ok(docs.par_iter().map(|doc| score_document(doc, table, tokenizer)).collect())
}

/// A document score tagged with the period it falls in.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodScore {
    pub period: PeriodKey,
    pub score: DocumentScore,
}

const SCORES_HEADER: &str = "doc_id\tperiod\td\tmatched\ttotal_tokens";

/// Write scores as `doc_id<TAB>period<TAB>d<TAB>matched<TAB>total_tokens`
/// with a header row and `NA` for undefined scores. Values use the shortest
/// representation that reads back to the same `f64`.
pub fn write_scores<W: Write>(mut out: W, rows: &[PeriodScore]) -> io::Result<()> {
    writeln!(out, "{SCORES_HEADER}")?;
    for row in rows {
        let s = &row.score;
        match s.d {
            Some(d) => writeln!(out, "{}\t{}\t{d}\t{}\t{}", s.doc_id, row.period, s.matched, s.total_tokens)?,
            None => writeln!(out, "{}\t{}\tNA\t{}\t{}", s.doc_id, row.period, s.matched, s.total_tokens)?,
        }
    }
    out.flush()
}

pub fn read_scores<R: BufRead>(source: R) -> Result<Vec<PeriodScore>, ScoringError> {
    let mut rows = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (line_no == 1 && line == SCORES_HEADER) {
            continue;
        }
        let parse_err = |cause: String| ScoringError::Parse { line: line_no, cause };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(format!("expected 5 fields, found {}", fields.len())));
        }
        let period: PeriodKey = fields[1].parse().map_err(|e| parse_err(format!("{e}")))?;
        let d = match fields[2] {
            "NA" => None,
            v => Some(v.parse::<f64>().map_err(|_| parse_err(format!("invalid score {v:?}")))?),
        };
        let matched: usize = fields[3].parse().map_err(|_| parse_err("invalid matched count".into()))?;
        let total_tokens: usize = fields[4].parse().map_err(|_| parse_err("invalid token count".into()))?;
        if d.is_none() != (matched == 0) || matched > total_tokens {
            return Err(parse_err("inconsistent score counts".into()));
        }
        rows.push(PeriodScore {
            period,
            score: DocumentScore { doc_id: fields[0].to_string(), d, matched, total_tokens },
        });
    }
    Ok(rows)
}
