//! SentiWordNet parsing and the word-level score table.
//!
//! SentiWordNet scores senses (synsets), not words. A word such as "grim"
//! appears in several synsets, each with its own positive and negative
//! score, so the synset records have to be collapsed into one score per word
//! before text can be scored. [`AggregationPolicy`] selects how.
//!
//! The source format is the SentiWordNet 3.0 layout, with tab-separated
//! fields (shown here with spaces):
//!
//! ```text
//! # POS  ID  PosScore  NegScore  SynsetTerms  Gloss
//! a  00001740  0.125  0  able#1  (usually followed by `to') having the necessary means ...
//! ```
//!
//! Malformed lines abort parsing with the offending line number.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack allowed on `pos + neg <= 1` for rounding in the published file.
const SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("malformed lexicon line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("lexicon contains no synset records")]
    EmptyLexicon,
    #[error("unknown aggregation policy {0:?} (expected mean-all-senses, first-sense or rank-weighted)")]
    UnknownPolicy(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl LexiconError {
    fn malformed(line: usize, reason: impl Into<String>) -> Self {
        LexiconError::MalformedLine { line, reason: reason.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosTag {
    Adjective,
    Noun,
    Adverb,
    Verb,
    AdjectiveSatellite,
}

impl PosTag {
    pub fn from_code(code: &str) -> Option<Self> {
        Some(match code {
            "a" => PosTag::Adjective,
            "n" => PosTag::Noun,
            "r" => PosTag::Adverb,
            "v" => PosTag::Verb,
            "s" => PosTag::AdjectiveSatellite,
            _ => return None,
        })
    }

    pub fn code(&self) -> char {
        match self {
            PosTag::Adjective => 'a',
            PosTag::Noun => 'n',
            PosTag::Adverb => 'r',
            PosTag::Verb => 'v',
            PosTag::AdjectiveSatellite => 's',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    /// Lowercased; multiword lemmas keep the source's underscores.
    pub lemma: String,
    pub sense_rank: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynsetRecord {
    pub pos_tag: PosTag,
    pub synset_id: u64,
    pub pos_score: f64,
    pub neg_score: f64,
    pub terms: Vec<Term>,
    pub gloss: String,
}

impl SynsetRecord {
    /// The implicit objectivity score.
    pub fn obj_score(&self) -> f64 {
        1.0 - self.pos_score - self.neg_score
    }
}

/// How synset-level scores are collapsed into word-level scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationPolicy {
    /// Unweighted mean over every synset listing the word, across all POS.
    #[default]
    MeanAllSenses,
    /// Scores of the synset where the word has its lowest sense rank
    /// (rank 1 when present), ties broken by lowest synset id.
    FirstSense,
    /// Mean weighted by `1 / sense_rank`.
    RankWeighted,
}

impl AggregationPolicy {
    pub const ALL: [AggregationPolicy; 3] =
        [AggregationPolicy::MeanAllSenses, AggregationPolicy::FirstSense, AggregationPolicy::RankWeighted];
}

impl fmt::Display for AggregationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationPolicy::MeanAllSenses => "mean-all-senses",
            AggregationPolicy::FirstSense => "first-sense",
            AggregationPolicy::RankWeighted => "rank-weighted",
        })
    }
}

impl FromStr for AggregationPolicy {
    type Err = LexiconError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mean-all-senses" | "mean" => Ok(AggregationPolicy::MeanAllSenses),
            "first-sense" | "first" => Ok(AggregationPolicy::FirstSense),
            "rank-weighted" | "rank" => Ok(AggregationPolicy::RankWeighted),
            _ => Err(LexiconError::UnknownPolicy(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WordScore {
    pub neg: f64,
    pub pos: f64,
    /// Number of synsets listing the word.
    pub synset_count: u32,
}

/// Word-level sentiment scores. Immutable once built; keys are lowercase.
#[derive(Debug, Clone, PartialEq)]
pub struct WordScoreTable {
    entries: HashMap<String, WordScore>,
    policy: AggregationPolicy,
}

impl WordScoreTable {
    pub fn policy(&self) -> AggregationPolicy {
        self.policy
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Case-insensitive lookup.
    pub fn get(&self, word: &str) -> Option<&WordScore> {
        if word.chars().any(char::is_uppercase) {
            self.entries.get(&word.to_lowercase())
        } else {
            self.entries.get(word)
        }
    }

    /// Negative score of an already-lowercased token.
    pub fn neg_of_lowercase(&self, token: &str) -> Option<f64> {
        self.entries.get(token).map(|s| s.neg)
    }

    /// Entries sorted by word.
    pub fn sorted_entries(&self) -> Vec<(&str, &WordScore)> {
        let mut rows: Vec<_> = self.entries.iter().map(|(w, s)| (w.as_str(), s)).collect();
        rows.sort_unstable_by(|a, b| a.0.cmp(b.0));
        rows
    }

    /// Write the compiled table as `word<TAB>neg<TAB>pos<TAB>synset_count`,
    /// sorted by word, scores with six decimals.
    pub fn write_sidecar<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (word, s) in self.sorted_entries() {
            writeln!(out, "{word}\t{:.6}\t{:.6}\t{}", s.neg, s.pos, s.synset_count)?;
        }
        out.flush()
    }

    /// Read a table previously written by [`WordScoreTable::write_sidecar`].
    ///
    /// The sidecar does not record the aggregation policy, so the caller
    /// states it.
    pub fn read_sidecar<R: BufRead>(source: R, policy: AggregationPolicy) -> Result<Self, LexiconError> {
        let mut entries = HashMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(LexiconError::malformed(
                    line_no,
                    format!("expected 4 tab-separated fields, found {}", fields.len()),
                ));
            }
            let word = fields[0];
            if word.is_empty() || word.chars().any(|c| c.is_whitespace() || c.is_uppercase()) {
                return Err(LexiconError::malformed(line_no, format!("invalid word {word:?}")));
            }
            let neg = parse_score(fields[1], line_no, "neg")?;
            let pos = parse_score(fields[2], line_no, "pos")?;
            let synset_count: u32 = fields[3]
                .parse()
                .ok()
                .filter(|&c| c >= 1)
                .ok_or_else(|| LexiconError::malformed(line_no, "synset count must be a positive integer"))?;
            let entry = WordScore { neg, pos, synset_count };
            if entries.insert(word.to_string(), entry).is_some() {
                return Err(LexiconError::malformed(line_no, format!("duplicate word {word:?}")));
            }
        }
        if entries.is_empty() {
            return Err(LexiconError::EmptyLexicon);
        }
        Ok(Self { entries, policy })
    }
}

fn parse_score(field: &str, line_no: usize, name: &str) -> Result<f64, LexiconError> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| LexiconError::malformed(line_no, format!("unparseable {name} score {field:?}")))?;
    if !(0.0..=1.0).contains(&value) {
        return Err(LexiconError::malformed(line_no, format!("{name} score {value} outside [0, 1]")));
    }
    Ok(value)
}

/// Parse SentiWordNet 3.0 text. Comment lines (`#`) and blank lines are
/// skipped; anything else must be a well-formed synset record.
pub fn parse_sentiwordnet<R: BufRead>(source: R) -> Result<Vec<SynsetRecord>, LexiconError> {
    let mut records = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if let Some(record) = parse_line(&line, idx + 1)? {
            records.push(record);
        }
    }
    Ok(records)
}

fn parse_line(line: &str, line_no: usize) -> Result<Option<SynsetRecord>, LexiconError> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.starts_with('#') || line.trim().is_empty() {
        return Ok(None);
    }
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() != 6 {
        return Err(LexiconError::malformed(
            line_no,
            format!("expected 6 tab-separated fields, found {}", fields.len()),
        ));
    }
    let pos_tag = PosTag::from_code(fields[0].trim())
        .ok_or_else(|| LexiconError::malformed(line_no, format!("unknown POS tag {:?}", fields[0])))?;
    let synset_id: u64 = fields[1]
        .trim()
        .parse()
        .map_err(|_| LexiconError::malformed(line_no, format!("invalid synset id {:?}", fields[1])))?;
    let pos_score = parse_score(fields[2], line_no, "positive")?;
    let neg_score = parse_score(fields[3], line_no, "negative")?;
    if pos_score + neg_score > 1.0 + SUM_TOLERANCE {
        return Err(LexiconError::malformed(
            line_no,
            format!("positive + negative = {} exceeds 1", pos_score + neg_score),
        ));
    }
    let mut terms = Vec::new();
    for raw in fields[4].split(' ').filter(|t| !t.is_empty()) {
        let (lemma, rank) = raw
            .rsplit_once('#')
            .ok_or_else(|| LexiconError::malformed(line_no, format!("term {raw:?} lacks '#<rank>'")))?;
        let sense_rank: u32 = rank
            .parse()
            .ok()
            .filter(|&r| r >= 1)
            .ok_or_else(|| LexiconError::malformed(line_no, format!("invalid sense rank in {raw:?}")))?;
        if lemma.is_empty() {
            return Err(LexiconError::malformed(line_no, format!("empty lemma in {raw:?}")));
        }
        terms.push(Term { lemma: lemma.to_lowercase(), sense_rank });
    }
    if terms.is_empty() {
        return Err(LexiconError::malformed(line_no, "no synset terms"));
    }
    Ok(Some(SynsetRecord { pos_tag, synset_id, pos_score, neg_score, terms, gloss: fields[5].to_string() }))
}

/// Collapse synset records into one score per distinct lemma.
pub fn build_word_table(records: &[SynsetRecord], policy: AggregationPolicy) -> Result<WordScoreTable, LexiconError> {
    if records.is_empty() {
        return Err(LexiconError::EmptyLexicon);
    }

    // Every (record, term) pair that mentions a lemma, in input order.
    let mut senses: HashMap<&str, Vec<(&SynsetRecord, u32)>> = HashMap::new();
    for record in records {
        for term in &record.terms {
            senses.entry(term.lemma.as_str()).or_default().push((record, term.sense_rank));
        }
    }

    let entries = senses
        .into_iter()
        .map(|(lemma, occurrences)| {
            let synset_count = occurrences.len() as u32;
            let (neg, pos) = match policy {
                AggregationPolicy::MeanAllSenses => {
                    let n = occurrences.len() as f64;
                    let neg = crate::numeric::compensated_sum(occurrences.iter().map(|(r, _)| r.neg_score));
                    let pos = crate::numeric::compensated_sum(occurrences.iter().map(|(r, _)| r.pos_score));
                    (neg / n, pos / n)
                }
                AggregationPolicy::FirstSense => {
                    let (r, _) = occurrences
                        .iter()
                        .min_by_key(|(r, rank)| (*rank, r.synset_id, r.pos_tag))
                        .expect("lemma has at least one sense");
                    (r.neg_score, r.pos_score)
                }
                AggregationPolicy::RankWeighted => {
                    let weight = |rank: u32| 1.0 / rank as f64;
                    let total = crate::numeric::compensated_sum(occurrences.iter().map(|(_, k)| weight(*k)));
                    let neg =
                        crate::numeric::compensated_sum(occurrences.iter().map(|(r, k)| weight(*k) * r.neg_score));
                    let pos =
                        crate::numeric::compensated_sum(occurrences.iter().map(|(r, k)| weight(*k) * r.pos_score));
                    (neg / total, pos / total)
                }
            };
            // Division can land a hair outside the range of its inputs.
            let clamp = |v: f64| v.clamp(0.0, 1.0);
            (lemma.to_string(), WordScore { neg: clamp(neg), pos: clamp(pos), synset_count })
        })
        .collect();

    Ok(WordScoreTable { entries, policy })
}

/// Build a table directly from word-level scores, e.g. for fixtures or
/// lexicons that are already word-level. Words are lowercased; later
/// duplicates overwrite earlier ones.
pub fn table_from_scores<I, S>(scores: I, policy: AggregationPolicy) -> WordScoreTable
where
    I: IntoIterator<Item = (S, WordScore)>,
    S: AsRef<str>,
{
    let entries = scores.into_iter().map(|(w, s)| (w.as_ref().to_lowercase(), s)).collect();
    WordScoreTable { entries, policy }
}
