//! Disagreement measurement for longitudinal text corpora.
//!
//! A document's disagreement score is the mean negative-sentiment score of
//! the words it shares with a SentiWordNet-style lexicon. Per-period means
//! form a yearly or monthly series, which is min-max normalized and can be
//! regressed on an external series (for example the share of
//! misinformation per period) with Prais-Winsten AR(1) errors. The
//! scorer itself can be validated as a median-split classifier against
//! labeled corpora.
//!
//! ```
//! use dissent::lexicon::{parse_sentiwordnet, build_word_table, AggregationPolicy};
//! use dissent::scoring::{score_document, Document, Tokenizer};
//!
//! let swn = "a\t1\t0\t0.75\tbleak#1\tgloomy\nn\t2\t0.5\t0\tday#1\ta period\n";
//! let records = parse_sentiwordnet(swn.as_bytes()).unwrap();
//! let table = build_word_table(&records, AggregationPolicy::MeanAllSenses).unwrap();
//!
//! let doc = Document::new("d1", "2021-03-04".parse().unwrap(), "A bleak day!");
//! let score = score_document(&doc, &table, &Tokenizer::default());
//! assert_eq!(score.matched, 2);
//! assert_eq!(score.d, Some(0.375));
//! ```
//!
//! The guide under `book/` walks through each stage; its code listings are
//! compiled as doc-tests of this crate.

pub mod cli;
pub mod corpus;
pub mod eval;
pub mod lexicon;
pub mod numeric;
pub mod period;
pub mod rng;
pub mod scoring;
pub mod timeseries;

pub use period::{Granularity, PeriodKey};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    struct Readme;
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/lexicon.md")]
    struct Lexicon;
    #[doc = include_str!("../../../book/src/scoring.md")]
    struct Scoring;
    #[doc = include_str!("../../../book/src/corpus.md")]
    struct Corpus;
    #[doc = include_str!("../../../book/src/aggregation.md")]
    struct Aggregation;
    #[doc = include_str!("../../../book/src/prais_winsten.md")]
    struct PraisWinsten;
    #[doc = include_str!("../../../book/src/evaluation.md")]
    struct Evaluation;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
