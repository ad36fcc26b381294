//! Run configuration: a TOML file merged with command-line flags.
//!
//! ```toml
//! lexicon = "SentiWordNet_3.0.0.txt"
//! policy = "mean-all-senses"
//! format = "jsonl"
//! timestamp_field = "created_at"
//! granularity = "month"
//! sample_n = 10000
//! seed = 24301
//! keywords = "builtin:vaccine"
//! output_dir = "out"
//! ```
//!
//! Relative paths are resolved against the directory holding the file.
//! Flags always override file values.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::corpus::{InputFormat, Schema, TimestampFormat};
use crate::lexicon::AggregationPolicy;
use crate::period::Granularity;
use crate::rng::DEFAULT_SEED;
use crate::scoring::Tokenizer;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "DISSENT_CONFIG";

/// Keyword-source value selecting the bundled vaccine list.
pub const BUILTIN_VACCINE: &str = "builtin:vaccine";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub lexicon: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub policy: Option<String>,
    pub strip_mentions: Option<bool>,
    pub format: Option<String>,
    pub delimiter: Option<char>,
    pub id_field: Option<String>,
    pub timestamp_field: Option<String>,
    pub text_field: Option<String>,
    pub label_field: Option<String>,
    pub timestamp_format: Option<String>,
    pub granularity: Option<String>,
    pub sample_n: Option<usize>,
    pub seed: Option<u64>,
    pub keywords: Option<String>,
    pub output_dir: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let mut config: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let rebase = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        rebase(&mut config.lexicon);
        rebase(&mut config.table);
        rebase(&mut config.output_dir);
        if let Some(k) = config.keywords.as_mut() {
            if k != BUILTIN_VACCINE && Path::new(k.as_str()).is_relative() {
                *k = base.join(k.as_str()).display().to_string();
            }
        }
        Ok(config)
    }

    /// The file named by `--config`, else by `$DISSENT_CONFIG`, else empty.
    pub fn discover(explicit: Option<&Path>) -> Result<Self, CliError> {
        match explicit {
            Some(p) => Self::load(p),
            None => match std::env::var_os(CONFIG_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub lexicon_path: Option<PathBuf>,
    pub table_path: Option<PathBuf>,
    pub aggregation_policy: AggregationPolicy,
    pub tokenizer: Tokenizer,
    pub schema: Schema,
    pub granularity: Granularity,
    pub sample_n: Option<usize>,
    pub seed: u64,
    pub keywords: Option<String>,
    pub output_dir: Option<PathBuf>,
}

/// Flag values that can override the file. `None` means "not given".
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lexicon: Option<PathBuf>,
    pub table: Option<PathBuf>,
    pub policy: Option<String>,
    pub strip_mentions: bool,
    pub format: Option<String>,
    pub delimiter: Option<char>,
    pub id_field: Option<String>,
    pub timestamp_field: Option<String>,
    pub text_field: Option<String>,
    pub label_field: Option<String>,
    pub timestamp_format: Option<String>,
    pub granularity: Option<String>,
    pub sample_n: Option<usize>,
    pub seed: Option<u64>,
    pub keywords: Option<String>,
    pub output_dir: Option<PathBuf>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.is_empty())
}

impl RunConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> Result<Self, CliError> {
        let policy = match flags.policy.or(file.policy) {
            Some(p) => p.parse().map_err(|e| CliError::input(format!("{e}")))?,
            None => AggregationPolicy::default(),
        };
        let mut format: InputFormat = match flags.format.or(file.format) {
            Some(f) => f.parse().map_err(CliError::input)?,
            None => InputFormat::default(),
        };
        if let Some(d) = flags.delimiter.or(file.delimiter) {
            if !d.is_ascii() {
                return Err(CliError::input(format!("delimiter {d:?} must be ASCII")));
            }
            if let InputFormat::Delimited { delimiter } = &mut format {
                *delimiter = d as u8;
            }
        }
        let defaults = Schema::default();
        let id_field = match flags.id_field.or(file.id_field) {
            Some(f) => non_empty(Some(f)),
            None => defaults.id_field,
        };
        let schema = Schema {
            format,
            id_field,
            timestamp_field: flags.timestamp_field.or(file.timestamp_field).unwrap_or(defaults.timestamp_field),
            text_field: flags.text_field.or(file.text_field).unwrap_or(defaults.text_field),
            label_field: non_empty(flags.label_field.or(file.label_field)),
            timestamp_format: flags
                .timestamp_format
                .or(file.timestamp_format)
                .map(|f| f.parse::<TimestampFormat>().unwrap_or_default())
                .unwrap_or_default(),
        };
        let granularity = match flags.granularity.or(file.granularity) {
            Some(g) => g.parse().map_err(|e| CliError::input(format!("{e}")))?,
            None => Granularity::Year,
        };
        let sample_n = flags.sample_n.or(file.sample_n);
        if sample_n == Some(0) {
            return Err(CliError::input("sample size must be positive"));
        }
        Ok(Self {
            lexicon_path: flags.lexicon.or(file.lexicon),
            table_path: flags.table.or(file.table),
            aggregation_policy: policy,
            tokenizer: Tokenizer { strip_mentions: flags.strip_mentions || file.strip_mentions.unwrap_or(false) },
            schema,
            granularity,
            sample_n,
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            keywords: flags.keywords.or(file.keywords),
            output_dir: flags.output_dir.or(file.output_dir),
        })
    }
}
