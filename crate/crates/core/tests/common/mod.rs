#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use dissent::lexicon::{table_from_scores, AggregationPolicy, WordScore, WordScoreTable};
use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't', 'u', 'v', 'w',
    'x', 'y', 'z', 'é', 'ü', 'ø',
];

const SEPARATORS: &[&str] = &[" ", ", ", ". ", "! ", "\n", " - ", " (", ") ", " 42 ", "...", "\t", "#", " @ ", "; "];

fn random_word(rng: &mut ChaCha8Rng) -> String {
    loop {
        let len = rng.random_range(1..=8);
        let mut w: String = (0..len).map(|_| *ALPHABET.choose(rng).unwrap()).collect();
        if len >= 3 && rng.random_bool(0.1) {
            let at = rng.random_range(1..len - 1);
            let idx = w.char_indices().nth(at).unwrap().0;
            w.insert(idx, '\'');
        }
        if !w.starts_with("www") && !w.starts_with("http") {
            return w;
        }
    }
}

fn random_case(rng: &mut ChaCha8Rng, word: &str) -> String {
    let mut out = String::new();
    for c in word.chars() {
        if c == '\'' && rng.random_bool(0.5) {
            out.push('\u{2019}');
        } else if rng.random_bool(0.3) {
            out.extend(c.to_uppercase());
        } else {
            out.push(c);
        }
    }
    out
}

/// A random lexicon and a document drawn partly from it, along with the
/// document's token sequence as generated.
pub struct ScoringCase {
    pub lexicon: HashMap<String, f64>,
    pub table: WordScoreTable,
    pub text: String,
    pub tokens: Vec<String>,
}

pub fn scoring_case(rng: &mut ChaCha8Rng) -> ScoringCase {
    let lex_size = rng.random_range(1..=50);
    let mut lexicon = HashMap::new();
    while lexicon.len() < lex_size {
        let neg = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..=1.0) };
        lexicon.insert(random_word(rng), neg);
    }
    let words: Vec<&String> = lexicon.keys().collect();
    let n_tokens = rng.random_range(0..=200);
    let in_lexicon_share = rng.random_range(0.0..=1.0);
    let mut tokens = Vec::with_capacity(n_tokens);
    let mut text = String::new();
    for i in 0..n_tokens {
        let word =
            if rng.random_bool(in_lexicon_share) { (*words.choose(rng).unwrap()).clone() } else { random_word(rng) };
        if i > 0 || rng.random_bool(0.3) {
            text.push_str(SEPARATORS.choose(rng).unwrap());
        }
        text.push_str(&random_case(rng, &word));
        tokens.push(word);
    }
    if rng.random_bool(0.3) {
        text.push_str(SEPARATORS.choose(rng).unwrap());
    }
    let table = table_from_scores(
        lexicon.iter().map(|(w, &neg)| (w.clone(), WordScore { neg, pos: (1.0 - neg) / 2.0, synset_count: 1 })),
        AggregationPolicy::default(),
    );
    ScoringCase { lexicon, table, text, tokens }
}

/// Direct transcription of the score definition: sum the negative scores of
/// the in-lexicon tokens and divide by how many there are.
pub fn brute_force_score(lexicon: &HashMap<String, f64>, tokens: &[String]) -> (usize, Option<f64>) {
    let mut sum = 0.0;
    let mut n = 0;
    for t in tokens {
        if let Some(neg) = lexicon.get(t) {
            sum += neg;
            n += 1;
        }
    }
    (n, if n == 0 { None } else { Some(sum / n as f64) })
}

/// `y_t = intercept + slope * t + u_t` with `u_t` a stationary AR(1) process.
pub fn ar1_series(seed: u64, n: usize, rho: f64, intercept: f64, slope: f64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut u = noise.sample(&mut rng) / (1.0 - rho * rho).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            u = rho * u + noise.sample(&mut rng);
        }
        x.push(t as f64);
        y.push(intercept + slope * t as f64 + u);
    }
    (x, y)
}

pub struct ReferenceFit {
    pub rho: f64,
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
}

/// Generalized least squares with AR(1) correlation `ρ^|i-j|`, weighted by
/// `(1 - ρ²) V⁻¹` so the error variance matches the innovation variance.
pub fn reference_gls(x: &[f64], y: &[f64], rho: f64) -> ReferenceFit {
    let n = x.len();
    let v = DMatrix::from_fn(n, n, |i, j| rho.powi((i as i32 - j as i32).abs()));
    let w = v.try_inverse().expect("correlation matrix is invertible") * (1.0 - rho * rho);
    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let yv = DVector::from_column_slice(y);
    let xtwx = design.transpose() * &w * &design;
    let xtwx_inv = xtwx.try_inverse().expect("design has full rank");
    let beta = &xtwx_inv * design.transpose() * &w * &yv;
    let e = &yv - &design * &beta;
    let ssr = (e.transpose() * &w * &e)[(0, 0)];
    let sigma2 = ssr / (n as f64 - 2.0);
    ReferenceFit { rho, intercept: beta[0], slope: beta[1], slope_se: (sigma2 * xtwx_inv[(1, 1)]).sqrt() }
}

/// Iterated feasible GLS: re-estimate ρ from the lag-one autocorrelation of
/// the residuals until it settles.
pub fn reference_prais_winsten(x: &[f64], y: &[f64], tol: f64, max_iter: usize) -> ReferenceFit {
    let mut fit = reference_gls(x, y, 0.0);
    let mut rho_prev = 0.0;
    for _ in 0..max_iter {
        let e: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - fit.intercept - fit.slope * xi).collect();
        let num: f64 = (1..e.len()).map(|t| e[t] * e[t - 1]).sum();
        let den: f64 = (1..e.len()).map(|t| e[t - 1] * e[t - 1]).sum();
        let rho = (num / den).clamp(-0.999, 0.999);
        fit = reference_gls(x, y, rho);
        if (rho - rho_prev).abs() < tol {
            break;
        }
        rho_prev = rho;
    }
    fit
}

pub fn reference_p(t: f64, df: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    2.0 * StudentsT::new(0.0, 1.0, df).unwrap().cdf(-t.abs())
}

/// A path named by an environment variable, if it is set and exists.
pub fn data_path(var: &str) -> Option<PathBuf> {
    let p = PathBuf::from(std::env::var_os(var)?);
    p.exists().then_some(p)
}

pub const SWN_ENV: &str = "DISSENT_SWN_PATH";
pub const IMDB_ENV: &str = "DISSENT_IMDB_PATH";
pub const UKP_ENV: &str = "DISSENT_UKP_PATH";
pub const NYT_CORPUS_ENV: &str = "DISSENT_NYT_CORPUS";
pub const NYT_SERIES_ENV: &str = "DISSENT_NYT_CONSPIRACY";

pub fn min_max(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values.iter().map(|v| (v - lo) / (hi - lo)).collect()
}

pub fn lexicon_records() -> Option<Vec<dissent::lexicon::SynsetRecord>> {
    let path = data_path(SWN_ENV)?;
    let file = std::io::BufReader::new(std::fs::File::open(path).unwrap());
    Some(dissent::lexicon::parse_sentiwordnet(file).expect("SentiWordNet parses"))
}

/// Median-split reports for every aggregation policy.
pub fn policy_reports(
    records: &[dissent::lexicon::SynsetRecord],
    docs: &[dissent::eval::LabeledDoc],
) -> Vec<(AggregationPolicy, dissent::eval::EvalReport)> {
    AggregationPolicy::ALL
        .iter()
        .map(|&policy| {
            let table = dissent::lexicon::build_word_table(records, policy).unwrap();
            let report = dissent::eval::evaluate_corpus(docs, &table, &dissent::scoring::Tokenizer::default()).unwrap();
            (policy, report)
        })
        .collect()
}

pub fn imdb_reports() -> Option<Vec<(AggregationPolicy, dissent::eval::EvalReport)>> {
    let records = lexicon_records()?;
    let docs = dissent::eval::load_imdb(&data_path(IMDB_ENV)?).unwrap();
    Some(policy_reports(&records, &docs))
}

pub fn ukp_reports() -> Option<Vec<(AggregationPolicy, dissent::eval::EvalReport)>> {
    let records = lexicon_records()?;
    let docs = dissent::eval::load_ukp(&data_path(UKP_ENV)?, &Default::default()).unwrap();
    Some(policy_reports(&records, &docs))
}

/// The report whose metrics lie closest to the targets.
pub fn closest(
    reports: &[(AggregationPolicy, dissent::eval::EvalReport)],
    f1: f64,
    accuracy: f64,
) -> (AggregationPolicy, dissent::eval::EvalReport) {
    reports
        .iter()
        .min_by(|a, b| {
            let da = (a.1.f1 - f1).abs() + (a.1.accuracy - accuracy).abs();
            let db = (b.1.f1 - f1).abs() + (b.1.accuracy - accuracy).abs();
            da.total_cmp(&db)
        })
        .cloned()
        .expect("at least one policy")
}

pub struct NytFindings {
    pub p_value: f64,
    pub argmax_year: i32,
    pub mean_2006_2022: f64,
    pub mean_1950_2005: f64,
}

/// Letters corpus (id, timestamp, text TSV) scored with the default policy,
/// aggregated per year and regressed on the conspiracy-engagement series.
pub fn nyt_findings() -> Option<NytFindings> {
    use dissent::timeseries::{aggregate, align, normalize, prais_winsten_aligned, read_series};
    let records = lexicon_records()?;
    let corpus_path = data_path(NYT_CORPUS_ENV)?;
    let series_path = data_path(NYT_SERIES_ENV)?;
    let table = dissent::lexicon::build_word_table(&records, AggregationPolicy::default()).unwrap();
    let corpus = dissent::corpus::ingest(&corpus_path, &Default::default()).unwrap();
    let scores = dissent::scoring::score_corpus(&corpus, &table, &dissent::scoring::Tokenizer::default()).unwrap();
    let rows: Vec<_> = corpus
        .iter()
        .zip(scores)
        .map(|(r, score)| dissent::scoring::PeriodScore { period: r.period(dissent::Granularity::Year), score })
        .collect();
    let agg = aggregate(&rows, dissent::Granularity::Year).unwrap();
    let norm = normalize(&agg.series).unwrap();
    let external = read_series(std::io::BufReader::new(std::fs::File::open(series_path).unwrap())).unwrap();
    let fit = prais_winsten_aligned(&align(&external, &agg.series.to_series()).unwrap(), Default::default()).unwrap();

    let argmax = norm.points.iter().fold(&norm.points[0], |best, p| if p.value > best.value { p } else { best });
    let mean_over = |lo: i32, hi: i32| {
        let vals: Vec<f64> =
            norm.points.iter().filter(|p| (lo..=hi).contains(&p.period.year_value())).map(|p| p.value).collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    Some(NytFindings {
        p_value: fit.p_value,
        argmax_year: argmax.period.year_value(),
        mean_2006_2022: mean_over(2006, 2022),
        mean_1950_2005: mean_over(1950, 2005),
    })
}
