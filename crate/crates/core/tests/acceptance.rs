//! Acceptance checks. Prints one PASS, FAIL or SKIP line per criterion and
//! exits non-zero if any check fails. Dataset-backed criteria skip when the
//! data are not configured (see `tests/datasets.rs` for the variables).

mod common;

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use dissent::corpus::{sample_per_period, CorpusRecord};
use dissent::rng::DEFAULT_SEED;
use dissent::scoring::{score_document, Document, Tokenizer};
use dissent::timeseries::{
    normalize_series, ols, prais_winsten, student_t_two_sided_p, PraisWinstenOptions, Series, SeriesPoint, StatsError,
};
use dissent::{Granularity, PeriodKey};
use rand::Rng;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, outcome: Outcome) -> Outcome {
    match outcome {
        Pass(d) if elapsed > limit => Fail(format!("{d}; took {elapsed:.2?}, limit {limit:?}")),
        other => other,
    }
}

fn scoring_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(0xACCE);
    let tokenizer = Tokenizer::default();
    let date = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..1000 {
        let case = common::scoring_case(&mut rng);
        let got = score_document(&Document::new("d", date, case.text.as_str()), &case.table, &tokenizer);
        let (matched, d) = common::brute_force_score(&case.lexicon, &case.tokens);
        if got.matched != matched {
            return Fail(format!("case {i}: matched {} vs {matched}", got.matched));
        }
        match (got.d, d) {
            (Some(a), Some(b)) => worst = worst.max((a - b).abs()),
            (None, None) => {}
            other => return Fail(format!("case {i}: {other:?}")),
        }
    }
    let outcome = check(worst < 1e-12, format!("1000 cases, max |Δd| = {worst:.1e}"));
    within(start.elapsed(), Duration::from_secs(5), outcome)
}

fn describe(reports: &[(dissent::lexicon::AggregationPolicy, dissent::eval::EvalReport)]) -> String {
    reports.iter().map(|(p, r)| format!("{p}: f1 {:.3} acc {:.3}", r.f1, r.accuracy)).collect::<Vec<_>>().join("; ")
}

fn imdb() -> Outcome {
    let start = Instant::now();
    let Some(reports) = common::imdb_reports() else {
        return Skip(format!("set {} and {} to run", common::SWN_ENV, common::IMDB_ENV));
    };
    let (policy, best) = common::closest(&reports, 0.65, 0.65);
    let ok = (0.60..=0.70).contains(&best.f1) && (0.60..=0.70).contains(&best.accuracy);
    within(start.elapsed(), Duration::from_secs(600), check(ok, format!("closest {policy} [{}]", describe(&reports))))
}

fn ukp() -> Outcome {
    let start = Instant::now();
    let Some(reports) = common::ukp_reports() else {
        return Skip(format!("set {} and {} to run", common::SWN_ENV, common::UKP_ENV));
    };
    let (policy, best) = common::closest(&reports, 0.58, 0.53);
    let ok = (0.53..=0.63).contains(&best.f1) && (0.48..=0.58).contains(&best.accuracy);
    within(start.elapsed(), Duration::from_secs(120), check(ok, format!("closest {policy} [{}]", describe(&reports))))
}

fn prais_winsten_zero_autocorrelation() -> Outcome {
    let x: Vec<f64> = (0..8).map(f64::from).collect();
    let eps = [1.0, 0.0, -1.0, 0.0, -1.0, 0.0, 1.0, 0.0];
    let y: Vec<f64> = x.iter().zip(eps).map(|(x, e)| 2.0 * x + e).collect();
    let fit = prais_winsten(&x, &y, PraisWinstenOptions::default()).unwrap();
    let plain = ols(&x, &y).unwrap();
    let diff = (fit.slope - plain.slope).abs();
    check(fit.rho == 0.0 && diff < 1e-9, format!("rho {}, |slope - ols| = {diff:.1e}", fit.rho))
}

fn prais_winsten_ar1() -> Outcome {
    let opts = PraisWinstenOptions::default();

    let (x, y) = common::ar1_series(0, 200, 0.6, 0.0, 1.0);
    let ours = prais_winsten(&x, &y, opts).unwrap();
    let reference = common::reference_prais_winsten(&x, &y, opts.tol, opts.max_iter);
    let gaps = [
        (ours.rho - reference.rho).abs(),
        (ours.slope - reference.slope).abs(),
        (ours.intercept - reference.intercept).abs(),
        (ours.slope_se - reference.slope_se).abs(),
    ];
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    if worst >= 1e-6 {
        return Fail(format!("reference GLS differs by {worst:.1e}"));
    }

    let start = Instant::now();
    let fits: Vec<_> = (0..50)
        .map(|seed| {
            let (x, y) = common::ar1_series(seed, 200, 0.6, 0.0, 1.0);
            prais_winsten(&x, &y, opts).unwrap()
        })
        .collect();
    let elapsed = start.elapsed();
    let mean_rho = fits.iter().map(|f| f.rho).sum::<f64>() / 50.0;
    let mean_slope = fits.iter().map(|f| f.slope).sum::<f64>() / 50.0;
    let ok = (0.45..=0.75).contains(&mean_rho) && (0.9..=1.1).contains(&mean_slope);
    let detail = format!("mean rho {mean_rho:.4}, mean slope {mean_slope:.4}, reference gap {worst:.1e}");
    within(elapsed, Duration::from_secs(5), check(ok, detail))
}

fn student_t() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (df, t) in [(10, 2.2281), (30, 2.0423), (58, 2.0017)] {
        let p = student_t_two_sided_p(t, df);
        ok &= (p - 0.05).abs() <= 2e-4;
        ok &= (p - common::reference_p(t, df as f64)).abs() < 1e-10;
        parts.push(format!("df {df}: p {p:.6}"));
    }
    check(ok, parts.join(", "))
}

fn yearly(values: &[f64]) -> Series {
    let points = values
        .iter()
        .enumerate()
        .map(|(i, &value)| SeriesPoint { period: PeriodKey::year(1950 + i as i32), value, n: 1 })
        .collect();
    Series::new(Granularity::Year, points).unwrap()
}

fn normalization() -> Outcome {
    let mut rng = common::rng(0x0A11);
    let start = Instant::now();
    for i in 0..200 {
        let len = rng.random_range(2..=80);
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
        let out: Vec<f64> = normalize_series(&yearly(&values)).unwrap().points.iter().map(|p| p.value).collect();
        let argmax = |v: &[f64]| (0..v.len()).fold(0, |b, j| if v[j] > v[b] { j } else { b });
        let argmin = |v: &[f64]| (0..v.len()).fold(0, |b, j| if v[j] < v[b] { j } else { b });
        if out[argmin(&values)] != 0.0 || out[argmax(&values)] != 1.0 {
            return Fail(format!("series {i}: endpoints not mapped to 0 and 1"));
        }
        if argmax(&values) != argmax(&out) {
            return Fail(format!("series {i}: argmax moved"));
        }
        for a in 0..len {
            for b in 0..len {
                if (values[a] < values[b]) != (out[a] < out[b]) {
                    return Fail(format!("series {i}: ranks changed"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if !matches!(normalize_series(&yearly(&[0.4; 6])), Err(StatsError::DegenerateSeries)) {
        return Fail("constant series accepted".into());
    }
    within(elapsed, Duration::from_secs(1), Pass("200 series; constant series rejected".into()))
}

fn affine_invariance() -> Outcome {
    let mut rng = common::rng(0xAFF1);
    let opts = PraisWinstenOptions::default();
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let n = rng.random_range(12..=70);
        let (_, noise) = common::ar1_series(seed, n, rng.random_range(-0.5..0.8), 0.0, 0.0);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..5.0)).collect();
        let beta = rng.random_range(-1.0..1.0);
        let y: Vec<f64> = x.iter().zip(&noise).map(|(x, e)| 10.0 + beta * x + e).collect();
        let raw = prais_winsten(&x, &y, opts).unwrap();
        let norm = prais_winsten(&common::min_max(&x), &common::min_max(&y), opts).unwrap();
        worst = worst.max((raw.p_value - norm.p_value).abs());
    }
    check(worst < 1e-9, format!("100 pairs, max |Δp| = {worst:.1e}"))
}

fn nyt() -> Outcome {
    let Some(f) = common::nyt_findings() else {
        return Skip(format!(
            "set {}, {} and {} to run",
            common::SWN_ENV,
            common::NYT_CORPUS_ENV,
            common::NYT_SERIES_ENV
        ));
    };
    let ok = f.p_value < 0.05 && f.argmax_year == 2022 && f.mean_2006_2022 > f.mean_1950_2005;
    check(
        ok,
        format!(
            "p {:.4}, argmax {}, mean 2006-2022 {:.3} vs 1950-2005 {:.3}",
            f.p_value, f.argmax_year, f.mean_2006_2022, f.mean_1950_2005
        ),
    )
}

const LEXICON: &str = "\
a\t1\t0\t0.75\tbad#1 awful#1\tof poor quality
a\t2\t0.25\t0.5\tbad#2\tharmful
n\t3\t0\t0.5\tdoubt#1\tuncertainty
a\t4\t0.625\t0\tgood#1\thaving desirable qualities
";

fn determinism() -> Outcome {
    let records: Vec<CorpusRecord> = (0..20)
        .map(|i| CorpusRecord {
            id: format!("m0-{i:03}"),
            timestamp: "2021-01-10".parse().unwrap(),
            text: "t".into(),
            gold_label: None,
        })
        .collect();
    let ids: Vec<String> =
        sample_per_period(records, 5, DEFAULT_SEED, Granularity::Month).into_iter().map(|r| r.id).collect();
    if ids != ["m0-000", "m0-004", "m0-007", "m0-008", "m0-010"] {
        return Fail(format!("sample for seed 0x5EED changed: {ids:?}"));
    }

    let dir = tempfile::TempDir::new().unwrap();
    let lexicon = dir.path().join("swn.txt");
    fs::write(&lexicon, LEXICON).unwrap();
    let mut corpus = String::from("id\ttimestamp\ttext\n");
    let mut rng = common::rng(99);
    for i in 0..600 {
        let words: Vec<&str> =
            (0..12).map(|_| ["bad", "awful", "doubt", "good", "plain", "day"][rng.random_range(0..6)]).collect();
        corpus.push_str(&format!("doc{i:04}\t{}-{:02}-01\t{}\n", 1990 + i % 15, 1 + i % 12, words.join(" ")));
    }
    let corpus_path = dir.path().join("corpus.tsv");
    fs::write(&corpus_path, corpus).unwrap();

    let run = |name: &str| -> Result<Vec<Vec<u8>>, String> {
        let out_dir = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_dissent"))
            .arg("pipeline")
            .arg("--corpus")
            .arg(&corpus_path)
            .arg("--lexicon")
            .arg(&lexicon)
            .args(["--sample-n", "25", "--plot-data", "--out-dir"])
            .arg(&out_dir)
            .env_remove("DISSENT_CONFIG")
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        ["scores.tsv", "aggregate.tsv", "series.tsv", "plot.tsv"]
            .iter()
            .map(|f| fs::read(out_dir.join(f)).map_err(|e| e.to_string()))
            .collect()
    };
    match (run("first"), run("second")) {
        (Ok(a), Ok(b)) => check(a == b, "two pipeline runs byte-identical; 0x5EED sample frozen".into()),
        (Err(e), _) | (_, Err(e)) => Fail(format!("pipeline failed: {e}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1  scoring matches brute-force oracle", scoring_oracle),
        ("2  IMDB median split", imdb),
        ("3  UKP median split", ukp),
        ("4a Prais-Winsten with zero autocorrelation", prais_winsten_zero_autocorrelation),
        ("4b Prais-Winsten on AR(1) data", prais_winsten_ar1),
        ("5  Student-t critical values", student_t),
        ("6  normalization invariants", normalization),
        ("7  affine invariance of p", affine_invariance),
        ("8  NYT letters findings", nyt),
        ("9  determinism", determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("{tag} {name}: {detail} ({secs:.2}s)");
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
