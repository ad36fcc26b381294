//! Period series: aggregation of document scores, min-max normalization,
//! alignment of two series, and Prais-Winsten regression between them.

mod regression;
mod student_t;

pub use regression::{
    ols, prais_winsten, prais_winsten_aligned, prais_winsten_fixed_rho, OlsFit, PraisWinstenFit, PraisWinstenOptions,
    TransformedFit,
};
pub use student_t::{ln_gamma, regularized_incomplete_beta, student_t_two_sided_p};

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::numeric::compensated_sum;
use crate::period::{Granularity, PeriodKey};
use crate::scoring::PeriodScore;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("no document has a defined score")]
    NoDefinedScores,
    #[error("series is constant or has fewer than two points; min-max normalization is undefined")]
    DegenerateSeries,
    #[error("only {found} aligned points; at least {required} are needed")]
    TooFewPoints { found: usize, required: usize },
    #[error("regressor is constant")]
    ConstantRegressor,
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("period {period} does not have {expected} granularity")]
    GranularityMismatch { period: PeriodKey, expected: Granularity },
    #[error("series periods must be strictly increasing ({0} follows {1})")]
    UnorderedSeries(PeriodKey, PeriodKey),
    #[error("series file line {line}: {cause}")]
    Parse { line: usize, cause: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl StatsError {
    /// Errors caused by statistically degenerate input rather than by
    /// malformed files.
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            StatsError::NoDefinedScores
                | StatsError::DegenerateSeries
                | StatsError::TooFewPoints { .. }
                | StatsError::ConstantRegressor
        )
    }
}

/// Minimum number of aligned points for a Prais-Winsten fit.
pub const MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub period: PeriodKey,
    pub value: f64,
    pub n: u64,
}

/// A generic per-period series, strictly increasing by period.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    granularity: Granularity,
    points: Vec<SeriesPoint>,
}

impl Series {
    pub fn new(granularity: Granularity, points: Vec<SeriesPoint>) -> Result<Self, StatsError> {
        for p in &points {
            if p.period.granularity() != granularity {
                return Err(StatsError::GranularityMismatch { period: p.period, expected: granularity });
            }
        }
        for w in points.windows(2) {
            if w[1].period <= w[0].period {
                return Err(StatsError::UnorderedSeries(w[1].period, w[0].period));
            }
        }
        Ok(Self { granularity, points })
    }

    pub fn granularity(&self) -> Granularity {
        self.granularity
    }

    pub fn points(&self) -> &[SeriesPoint] {
        &self.points
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatedPoint {
    pub period: PeriodKey,
    pub mean_d: f64,
    pub n_defined: u64,
    pub n_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedSeries {
    pub granularity: Granularity,
    pub points: Vec<AggregatedPoint>,
}

impl AggregatedSeries {
    /// The per-period means, with `n` set to the number of defined scores.
    pub fn to_series(&self) -> Series {
        Series {
            granularity: self.granularity,
            points: self
                .points
                .iter()
                .map(|p| SeriesPoint { period: p.period, value: p.mean_d, n: p.n_defined })
                .collect(),
        }
    }
}

/// Result of [`aggregate`]: the series plus the periods that had documents
/// but no defined score.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregation {
    pub series: AggregatedSeries,
    pub empty_periods: Vec<PeriodKey>,
}

/// Mean disagreement per period.
///
/// Undefined scores count toward `n_total` only. Within a period, scores are
/// summed in doc-id order with compensated summation, so the mean does not
/// depend on input order. Monthly keys are folded into years when
/// `granularity` is yearly.
pub fn aggregate(scores: &[PeriodScore], granularity: Granularity) -> Result<Aggregation, StatsError> {
    let mut by_period: BTreeMap<PeriodKey, Vec<(&str, Option<f64>)>> = BTreeMap::new();
    for s in scores {
        let period = s
            .period
            .coarsen(granularity)
            .ok_or(StatsError::GranularityMismatch { period: s.period, expected: granularity })?;
        by_period.entry(period).or_default().push((s.score.doc_id.as_str(), s.score.d));
    }

    let mut points = Vec::new();
    let mut empty_periods = Vec::new();
    for (period, mut rows) in by_period {
        rows.sort_by(|a, b| a.0.cmp(b.0).then(a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)));
        let defined: Vec<f64> = rows.iter().filter_map(|r| r.1).collect();
        if defined.is_empty() {
            empty_periods.push(period);
            continue;
        }
        let mean_d = (compensated_sum(defined.iter().copied()) / defined.len() as f64).clamp(0.0, 1.0);
        points.push(AggregatedPoint { period, mean_d, n_defined: defined.len() as u64, n_total: rows.len() as u64 });
    }
    if points.is_empty() {
        return Err(StatsError::NoDefinedScores);
    }
    Ok(Aggregation { series: AggregatedSeries { granularity, points }, empty_periods })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSeries {
    pub granularity: Granularity,
    /// Normalized values in `[0, 1]`, with the source counts.
    pub points: Vec<SeriesPoint>,
    pub source_min: f64,
    pub source_max: f64,
}

impl NormalizedSeries {
    pub fn to_series(&self) -> Series {
        Series { granularity: self.granularity, points: self.points.clone() }
    }
}

/// Min-max normalize the per-period means onto `[0, 1]`.
pub fn normalize(series: &AggregatedSeries) -> Result<NormalizedSeries, StatsError> {
    normalize_series(&series.to_series())
}

pub fn normalize_series(series: &Series) -> Result<NormalizedSeries, StatsError> {
    if series.len() < 2 {
        return Err(StatsError::DegenerateSeries);
    }
    let min = series.points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let max = series.points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    if range.is_nan() || range <= 0.0 || range.is_infinite() {
        return Err(StatsError::DegenerateSeries);
    }
    let points = series.points.iter().map(|p| SeriesPoint { value: (p.value - min) / range, ..*p }).collect();
    Ok(NormalizedSeries { granularity: series.granularity, points, source_min: min, source_max: max })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedPair {
    pub period: PeriodKey,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub pairs: Vec<AlignedPair>,
    /// Consecutive pairs whose periods are not adjacent. The regression still
    /// treats them as neighbours.
    pub gaps: Vec<(PeriodKey, PeriodKey)>,
}

impl Aligned {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.x).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.y).collect()
    }
}

/// Pair up the periods present in both series, in ascending order. `x`
/// comes from `a` and `y` from `b`.
pub fn align(a: &Series, b: &Series) -> Result<Aligned, StatsError> {
    if a.granularity != b.granularity {
        let period = b.points.first().map(|p| p.period).unwrap_or(PeriodKey::year(0));
        return Err(StatsError::GranularityMismatch { period, expected: a.granularity });
    }
    let lookup: BTreeMap<PeriodKey, f64> = b.points.iter().map(|p| (p.period, p.value)).collect();
    let pairs: Vec<AlignedPair> = a
        .points
        .iter()
        .filter_map(|p| lookup.get(&p.period).map(|&y| AlignedPair { period: p.period, x: p.value, y }))
        .collect();
    if pairs.len() < MIN_POINTS {
        return Err(StatsError::TooFewPoints { found: pairs.len(), required: MIN_POINTS });
    }
    let gaps =
        pairs.windows(2).filter(|w| w[0].period.next() != w[1].period).map(|w| (w[0].period, w[1].period)).collect();
    Ok(Aligned { pairs, gaps })
}

const SERIES_HEADER: &str = "period\tvalue\tn";

/// Write `period<TAB>value<TAB>n` rows under a header. Values use the
/// shortest representation that reads back to the same `f64`.
pub fn write_series<W: Write>(mut out: W, series: &Series) -> io::Result<()> {
    writeln!(out, "{SERIES_HEADER}")?;
    for p in &series.points {
        writeln!(out, "{}\t{}\t{}", p.period, p.value, p.n)?;
    }
    out.flush()
}

/// Read a series file. Header rows and blank or `#` comment lines are
/// skipped; the granularity is taken from the first period.
pub fn read_series<R: BufRead>(source: R) -> Result<Series, StatsError> {
    let mut points = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || line.starts_with("period\t") {
            continue;
        }
        let parse_err = |cause: String| StatsError::Parse { line: line_no, cause };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(format!("expected 3 fields, found {}", fields.len())));
        }
        let period: PeriodKey = fields[0].parse().map_err(|e| parse_err(format!("{e}")))?;
        let value: f64 = fields[1]
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| parse_err(format!("invalid value {:?}", fields[1])))?;
        let n: u64 = fields[2].trim().parse().map_err(|_| parse_err(format!("invalid count {:?}", fields[2])))?;
        points.push(SeriesPoint { period, value, n });
    }
    let granularity = points.first().map(|p| p.period.granularity()).unwrap_or(Granularity::Year);
    Series::new(granularity, points)
}
