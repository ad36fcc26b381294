//! Aggregation buckets: calendar years or calendar months.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    Year,
    Month,
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Year => "year",
            Granularity::Month => "month",
        })
    }
}

impl FromStr for Granularity {
    type Err = PeriodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "year" | "yearly" => Ok(Granularity::Year),
            "month" | "monthly" => Ok(Granularity::Month),
            _ => Err(PeriodError::UnknownGranularity(s.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PeriodError {
    #[error("unknown granularity {0:?} (expected year or month)")]
    UnknownGranularity(String),
    #[error("invalid period {0:?} (expected YYYY or YYYY-MM)")]
    InvalidPeriod(String),
}

/// A year, or a month within a year.
///
/// `month` is present exactly when the key has monthly granularity. Keys of
/// the same granularity order chronologically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PeriodKey {
    year: i32,
    month: Option<u8>,
}

impl PeriodKey {
    pub fn year(year: i32) -> Self {
        Self { year, month: None }
    }

    /// Panics unless `month` is in `1..=12`.
    pub fn month(year: i32, month: u8) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Self { year, month: Some(month) }
    }

    pub fn of_date(date: NaiveDate, granularity: Granularity) -> Self {
        match granularity {
            Granularity::Year => Self::year(date.year()),
            Granularity::Month => Self::month(date.year(), date.month() as u8),
        }
    }

    pub fn granularity(&self) -> Granularity {
        if self.month.is_some() {
            Granularity::Month
        } else {
            Granularity::Year
        }
    }

    pub fn year_value(&self) -> i32 {
        self.year
    }

    pub fn month_value(&self) -> Option<u8> {
        self.month
    }

    /// The period immediately following this one.
    pub fn next(&self) -> Self {
        match self.month {
            None => Self::year(self.year + 1),
            Some(12) => Self::month(self.year + 1, 1),
            Some(m) => Self::month(self.year, m + 1),
        }
    }

    /// Re-bucket at `granularity`; `None` when asked to refine a yearly key.
    pub fn coarsen(&self, granularity: Granularity) -> Option<Self> {
        match (self.granularity(), granularity) {
            (g, target) if g == target => Some(*self),
            (Granularity::Month, Granularity::Year) => Some(Self::year(self.year)),
            _ => None,
        }
    }
}

impl fmt::Display for PeriodKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.month {
            None => write!(f, "{:04}", self.year),
            Some(m) => write!(f, "{:04}-{:02}", self.year, m),
        }
    }
}

impl FromStr for PeriodKey {
    type Err = PeriodError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PeriodError::InvalidPeriod(s.to_string());
        let s_trim = s.trim();
        let digits = |p: &str| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit());
        match s_trim.split_once('-') {
            None if s_trim.len() == 4 && digits(s_trim) => Ok(Self::year(s_trim.parse().map_err(|_| bad())?)),
            Some((y, m)) if y.len() == 4 && digits(y) && m.len() == 2 && digits(m) => {
                let month: u8 = m.parse().map_err(|_| bad())?;
                if !(1..=12).contains(&month) {
                    return Err(bad());
                }
                Ok(Self::month(y.parse().map_err(|_| bad())?, month))
            }
            _ => Err(bad()),
        }
    }
}
