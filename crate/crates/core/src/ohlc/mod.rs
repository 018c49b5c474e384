//! Constrained OHLC data model.
//!
//! A bar is valid when `low > 0`, `low < high` and both `open` and `close`
//! lie in the closed interval `[low, high]`. The transform in [`transform`]
//! additionally needs open and close strictly inside the interval, which
//! [`sanitize`] arranges for real-market data.

pub mod io;
pub mod sanitize;
pub mod transform;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sanitize::{sanitize_series, sanitize_with_report, SanitizeConfig, SanitizeReport};
pub use transform::{inverse_transform, logistic, logit, transform, TransformedVector};

/// One period of open, high, low and close prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    /// 1-based period index.
    pub t: usize,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

/// Which OHLC constraint a bar breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Violation {
    NonPositiveLow,
    HighNotAboveLow,
    OpenOutOfRange,
    CloseOutOfRange,
    NonFinite,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            Violation::NonPositiveLow => "low <= 0",
            Violation::HighNotAboveLow => "high <= low",
            Violation::OpenOutOfRange => "open outside [low, high]",
            Violation::CloseOutOfRange => "close outside [low, high]",
            Violation::NonFinite => "non-finite price",
        };
        f.write_str(msg)
    }
}

impl OhlcBar {
    pub fn new(t: usize, open: f64, high: f64, low: f64, close: f64) -> Result<Self> {
        let bar = OhlcBar {
            t,
            open,
            high,
            low,
            close,
        };
        match bar.violation() {
            None => Ok(bar),
            Some(v) => Err(Error::InvalidBar {
                row: t,
                reason: v.to_string(),
            }),
        }
    }

    /// First broken constraint, if any. Comparisons are exact.
    pub fn violation(&self) -> Option<Violation> {
        let prices = [self.open, self.high, self.low, self.close];
        if prices.iter().any(|p| !p.is_finite()) {
            return Some(Violation::NonFinite);
        }
        if self.low <= 0.0 {
            return Some(Violation::NonPositiveLow);
        }
        if self.low >= self.high {
            return Some(Violation::HighNotAboveLow);
        }
        if self.open < self.low || self.open > self.high {
            return Some(Violation::OpenOutOfRange);
        }
        if self.close < self.low || self.close > self.high {
            return Some(Violation::CloseOutOfRange);
        }
        None
    }

    pub fn is_valid(&self) -> bool {
        self.violation().is_none()
    }

    pub fn range(&self) -> f64 {
        self.high - self.low
    }

    /// Position of the open within `[low, high]`.
    pub fn open_position(&self) -> f64 {
        (self.open - self.low) / self.range()
    }

    /// Position of the close within `[low, high]`.
    pub fn close_position(&self) -> f64 {
        (self.close - self.low) / self.range()
    }

    pub fn prices(&self) -> [f64; 4] {
        [self.open, self.high, self.low, self.close]
    }
}

/// A bar as read from a data file, before any validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawBar {
    pub label: String,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

impl RawBar {
    pub fn new(label: impl Into<String>, open: f64, high: f64, low: f64, close: f64) -> Self {
        RawBar {
            label: label.into(),
            open,
            high,
            low,
            close,
        }
    }
}

impl From<(&OhlcBar, &str)> for RawBar {
    fn from((bar, label): (&OhlcBar, &str)) -> Self {
        RawBar::new(label, bar.open, bar.high, bar.low, bar.close)
    }
}

/// An ordered series of valid bars indexed `1..=len` with opaque labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcSeries {
    bars: Vec<OhlcBar>,
    labels: Vec<String>,
}

impl OhlcSeries {
    /// Builds a series, re-indexing the bars `1..=n`. Every bar must be valid.
    pub fn new(bars: Vec<OhlcBar>, labels: Vec<String>) -> Result<Self> {
        if bars.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} bars but {} labels",
                bars.len(),
                labels.len()
            )));
        }
        let mut bars = bars;
        for (i, bar) in bars.iter_mut().enumerate() {
            bar.t = i + 1;
            if let Some(v) = bar.violation() {
                return Err(Error::InvalidBar {
                    row: i + 1,
                    reason: v.to_string(),
                });
            }
        }
        Ok(OhlcSeries { bars, labels })
    }

    /// Builds a series labelled with the period index.
    pub fn from_bars(bars: Vec<OhlcBar>) -> Result<Self> {
        let labels = (1..=bars.len()).map(|t| t.to_string()).collect();
        Self::new(bars, labels)
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    /// Converts back to unvalidated rows, e.g. to re-run sanitization.
    pub fn to_raw(&self) -> Vec<RawBar> {
        self.bars
            .iter()
            .zip(&self.labels)
            .map(|(b, l)| RawBar::from((b, l.as_str())))
            .collect()
    }

    /// Sub-series over `range` (0-based), re-indexed from 1.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start > range.end {
            return Err(Error::invalid(format!(
                "slice {range:?} out of bounds for series of length {}",
                self.len()
            )));
        }
        Self::new(
            self.bars[range.clone()].to_vec(),
            self.labels[range].to_vec(),
        )
    }
}
