//! Repairs for bars the transform cannot handle.
//!
//! * all-zero (suspended) bars are dropped;
//! * open or close equal to the low is nudged up by a small random amount;
//! * open or close equal to the high is nudged down;
//! * one-price bars (limit moves, `o = h = l = c > 0`) first get their high and
//!   the close (limit-up) or open (limit-down) scaled by 1.1, then the two
//!   rules above apply.
//!
//! Nudges are drawn uniformly from `(ε/10, ε] · (high - low)` with
//! `ε = epsilon_fraction`, using a seeded ChaCha8 stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::transform::BOUNDARY_TOL;
use super::{OhlcBar, OhlcSeries, RawBar};
use crate::error::{Error, Result};

pub const LIMIT_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanitizeConfig {
    pub epsilon_fraction: f64,
    pub limit_factor: f64,
    pub rng_seed: u64,
}

impl Default for SanitizeConfig {
    fn default() -> Self {
        SanitizeConfig {
            epsilon_fraction: 0.01,
            limit_factor: LIMIT_FACTOR,
            rng_seed: 0,
        }
    }
}

impl SanitizeConfig {
    pub fn with_seed(rng_seed: u64) -> Self {
        SanitizeConfig {
            rng_seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon_fraction > 0.0 && self.epsilon_fraction <= 0.05) {
            return Err(Error::invalid(format!(
                "epsilon_fraction must lie in (0, 0.05], got {}",
                self.epsilon_fraction
            )));
        }
        if self.limit_factor != LIMIT_FACTOR {
            return Err(Error::invalid("limit_factor is fixed at 1.1"));
        }
        Ok(())
    }
}

/// Counts of what sanitization changed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SanitizeReport {
    pub removed_suspended: usize,
    pub limit_up: usize,
    pub limit_down: usize,
    pub perturbed_open: usize,
    pub perturbed_close: usize,
}

impl SanitizeReport {
    pub fn modified(&self) -> bool {
        *self != SanitizeReport::default()
    }
}

pub fn sanitize_series(raw: &[RawBar], cfg: &SanitizeConfig) -> Result<OhlcSeries> {
    sanitize_with_report(raw, cfg).map(|(s, _)| s)
}

enum Edge {
    Low,
    High,
    Interior,
}

fn edge(price: f64, low: f64, high: f64) -> Edge {
    let pos = (price - low) / (high - low);
    if pos < BOUNDARY_TOL {
        Edge::Low
    } else if pos > 1.0 - BOUNDARY_TOL {
        Edge::High
    } else {
        Edge::Interior
    }
}

pub fn sanitize_with_report(
    raw: &[RawBar],
    cfg: &SanitizeConfig,
) -> Result<(OhlcSeries, SanitizeReport)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut report = SanitizeReport::default();
    let mut bars = Vec::with_capacity(raw.len());
    let mut labels = Vec::with_capacity(raw.len());
    let mut prev_close: Option<f64> = None;

    for (row, r) in raw.iter().enumerate() {
        let row = row + 1;
        let bad = |reason: &str| Error::InvalidBar {
            row,
            reason: reason.to_string(),
        };
        let prices = [r.open, r.high, r.low, r.close];
        if prices.iter().any(|p| !p.is_finite()) {
            return Err(bad("non-finite price"));
        }
        if prices.iter().any(|p| *p < 0.0) {
            return Err(bad("negative price"));
        }
        if prices.iter().all(|p| *p == 0.0) {
            report.removed_suspended += 1;
            continue;
        }
        if r.high < r.low {
            return Err(bad("high < low"));
        }
        if r.low <= 0.0 {
            return Err(bad("zero low with non-zero prices"));
        }
        if r.open < r.low || r.open > r.high || r.close < r.low || r.close > r.high {
            return Err(bad("open or close outside [low, high]"));
        }

        let (mut open, mut high, low, mut close) = (r.open, r.high, r.low, r.close);
        if high == low {
            // One-price bar. Direction is judged against the previous close;
            // a leading limit bar counts as limit-up.
            let up = prev_close.is_none_or(|pc| low >= pc);
            high *= cfg.limit_factor;
            if up {
                close *= cfg.limit_factor;
                report.limit_up += 1;
            } else {
                open *= cfg.limit_factor;
                report.limit_down += 1;
            }
        }

        let range = high - low;
        let lo = cfg.epsilon_fraction / 10.0;
        let nudge = |rng: &mut ChaCha8Rng| {
            // (lo, ε]: `random::<f64>()` is in [0, 1), so 1 - u is in (0, 1].
            let u = 1.0 - rng.random::<f64>();
            (lo + (cfg.epsilon_fraction - lo) * u) * range
        };
        match edge(open, low, high) {
            Edge::Low => {
                open = low + nudge(&mut rng);
                report.perturbed_open += 1;
            }
            Edge::High => {
                open = high - nudge(&mut rng);
                report.perturbed_open += 1;
            }
            Edge::Interior => {}
        }
        match edge(close, low, high) {
            Edge::Low => {
                close = low + nudge(&mut rng);
                report.perturbed_close += 1;
            }
            Edge::High => {
                close = high - nudge(&mut rng);
                report.perturbed_close += 1;
            }
            Edge::Interior => {}
        }

        prev_close = Some(r.close);
        bars.push(OhlcBar {
            t: bars.len() + 1,
            open,
            high,
            low,
            close,
        });
        labels.push(r.label.clone());
    }

    if bars.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok((OhlcSeries::new(bars, labels)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ohlc::transform;
    use proptest::prelude::*;

    fn raw(o: f64, h: f64, l: f64, c: f64) -> RawBar {
        RawBar::new("d", o, h, l, c)
    }

    #[test]
    fn suspended_bars_removed_and_reindexed() {
        let input = vec![
            raw(2.0, 3.0, 1.0, 2.5),
            raw(0.0, 0.0, 0.0, 0.0),
            raw(2.0, 3.0, 1.0, 2.5),
        ];
        let (s, rep) = sanitize_with_report(&input, &SanitizeConfig::default()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(rep.removed_suspended, 1);
        assert_eq!(s.bars()[1].t, 2);
    }

    #[test]
    fn open_on_low_is_nudged() {
        let s = sanitize_series(&[raw(1.0, 3.0, 1.0, 2.0)], &SanitizeConfig::default()).unwrap();
        let b = s.bars()[0];
        assert!(b.open > 1.0 && b.open <= 1.0 + 0.01 * 2.0, "{b:?}");
        assert!(b.open >= 1.0 + 0.001 * 2.0);
        assert_eq!((b.high, b.low, b.close), (3.0, 1.0, 2.0));
        assert!(transform(&b).is_ok());
    }

    #[test]
    fn close_on_high_is_nudged_down() {
        let s = sanitize_series(&[raw(2.0, 3.0, 1.0, 3.0)], &SanitizeConfig::default()).unwrap();
        let b = s.bars()[0];
        assert!(b.close < 3.0 && b.close >= 3.0 - 0.02);
    }

    #[test]
    fn interior_bar_unchanged() {
        let s = sanitize_series(&[raw(2.0, 3.0, 1.0, 2.5)], &SanitizeConfig::default()).unwrap();
        assert_eq!(s.bars()[0].prices(), [2.0, 3.0, 1.0, 2.5]);
    }

    #[test]
    fn limit_up_and_down() {
        let input = vec![
            raw(10.0, 10.0, 10.0, 10.0),
            raw(9.0, 9.0, 9.0, 9.0),
        ];
        let (s, rep) = sanitize_with_report(&input, &SanitizeConfig::default()).unwrap();
        assert_eq!((rep.limit_up, rep.limit_down), (1, 1));
        let up = s.bars()[0];
        assert!((up.high - 11.0).abs() < 1e-12);
        assert_eq!(up.low, 10.0);
        assert!(up.open > 10.0 && up.open < 10.02);
        assert!(up.close < 11.0 && up.close > 10.98);
        let down = s.bars()[1];
        assert!((down.high - 9.9).abs() < 1e-12);
        assert!(down.open < 9.9 && down.open > 9.88);
        assert!(down.close > 9.0 && down.close < 9.02);
        for b in s.bars() {
            assert!(transform(b).is_ok());
        }
    }

    #[test]
    fn corrupt_rows_rejected() {
        let cfg = SanitizeConfig::default();
        assert!(matches!(
            sanitize_series(&[raw(2.0, 1.0, 3.0, 2.0)], &cfg),
            Err(Error::InvalidBar { row: 1, .. })
        ));
        assert!(sanitize_series(&[raw(-1.0, 3.0, 1.0, 2.0)], &cfg).is_err());
        assert!(sanitize_series(&[raw(4.0, 3.0, 1.0, 2.0)], &cfg).is_err());
        assert!(matches!(
            sanitize_series(&[raw(0.0, 0.0, 0.0, 0.0)], &cfg),
            Err(Error::EmptySeries)
        ));
        assert!(sanitize_series(&[], &cfg).is_err());
    }

    #[test]
    fn config_validation() {
        let cfg = SanitizeConfig {
            limit_factor: 1.2,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        for epsilon_fraction in [0.06, 0.0] {
            let cfg = SanitizeConfig {
                epsilon_fraction,
                ..Default::default()
            };
            assert!(cfg.validate().is_err());
        }
    }

    fn arb_raw() -> impl Strategy<Value = RawBar> {
        (0.5f64..100.0, 0.0f64..5.0, 0usize..4, 0usize..4, 0.0f64..1.0, 0.0f64..1.0).prop_map(
            |(low, width, ok, ck, u, v)| {
                let high = low + width;
                let pick = |k: usize, w: f64| match k {
                    0 => low,
                    1 => high,
                    _ => low + w * width,
                };
                RawBar::new("x", pick(ok, u), high, low, pick(ck, v))
            },
        )
    }

    proptest! {
        #[test]
        fn output_is_valid_and_idempotent(rows in prop::collection::vec(arb_raw(), 1..40), seed in any::<u64>()) {
            let cfg = SanitizeConfig::with_seed(seed);
            let once = sanitize_series(&rows, &cfg).unwrap();
            for b in once.bars() {
                prop_assert!(b.is_valid());
                prop_assert!(transform(b).is_ok(), "{:?}", b);
            }
            let twice = sanitize_series(&once.to_raw(), &cfg).unwrap();
            prop_assert_eq!(&once, &twice);
            let again = sanitize_series(&rows, &cfg).unwrap();
            prop_assert_eq!(once, again);
        }
    }
}
