//! Log/logit map between constrained bars and unconstrained 4-vectors.
//!
//! Forward:
//!
//! ```text
//! y1 = ln(low)
//! y2 = ln(high - low)
//! y3 = logit((open  - low) / (high - low))
//! y4 = logit((close - low) / (high - low))
//! ```
//!
//! The inverse rebuilds `low = e^y1`, `high = low + e^y2`, and places open and
//! close at their logistic positions inside `[low, high]`. Any finite vector
//! maps to a valid bar.

use serde::{Deserialize, Serialize};

use super::OhlcBar;
use crate::error::{Error, Result};

/// Positions within this distance of 0 or 1 are treated as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Largest |y| accepted by [`inverse_transform`]; `e^709.78` is the f64 limit.
pub const MAX_EXPONENT: f64 = 700.0;

/// The unconstrained image of one bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformedVector {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
    pub y4: f64,
}

impl TransformedVector {
    pub fn new(y1: f64, y2: f64, y3: f64, y4: f64) -> Self {
        TransformedVector { y1, y2, y3, y4 }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.y1, self.y2, self.y3, self.y4]
    }

    pub fn from_slice(y: &[f64]) -> Result<Self> {
        match y {
            [a, b, c, d] => Ok(TransformedVector::new(*a, *b, *c, *d)),
            _ => Err(Error::invalid(format!(
                "transformed vector needs 4 components, got {}",
                y.len()
            ))),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Logistic function `e^y / (1 + e^y)`, evaluated without overflow.
pub fn logistic(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

fn interior_position(pos: f64, what: &'static str) -> Result<f64> {
    if !pos.is_finite() || !(BOUNDARY_TOL..=1.0 - BOUNDARY_TOL).contains(&pos) {
        return Err(Error::BoundaryBar(what));
    }
    Ok(pos)
}

pub fn transform(bar: &OhlcBar) -> Result<TransformedVector> {
    if !bar.prices().iter().all(|p| p.is_finite()) {
        return Err(Error::NonFinite("bar"));
    }
    if bar.low <= 0.0 {
        return Err(Error::BoundaryBar("low <= 0"));
    }
    let range = bar.high - bar.low;
    if range <= 0.0 {
        return Err(Error::BoundaryBar("high == low"));
    }
    let lambda_open = interior_position((bar.open - bar.low) / range, "open on low/high")?;
    let lambda_close = interior_position((bar.close - bar.low) / range, "close on low/high")?;
    Ok(TransformedVector {
        y1: bar.low.ln(),
        y2: range.ln(),
        y3: logit(lambda_open),
        y4: logit(lambda_close),
    })
}

/// Maps a transformed vector back to a bar with period index `t`.
///
/// The result satisfies the OHLC constraints exactly: `low + λ·range` is
/// monotone in λ under round-to-nearest, so λ ∈ [0, 1] keeps open and close
/// inside `[low, low + range]`. When `range` is below half an ulp of `low`
/// the high is bumped to the next representable value.
pub fn inverse_transform(vec: &TransformedVector, t: usize) -> Result<OhlcBar> {
    let y = vec.to_array();
    for (i, v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite("transformed vector"));
        }
        if i < 2 && v.abs() > MAX_EXPONENT {
            return Err(Error::Overflow {
                index: i + 1,
                value: *v,
            });
        }
    }
    let low = vec.y1.exp();
    let range = vec.y2.exp();
    let mut high = low + range;
    if high <= low {
        high = low.next_up();
    }
    let range = high - low;
    let lambda_open = logistic(vec.y3);
    let lambda_close = logistic(vec.y4);
    let open = (low + lambda_open * range).min(high);
    let close = (low + lambda_close * range).min(high);
    Ok(OhlcBar {
        t,
        open,
        high,
        low,
        close,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bar(o: f64, h: f64, l: f64, c: f64) -> OhlcBar {
        OhlcBar::new(1, o, h, l, c).unwrap()
    }

    #[test]
    fn midpoint_bar_maps_to_origin() {
        let y = transform(&bar(1.5, 2.0, 1.0, 1.5)).unwrap();
        assert_eq!(y, TransformedVector::new(0.0, 0.0, 0.0, 0.0));
        let y = transform(&bar(2.0, 3.0, 1.0, 2.0)).unwrap();
        assert_eq!(y.y1, 0.0);
        assert!((y.y2 - 2f64.ln()).abs() < 1e-15);
        assert_eq!((y.y3, y.y4), (0.0, 0.0));
    }

    #[test]
    fn asymmetric_positions() {
        // λ_open = 0.75, λ_close = 0.25
        let y = transform(&bar(2.5, 3.0, 1.0, 1.5)).unwrap();
        assert!((y.y2 - 2f64.ln()).abs() < 1e-15);
        assert!((y.y3 - 3f64.ln()).abs() < 1e-15);
        assert!((y.y4 + 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn boundary_bars_rejected() {
        assert!(matches!(
            transform(&bar(1.0, 3.0, 1.0, 2.0)),
            Err(Error::BoundaryBar(_))
        ));
        assert!(matches!(
            transform(&bar(2.0, 3.0, 1.0, 3.0)),
            Err(Error::BoundaryBar(_))
        ));
        let flat = OhlcBar {
            t: 1,
            open: 2.0,
            high: 2.0,
            low: 2.0,
            close: 2.0,
        };
        assert!(matches!(transform(&flat), Err(Error::BoundaryBar(_))));
    }

    #[test]
    fn inverse_of_origin() {
        let b = inverse_transform(&TransformedVector::new(0.0, 0.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(b.prices(), [1.5, 2.0, 1.0, 1.5]);
    }

    #[test]
    fn inverse_sigmoid_limit() {
        let b = inverse_transform(&TransformedVector::new(0.0, 2f64.ln(), -100.0, 0.0), 1).unwrap();
        assert!((b.open - 1.0).abs() < 1e-10);
        assert!((b.close - 2.0).abs() < 1e-12);
        assert!((b.high - 3.0).abs() < 1e-12);
        assert_eq!(b.low, 1.0);
    }

    #[test]
    fn overflow_guard() {
        let err = inverse_transform(&TransformedVector::new(701.0, 0.0, 0.0, 0.0), 1).unwrap_err();
        assert!(matches!(err, Error::Overflow { index: 1, .. }));
        let err = inverse_transform(&TransformedVector::new(0.0, -800.0, 0.0, 0.0), 1).unwrap_err();
        assert!(matches!(err, Error::Overflow { index: 2, .. }));
        assert!(inverse_transform(&TransformedVector::new(0.0, f64::NAN, 0.0, 0.0), 1).is_err());
        // the logit components may be arbitrarily large
        assert!(inverse_transform(&TransformedVector::new(0.0, 0.0, 1e6, -1e6), 1)
            .unwrap()
            .is_valid());
    }

    #[test]
    fn tiny_range_still_strict() {
        let b = inverse_transform(&TransformedVector::new(50.0, -50.0, 3.0, -3.0), 1).unwrap();
        assert!(b.is_valid(), "{b:?}");
    }

    proptest! {
        #[test]
        fn roundtrip(low in 1e-3f64..1e5, width in 1e-4f64..10.0, lo in 0.001f64..0.999, lc in 0.001f64..0.999) {
            let high = low * (1.0 + width);
            let range = high - low;
            let b = OhlcBar { t: 1, open: low + lo * range, high, low, close: low + lc * range };
            prop_assume!(b.open > low && b.open < high && b.close > low && b.close < high);
            let back = inverse_transform(&transform(&b).unwrap(), 1).unwrap();
            for (x, y) in b.prices().iter().zip(back.prices()) {
                prop_assert!(((x - y) / x).abs() < 1e-10);
            }
        }

        #[test]
        fn any_finite_vector_is_valid(y1 in -50f64..50.0, y2 in -50f64..50.0, y3 in -50f64..50.0, y4 in -50f64..50.0) {
            let b = inverse_transform(&TransformedVector::new(y1, y2, y3, y4), 1).unwrap();
            prop_assert!(b.is_valid(), "{:?}", b);
        }

        #[test]
        fn open_increases_with_y3(y1 in -5f64..5.0, y2 in -5f64..5.0, y3 in -10f64..10.0, dy in 0.01f64..2.0) {
            let a = inverse_transform(&TransformedVector::new(y1, y2, y3, 0.0), 1).unwrap();
            let b = inverse_transform(&TransformedVector::new(y1, y2, y3 + dy, 0.0), 1).unwrap();
            prop_assert!(b.open > a.open);
        }

        #[test]
        fn all_prices_increase_with_y1(y1 in -5f64..5.0, y2 in -5f64..5.0, y3 in -10f64..10.0, y4 in -10f64..10.0, dy in 0.01f64..2.0) {
            let a = inverse_transform(&TransformedVector::new(y1, y2, y3, y4), 1).unwrap();
            let b = inverse_transform(&TransformedVector::new(y1 + dy, y2, y3, y4), 1).unwrap();
            for (pa, pb) in a.prices().iter().zip(b.prices()) {
                prop_assert!(pb > *pa);
            }
        }
    }
}
