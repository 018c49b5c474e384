//! First differencing and its inverse.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `[y_1 - y_0, y_2 - y_1, ...]`.
pub fn difference(y: &[f64]) -> Result<Vec<f64>> {
    if y.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("difference input"));
    }
    Ok(y.windows(2).map(|w| w[1] - w[0]).collect())
}

/// Cumulative sums of `dy` anchored at `last`.
pub fn integrate(last: f64, dy: &[f64]) -> Result<Vec<f64>> {
    if !last.is_finite() || dy.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("integrate input"));
    }
    Ok(dy
        .iter()
        .scan(last, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect())
}

/// Differences the flagged columns; unflagged columns keep their levels.
/// The result has one row fewer than `y`, aligned on periods `1..T`.
pub fn difference_columns(y: &DMatrix<f64>, flags: &[bool]) -> DMatrix<f64> {
    let t = y.nrows();
    DMatrix::from_fn(t.saturating_sub(1), y.ncols(), |i, j| {
        if flags[j] {
            y[(i + 1, j)] - y[(i, j)]
        } else {
            y[(i + 1, j)]
        }
    })
}

/// Undoes [`difference_columns`] on a forecast path, starting from the last level row.
pub fn integrate_columns(path: &DMatrix<f64>, last_level: &[f64], flags: &[bool]) -> DMatrix<f64> {
    let mut out = path.clone();
    for (j, &flag) in flags.iter().enumerate() {
        if flag {
            let mut acc = last_level[j];
            for i in 0..out.nrows() {
                acc += path[(i, j)];
                out[(i, j)] = acc;
            }
        }
    }
    out
}
