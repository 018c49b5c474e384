//! VAR(p) estimation, forecasting and AIC lag selection.
//!
//! `Y_t = α + A_1 Y_{t-1} + ... + A_p Y_{t-p} + w_t`, fitted by least squares
//! on the stacked design `Z_t = [1, Y_{t-1}', ..., Y_{t-p}']`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, serde_dvec, serde_rows, serde_rows_vec};

pub const MAX_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarModel {
    pub k: usize,
    pub p: usize,
    #[serde(with = "serde_dvec")]
    pub alpha: DVector<f64>,
    /// `A_1..A_p`, each `K x K`.
    #[serde(with = "serde_rows_vec")]
    pub a: Vec<DMatrix<f64>>,
    /// `(T - p) x K` in-sample residuals (fewer rows when fitted on a trimmed sample).
    #[serde(with = "serde_rows")]
    pub residuals: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub residual_cov: DMatrix<f64>,
}

/// Forecasts in transformed space; row `h - 1` holds the `h`-step forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPath {
    /// Row index of the last in-sample observation.
    pub origin: usize,
    pub horizon: usize,
    #[serde(with = "serde_rows")]
    pub values: DMatrix<f64>,
}

impl ForecastPath {
    pub fn step(&self, h: usize) -> Vec<f64> {
        self.values.row(h - 1).iter().copied().collect()
    }
}

/// Stacked design and targets for rows `start..T` (requires `start >= p`).
pub(crate) fn design(y: &DMatrix<f64>, p: usize, start: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let (t, k) = (y.nrows(), y.ncols());
    let n = t - start;
    let z = DMatrix::from_fn(n, 1 + k * p, |i, c| {
        if c == 0 {
            1.0
        } else {
            let lag = (c - 1) / k + 1;
            y[(start + i - lag, (c - 1) % k)]
        }
    });
    let target = y.rows(start, n).into_owned();
    (z, target)
}

fn check_input(y: &DMatrix<f64>, p: usize) -> Result<()> {
    let k = y.ncols();
    if !(1..=MAX_DIM).contains(&k) {
        return Err(Error::invalid(format!("VAR dimension must be 1..={MAX_DIM}, got {k}")));
    }
    if p == 0 {
        return Err(Error::invalid("lag order must be at least 1"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("VAR input"));
    }
    Ok(())
}

fn fit_from(y: &DMatrix<f64>, p: usize, start: usize) -> Result<VarModel> {
    let k = y.ncols();
    let (z, target) = design(y, p, start);
    let b = lstsq(&z, &target, "VAR regressors")?;
    let residuals = &target - &z * &b;
    let dof = z.nrows() as f64 - z.ncols() as f64;
    let mut cov = residuals.transpose() * &residuals / dof;
    cov = (&cov + cov.transpose()) * 0.5;
    let alpha = b.row(0).transpose();
    let a = (0..p)
        .map(|j| b.rows(1 + j * k, k).transpose())
        .collect();
    Ok(VarModel {
        k,
        p,
        alpha,
        a,
        residuals,
        residual_cov: cov,
    })
}

/// Least-squares VAR(p) fit on all `T - p` usable rows of the `T x K` series.
pub fn fit_var(y: &DMatrix<f64>, p: usize) -> Result<VarModel> {
    check_input(y, p)?;
    let needed = y.ncols() * p + p + 2;
    if y.nrows() < needed {
        return Err(Error::TooShort {
            needed,
            got: y.nrows(),
        });
    }
    fit_from(y, p, p)
}

/// Runs `Y_{t+h} = α + Σ A_j Y_{t+h-j}` forward from the end of `history`.
pub(crate) fn recurse(
    alpha: &DVector<f64>,
    a: &[DMatrix<f64>],
    history: &DMatrix<f64>,
    m: usize,
) -> Result<ForecastPath> {
    let p = a.len();
    let k = alpha.len();
    if m == 0 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    if history.ncols() != k {
        return Err(Error::invalid(format!(
            "history has {} columns, model has {k}",
            history.ncols()
        )));
    }
    if history.nrows() < p {
        return Err(Error::TooShort {
            needed: p,
            got: history.nrows(),
        });
    }
    let tail = history.rows(history.nrows() - p, p);
    if tail.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forecast history"));
    }
    // buf holds the last p rows followed by the forecasts.
    let mut buf = DMatrix::zeros(p + m, k);
    buf.rows_mut(0, p).copy_from(&tail);
    for h in 0..m {
        let mut next = alpha.clone();
        for (j, aj) in a.iter().enumerate() {
            next += aj * buf.row(p + h - 1 - j).transpose();
        }
        buf.row_mut(p + h).copy_from(&next.transpose());
    }
    let values = buf.rows(p, m).into_owned();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forecast path"));
    }
    Ok(ForecastPath {
        origin: history.nrows() - 1,
        horizon: m,
        values,
    })
}

/// `m`-step forecast from the last `p` rows of `history`.
pub fn forecast_var(model: &VarModel, history: &DMatrix<f64>, m: usize) -> Result<ForecastPath> {
    recurse(&model.alpha, &model.a, history, m)
}

/// Pooled-residual AIC: `ln(Σ û² / n) + 2 p K² / n`, with `n` residual rows.
pub fn aic_from_residuals(residuals: &DMatrix<f64>, p: usize) -> f64 {
    let n = residuals.nrows() as f64;
    let k = residuals.ncols() as f64;
    (residuals.norm_squared() / n).ln() + 2.0 * p as f64 * k * k / n
}

/// Largest sensible lag for a `t`-row, `k`-column series.
pub fn default_p_max(t: usize, k: usize) -> usize {
    let mut p_max = 8.min(t.saturating_sub(1) / (k + 1)).max(1);
    while p_max > 1 && t <= (k + 1) * p_max + 5 {
        p_max -= 1;
    }
    p_max
}

/// AIC for each `p` in `1..=p_max` on the common sample (rows `p_max..T`).
/// `None` marks candidates whose design is rank deficient.
pub fn aic_table(y: &DMatrix<f64>, p_max: usize) -> Result<Vec<Option<f64>>> {
    check_input(y, p_max.max(1))?;
    if p_max == 0 {
        return Err(Error::invalid("p_max must be at least 1"));
    }
    let needed = y.ncols() * p_max + p_max + 6;
    if y.nrows() < needed {
        return Err(Error::TooShort {
            needed,
            got: y.nrows(),
        });
    }
    (1..=p_max)
        .map(|p| match fit_from(y, p, p_max) {
            Ok(m) => Ok(Some(aic_from_residuals(&m.residuals, p))),
            Err(Error::RankDeficient(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

/// Lag order in `1..=p_max` minimising AIC; ties go to the smaller lag.
pub fn select_lag_aic(y: &DMatrix<f64>, p_max: usize) -> Result<usize> {
    let table = aic_table(y, p_max)?;
    let mut best: Option<(usize, f64)> = None;
    for (i, aic) in table.iter().enumerate() {
        if let Some(v) = *aic {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i + 1, v));
            }
        }
    }
    best.map(|(p, _)| p)
        .ok_or(Error::RankDeficient("every candidate lag order"))
}
