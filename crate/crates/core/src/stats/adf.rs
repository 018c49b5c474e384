//! Augmented Dickey-Fuller test with an intercept and no trend.
//!
//! Regression: `Δy_t = c + γ y_{t-1} + Σ_{i=1..k} φ_i Δy_{t-i} + e_t`.
//! The augmentation order `k` minimises AIC over `0..=floor(12 (T/100)^{1/4})`
//! on a common sample, then the chosen order is refit on all usable rows.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::tables::{adf_critical_value, adf_p_value};
use super::Significance;
use crate::error::{Error, Result};
use crate::linalg::lstsq;

pub const MIN_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-statistic on the lagged level.
    pub statistic: f64,
    /// Approximate asymptotic p-value.
    pub p_value: f64,
    pub lag_used: usize,
    /// Rows in the final regression.
    pub nobs: usize,
    pub critical_value: f64,
    pub significance: Significance,
    pub reject_unit_root: bool,
    /// Set when the series (or its differences) has no variation to test.
    pub degenerate: bool,
}

impl AdfResult {
    fn degenerate(significance: Significance, nobs: usize) -> Self {
        AdfResult {
            statistic: 0.0,
            p_value: 1.0,
            lag_used: 0,
            nobs,
            critical_value: adf_critical_value(significance, nobs.max(1)),
            significance,
            reject_unit_root: false,
            degenerate: true,
        }
    }

    pub fn is_stationary(&self) -> bool {
        self.reject_unit_root
    }
}

struct Fit {
    sse: f64,
    nobs: usize,
    ncoef: usize,
    tstat: Option<f64>,
}

/// Regression with `lag` augmentation terms using dy rows `start..`.
fn fit(y: &[f64], dy: &[f64], lag: usize, start: usize) -> Option<Fit> {
    let nobs = dy.len() - start;
    let ncoef = 2 + lag;
    if nobs <= ncoef {
        return None;
    }
    let x = DMatrix::from_fn(nobs, ncoef, |r, c| {
        let i = start + r;
        match c {
            0 => 1.0,
            1 => y[i],
            _ => dy[i - (c - 1)],
        }
    });
    let rhs = DMatrix::from_fn(nobs, 1, |r, _| dy[start + r]);
    let beta = lstsq(&x, &rhs, "adf regression").ok()?;
    let resid = &rhs - &x * &beta;
    let sse = resid.norm_squared();
    let dof = (nobs - ncoef) as f64;
    let sigma2 = sse / dof;
    let tstat = (x.transpose() * &x)
        .cholesky()
        .map(|c| c.inverse())
        .and_then(|inv| {
            let se = (sigma2 * inv[(1, 1)]).sqrt();
            (se > 0.0 && se.is_finite()).then(|| beta[(1, 0)] / se)
        });
    Some(Fit {
        sse,
        nobs,
        ncoef,
        tstat,
    })
}

fn schwert_max_lag(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

fn validate(series: &[f64]) -> Result<()> {
    if series.len() < MIN_LEN {
        return Err(Error::TooShort {
            needed: MIN_LEN,
            got: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("adf series"));
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    let (lo, hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    hi - lo <= 1e-14 * hi.abs().max(lo.abs()).max(1.0)
}

/// ADF test with AIC-selected augmentation order.
pub fn adf_test(series: &[f64], significance: Significance) -> Result<AdfResult> {
    validate(series)?;
    let n = series.len();
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    if is_constant(series) || is_constant(&dy) {
        return Ok(AdfResult::degenerate(significance, n - 1));
    }
    let max_lag = schwert_max_lag(n).min((n / 2).saturating_sub(2));

    let mut best: Option<(usize, f64)> = None;
    for lag in 0..=max_lag {
        let Some(f) = fit(series, &dy, lag, max_lag) else {
            continue;
        };
        let nobs = f.nobs as f64;
        let aic = nobs * (f.sse / nobs).ln() + 2.0 * f.ncoef as f64;
        if best.is_none_or(|(_, b)| aic < b) {
            best = Some((lag, aic));
        }
    }
    let lag = best.map(|(l, _)| l).unwrap_or(0);
    adf_test_fixed_lag(series, lag, significance)
}

/// ADF test with a given augmentation order.
pub fn adf_test_fixed_lag(series: &[f64], lag: usize, significance: Significance) -> Result<AdfResult> {
    validate(series)?;
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    if is_constant(series) || is_constant(&dy) {
        return Ok(AdfResult::degenerate(significance, dy.len()));
    }
    if lag + 3 >= dy.len() {
        return Err(Error::TooShort {
            needed: lag + 5,
            got: series.len(),
        });
    }
    let Some(f) = fit(series, &dy, lag, lag) else {
        return Ok(AdfResult::degenerate(significance, dy.len() - lag));
    };
    let Some(stat) = f.tstat else {
        return Ok(AdfResult::degenerate(significance, f.nobs));
    };
    let critical_value = adf_critical_value(significance, f.nobs);
    Ok(AdfResult {
        statistic: stat,
        p_value: adf_p_value(stat),
        lag_used: lag,
        nobs: f.nobs,
        critical_value,
        significance,
        reject_unit_root: stat < critical_value,
        degenerate: false,
    })
}
