//! Vector error-correction model of rank `r`.
//!
//! `ΔY_t = α + Σ_{j=1}^{p-1} Γ_j ΔY_{t-j} + γ β' Y_{t-p} + w_t`.
//! The cointegrating vectors `β` come from the Johansen eigen-decomposition;
//! `α`, `Γ_j` and the loading `γ` are then estimated by least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::var::{recurse, ForecastPath};
use crate::error::{Error, Result};
use crate::linalg::{lstsq, serde_dvec, serde_rows, serde_rows_vec};
use crate::stats::johansen::{eigen, normalize_columns, JohansenDeterministic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecModel {
    pub k: usize,
    pub p: usize,
    pub r: usize,
    #[serde(with = "serde_dvec")]
    pub alpha: DVector<f64>,
    /// `Γ_1..Γ_{p-1}`; empty when `p = 1`.
    #[serde(with = "serde_rows_vec")]
    pub gamma: Vec<DMatrix<f64>>,
    /// `K x r` adjustment coefficients.
    #[serde(with = "serde_rows")]
    pub loading: DMatrix<f64>,
    /// `K x r` cointegrating vectors.
    #[serde(with = "serde_rows")]
    pub beta: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub residuals: DMatrix<f64>,
    #[serde(with = "serde_rows")]
    pub residual_cov: DMatrix<f64>,
}

impl VecModel {
    /// Long-run impact matrix `Π = γ β'`.
    pub fn pi(&self) -> DMatrix<f64> {
        &self.loading * self.beta.transpose()
    }

    /// Equivalent levels representation `(α, [A_1..A_p])`.
    pub fn to_levels_var(&self) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let k = self.k;
        let pi = self.pi();
        let eye = DMatrix::<f64>::identity(k, k);
        let a = if self.p == 1 {
            vec![eye + pi]
        } else {
            let g = &self.gamma;
            let mut a = Vec::with_capacity(self.p);
            a.push(&eye + &g[0]);
            for j in 1..self.p - 1 {
                a.push(&g[j] - &g[j - 1]);
            }
            a.push(pi - &g[self.p - 2]);
            a
        };
        (self.alpha.clone(), a)
    }
}

/// Fits a VEC with `p` levels lags and cointegration rank `0 < r < K`.
pub fn fit_vec(y: &DMatrix<f64>, p: usize, r: usize) -> Result<VecModel> {
    let k = y.ncols();
    if r == 0 || r >= k {
        return Err(Error::invalid(format!(
            "cointegration rank must satisfy 0 < r < {k}, got {r}"
        )));
    }
    let e = eigen(y, p, JohansenDeterministic::RestrictedConstant)?;
    let mut beta = e.vectors.view((0, 0), (k, r)).into_owned();
    normalize_columns(&mut beta, k);

    let n = y.nrows() - p;
    let short = k * (p - 1);
    let ncol = short + r + 1;
    let x = DMatrix::from_fn(n, ncol, |i, c| {
        let t = p + i;
        if c < short {
            let lag = c / k + 1;
            let j = c % k;
            y[(t - lag, j)] - y[(t - lag - 1, j)]
        } else if c < short + r {
            let col = c - short;
            (0..k).map(|j| beta[(j, col)] * y[(t - p, j)]).sum()
        } else {
            1.0
        }
    });
    let dy = DMatrix::from_fn(n, k, |i, j| y[(p + i, j)] - y[(p + i - 1, j)]);
    let b = lstsq(&x, &dy, "VEC regressors")?;
    let residuals = &dy - &x * &b;
    let dof = n as f64 - ncol as f64;
    if dof <= 0.0 {
        return Err(Error::TooShort {
            needed: ncol + p + 1,
            got: y.nrows(),
        });
    }
    let mut cov = residuals.transpose() * &residuals / dof;
    cov = (&cov + cov.transpose()) * 0.5;

    let gamma = (0..p - 1).map(|j| b.rows(j * k, k).transpose()).collect();
    let loading = b.rows(short, r).transpose();
    let alpha = b.row(short + r).transpose();
    Ok(VecModel {
        k,
        p,
        r,
        alpha,
        gamma,
        loading,
        beta,
        residuals,
        residual_cov: cov,
    })
}

/// `m`-step forecast through the levels-VAR representation.
pub fn forecast_vec(model: &VecModel, history: &DMatrix<f64>, m: usize) -> Result<ForecastPath> {
    let (alpha, a) = model.to_levels_var();
    recurse(&alpha, &a, history, m)
}
