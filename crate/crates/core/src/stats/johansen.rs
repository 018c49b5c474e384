//! Johansen trace test for the cointegration rank.
//!
//! With `p` levels lags the error-correction form is
//! `ΔY_t = Σ_{j<p} Γ_j ΔY_{t-j} + Π Y_{t-p} + c + w_t`. Both `ΔY_t` and the
//! lagged level are regressed on the lagged differences, and the squared
//! canonical correlations of the two residual sets solve
//! `|λ S11 - S10 S00⁻¹ S01| = 0`. The trace statistic for `rank <= r0` is
//! `-n Σ_{i>r0} ln(1 - λ_i)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::tables::trace_critical_value;
use super::Significance;
use crate::error::{Error, Result};
use crate::linalg::{lstsq, serde_rows};

pub const MAX_DIM: usize = 12;

/// Where the constant enters the error-correction model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JohansenDeterministic {
    /// Constant restricted to the cointegrating space (no linear trend in levels).
    #[default]
    RestrictedConstant,
    /// Unrestricted constant (allows a drift in levels).
    UnrestrictedConstant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohansenResult {
    /// Squared canonical correlations, descending.
    pub eigenvalues: Vec<f64>,
    /// Indexed by hypothesised rank `r0 = 0..K`.
    pub trace_statistics: Vec<f64>,
    pub critical_values: Vec<f64>,
    pub selected_rank: usize,
    pub significance: Significance,
    pub deterministic: JohansenDeterministic,
    /// Eigenvectors as columns (`K x K`), each scaled so its first non-zero entry is 1.
    #[serde(with = "serde_rows")]
    pub beta: DMatrix<f64>,
    pub nobs: usize,
    pub lag: usize,
}

/// Canonical-correlation decomposition shared by the test and VEC estimation.
pub(crate) struct Eigen {
    pub values: Vec<f64>,
    /// `K x K`, unnormalised, columns ordered like `values`.
    pub vectors: DMatrix<f64>,
    pub nobs: usize,
}

fn validate(y: &DMatrix<f64>, p: usize) -> Result<()> {
    let k = y.ncols();
    if !(2..=MAX_DIM).contains(&k) {
        return Err(Error::invalid(format!(
            "johansen test needs 2..={MAX_DIM} series, got {k}"
        )));
    }
    if p == 0 {
        return Err(Error::invalid("lag order must be at least 1"));
    }
    let needed = k * p + 20;
    if y.nrows() < needed {
        return Err(Error::TooShort {
            needed,
            got: y.nrows(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("johansen input"));
    }
    Ok(())
}

fn cholesky_lower(m: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let scale = m.diagonal().max();
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Singular(what));
    }
    let c = m.clone().cholesky().ok_or(Error::Singular(what))?;
    let l = c.l();
    let min_diag = l.diagonal().min();
    if min_diag * min_diag <= 1e-12 * scale {
        return Err(Error::Singular(what));
    }
    Ok(l)
}

pub(crate) fn eigen(y: &DMatrix<f64>, p: usize, det: JohansenDeterministic) -> Result<Eigen> {
    validate(y, p)?;
    let (t, k) = (y.nrows(), y.ncols());
    let n = t - p;
    let restricted = det == JohansenDeterministic::RestrictedConstant;

    // Row i corresponds to level index t_i = p + i.
    let dy = DMatrix::from_fn(n, k, |i, j| y[(p + i, j)] - y[(p + i - 1, j)]);
    let level_cols = if restricted { k + 1 } else { k };
    let level = DMatrix::from_fn(n, level_cols, |i, j| if j < k { y[(i, j)] } else { 1.0 });
    let z_cols = k * (p - 1) + usize::from(!restricted);
    let z = DMatrix::from_fn(n, z_cols, |i, c| {
        if c < k * (p - 1) {
            let lag = c / k + 1;
            let j = c % k;
            let at = p + i - lag;
            y[(at, j)] - y[(at - 1, j)]
        } else {
            1.0
        }
    });

    let (r0, r1) = if z_cols == 0 {
        (dy, level)
    } else {
        let b0 = lstsq(&z, &dy, "johansen short-run regression")?;
        let b1 = lstsq(&z, &level, "johansen short-run regression")?;
        (&dy - &z * b0, &level - &z * b1)
    };
    let nf = n as f64;
    let s00 = r0.transpose() * &r0 / nf;
    let s11 = r1.transpose() * &r1 / nf;
    let s01 = r0.transpose() * &r1 / nf;

    let l11 = cholesky_lower(&s11, "S11")?;
    let l00 = cholesky_lower(&s00, "S00")?;
    let l11_inv = l11
        .clone()
        .try_inverse()
        .ok_or(Error::Singular("S11"))?;
    let l00_inv = l00.try_inverse().ok_or(Error::Singular("S00"))?;
    // C = L11⁻¹ S10 S00⁻¹ S01 L11⁻ᵀ = Gᵀ G with G = L00⁻¹ S01 L11⁻ᵀ
    let g = &l00_inv * &s01 * l11_inv.transpose();
    let c = g.transpose() * &g;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();

    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k);

    let mut values = Vec::with_capacity(k);
    let mut vectors = DMatrix::zeros(level_cols, k);
    let l11_inv_t = l11_inv.transpose();
    for (col, &idx) in order.iter().enumerate() {
        let lam = eig.eigenvalues[idx];
        if lam >= 1.0 - 1e-10 {
            return Err(Error::Singular("canonical correlation of one (collinear inputs)"));
        }
        values.push(lam.max(0.0));
        let v = &l11_inv_t * eig.eigenvectors.column(idx);
        vectors.set_column(col, &v);
    }
    Ok(Eigen {
        values,
        vectors,
        nobs: n,
    })
}

/// Scales each column so its first entry of non-negligible magnitude is one.
pub(crate) fn normalize_columns(m: &mut DMatrix<f64>, rows: usize) {
    for mut col in m.column_iter_mut() {
        let norm = col.rows(0, rows).norm();
        if norm == 0.0 {
            continue;
        }
        if let Some(pivot) = col.iter().take(rows).copied().find(|v| v.abs() > 1e-8 * norm) {
            col /= pivot;
        }
    }
}

/// Trace test with the constant restricted to the cointegrating relation.
pub fn johansen_trace_test(y: &DMatrix<f64>, p: usize, significance: Significance) -> Result<JohansenResult> {
    johansen_trace_test_with(y, p, significance, JohansenDeterministic::default())
}

pub fn johansen_trace_test_with(
    y: &DMatrix<f64>,
    p: usize,
    significance: Significance,
    deterministic: JohansenDeterministic,
) -> Result<JohansenResult> {
    let k = y.ncols();
    let e = eigen(y, p, deterministic)?;
    let nf = e.nobs as f64;
    let logs: Vec<f64> = e.values.iter().map(|l| (1.0 - l).ln()).collect();
    let restricted = deterministic == JohansenDeterministic::RestrictedConstant;

    let mut trace_statistics = Vec::with_capacity(k);
    let mut critical_values = Vec::with_capacity(k);
    for r0 in 0..k {
        trace_statistics.push(-nf * logs[r0..].iter().sum::<f64>());
        critical_values.push(
            trace_critical_value(k - r0, significance, restricted)
                .expect("dimension validated against table size"),
        );
    }
    let selected_rank = trace_statistics
        .iter()
        .zip(&critical_values)
        .position(|(s, c)| s < c)
        .unwrap_or(k);

    let mut beta = e.vectors.rows(0, k).into_owned();
    normalize_columns(&mut beta, k);

    Ok(JohansenResult {
        eigenvalues: e.values,
        trace_statistics,
        critical_values,
        selected_rank,
        significance,
        deterministic,
        beta,
        nobs: e.nobs,
        lag: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn pair(seed: u64, t: usize) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        let mut u = 0.0;
        let mut rows = Vec::with_capacity(t);
        for _ in 0..t {
            let e1: f64 = StandardNormal.sample(&mut rng);
            let e2: f64 = StandardNormal.sample(&mut rng);
            x += e1;
            u = 0.5 * u + e2;
            rows.push([x, x + u]);
        }
        crate::linalg::from_rows(&rows).unwrap()
    }

    #[test]
    fn pair_has_rank_one_and_unit_vector() {
        let y = pair(5, 500);
        let r = johansen_trace_test(&y, 2, Significance::Five).unwrap();
        assert_eq!(r.selected_rank, 1, "{r:?}");
        assert!(r.eigenvalues[0] > r.eigenvalues[1]);
        assert!(r.eigenvalues.iter().all(|l| (0.0..1.0).contains(l)));
        assert!(r.trace_statistics[0] > r.trace_statistics[1]);
        assert_eq!(r.beta[(0, 0)], 1.0);
        assert!((r.beta[(1, 0)] + 1.0).abs() < 0.1, "{}", r.beta);
    }

    #[test]
    fn both_deterministic_cases_run() {
        let y = pair(6, 300);
        for det in [JohansenDeterministic::RestrictedConstant, JohansenDeterministic::UnrestrictedConstant] {
            for p in 1..=3 {
                let r = johansen_trace_test_with(&y, p, Significance::Five, det).unwrap();
                assert_eq!(r.trace_statistics.len(), 2);
                assert_eq!(r.nobs, 300 - p);
            }
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let y = pair(1, 30);
        assert!(matches!(johansen_trace_test(&y, 6, Significance::Five), Err(Error::TooShort { .. })));
        let one = DMatrix::from_element(100, 1, 1.0);
        assert!(johansen_trace_test(&one, 1, Significance::Five).is_err());
        assert!(johansen_trace_test(&y, 0, Significance::Five).is_err());
    }

    #[test]
    fn collinear_inputs_are_singular() {
        let y = pair(2, 200);
        let dup = DMatrix::from_fn(200, 3, |i, j| if j < 2 { y[(i, j)] } else { 2.0 * y[(i, 0)] });
        assert!(matches!(johansen_trace_test(&dup, 2, Significance::Five), Err(Error::Singular(_) | Error::RankDeficient(_))));
    }

    #[test]
    fn bit_identical_reruns() {
        let y = pair(9, 200);
        let a = johansen_trace_test(&y, 2, Significance::Five).unwrap();
        let b = johansen_trace_test(&y, 2, Significance::Five).unwrap();
        assert_eq!(a, b);
    }
}
