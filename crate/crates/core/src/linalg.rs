//! Small dense linear-algebra helpers on top of nalgebra.
//!
//! Time series are stored as `T x K` matrices, one row per period.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values below `RCOND * sigma_max` mark a design as rank deficient.
pub const RCOND: f64 = 1e-10;

/// Least-squares solution of `x * b = y` via SVD.
///
/// Fails with [`Error::RankDeficient`] when `x` does not have full column rank.
pub fn lstsq(x: &DMatrix<f64>, y: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    if x.nrows() < x.ncols() {
        return Err(Error::RankDeficient(what));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    // Column scaling keeps the rank test independent of the units of each regressor.
    let scale: Vec<f64> = x
        .column_iter()
        .map(|c| {
            let n = c.norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect();
    let mut xs = x.clone();
    for (j, s) in scale.iter().enumerate() {
        xs.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = xs.svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    if smax == 0.0 || sv.iter().any(|s| *s <= RCOND * smax) {
        return Err(Error::RankDeficient(what));
    }
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut uty = u.transpose() * y;
    for (i, s) in sv.iter().enumerate() {
        uty.row_mut(i).scale_mut(1.0 / s);
    }
    let mut b = vt.transpose() * uty;
    for (j, s) in scale.iter().enumerate() {
        b.row_mut(j).scale_mut(1.0 / s);
    }
    Ok(b)
}

/// First differences of each column: `T x K -> (T-1) x K`.
pub fn diff_rows(y: &DMatrix<f64>) -> DMatrix<f64> {
    let t = y.nrows();
    if t < 2 {
        return DMatrix::zeros(0, y.ncols());
    }
    y.rows(1, t - 1) - y.rows(0, t - 1)
}

/// Builds a `T x K` matrix from row slices.
pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<DMatrix<f64>> {
    let k = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    if rows.iter().any(|r| r.as_ref().len() != k) {
        return Err(Error::invalid("ragged rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), k, |i, j| rows[i].as_ref()[j]))
}

pub fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Spectral radius of the companion matrix of `a_1..a_p` (each `K x K`).
pub fn companion_spectral_radius(a: &[DMatrix<f64>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let k = a[0].nrows();
    let p = a.len();
    let mut f = DMatrix::zeros(k * p, k * p);
    for (j, aj) in a.iter().enumerate() {
        f.view_mut((0, j * k), (k, k)).copy_from(aj);
    }
    for i in k..k * p {
        f[(i, i - k)] = 1.0;
    }
    f.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Serde adapters so matrices appear as nested row arrays in JSON.
pub mod serde_rows {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

pub mod serde_rows_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[DMatrix<f64>], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<f64>>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|rows| from_rows(rows).map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_dvec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
