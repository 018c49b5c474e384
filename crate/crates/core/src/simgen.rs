//! Synthetic OHLC series from a VAR(p) in transformed space.
//!
//! `Y_t = A_1 Y_{t-1} + ... + A_p Y_{t-p} + w_t`, `w_t ~ N(0, Σ_w)`, started
//! from `Y_1` with zero pre-sample lags. The first `burn_in` periods are
//! dropped and the rest is mapped back to bars with the inverse transform.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{companion_spectral_radius, serde_rows, serde_rows_vec};
use crate::ohlc::{inverse_transform, OhlcSeries, TransformedVector};

pub const PRESET_NAMES: [&str; 4] = ["1", "2", "3", "persistent"];

const PRESETS: [(&str, &str); 4] = [
    ("1", include_str!("../presets/scenario1.json")),
    ("2", include_str!("../presets/scenario2.json")),
    ("3", include_str!("../presets/scenario3.json")),
    ("persistent", include_str!("../presets/persistent.json")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    #[serde(default)]
    pub name: String,
    pub p: usize,
    pub t_raw: usize,
    pub burn_in: usize,
    pub y1: Vec<f64>,
    #[serde(with = "serde_rows_vec")]
    pub a: Vec<DMatrix<f64>>,
    #[serde(with = "serde_rows")]
    pub noise_cov: DMatrix<f64>,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn output_len(&self) -> usize {
        self.t_raw - self.burn_in
    }

    pub fn validate(&self) -> Result<()> {
        const K: usize = 4;
        if self.p == 0 || self.a.len() != self.p {
            return Err(Error::invalid(format!(
                "expected {} coefficient matrices, got {}",
                self.p,
                self.a.len()
            )));
        }
        if self.a.iter().any(|m| m.shape() != (K, K)) || self.noise_cov.shape() != (K, K) || self.y1.len() != K {
            return Err(Error::invalid("scenario matrices must be 4 x 4 and y1 a 4-vector"));
        }
        if self.burn_in >= self.t_raw {
            return Err(Error::invalid("burn_in must be smaller than t_raw"));
        }
        let finite = |m: &DMatrix<f64>| m.iter().all(|v| v.is_finite());
        if !self.a.iter().all(finite) || !finite(&self.noise_cov) || self.y1.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scenario spec"));
        }
        let c = &self.noise_cov;
        if (c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
            return Err(Error::invalid("noise covariance must be symmetric"));
        }
        let rho = companion_spectral_radius(&self.a);
        if rho >= 1.0 {
            return Err(Error::Unstable(rho));
        }
        Ok(())
    }
}

/// Built-in scenario by name (`"1"`, `"2"`, `"3"`, `"persistent"`; `"scenarioN"` also accepted).
pub fn preset(name: &str) -> Result<ScenarioSpec> {
    let key = name.strip_prefix("scenario").unwrap_or(name);
    let (_, json) = PRESETS
        .iter()
        .find(|(n, _)| *n == key)
        .ok_or_else(|| Error::invalid(format!("unknown scenario '{name}', expected one of {}", PRESET_NAMES.join(", "))))?;
    Ok(serde_json::from_str(json)?)
}

/// Lower factor `L` with `L L' = Σ`. Falls back to an eigen factor for
/// singular positive semidefinite matrices such as `Σ = 0`.
pub fn noise_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = cov.clone().cholesky() {
        return Ok(c.l());
    }
    let eig = cov.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-12 * scale) {
        return Err(Error::NotPositiveSemidefinite);
    }
    let root = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&root))
}

/// Simulated transformed series (`(t_raw - burn_in) x 4`) and its bars.
pub fn generate(spec: &ScenarioSpec) -> Result<(DMatrix<f64>, OhlcSeries)> {
    spec.validate()?;
    let k = 4;
    let l = noise_factor(&spec.noise_cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut y = DMatrix::zeros(spec.t_raw, k);
    y.row_mut(0).copy_from_slice(&spec.y1);
    for t in 1..spec.t_raw {
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let mut next = &l * z;
        for (j, aj) in spec.a.iter().enumerate() {
            if let Some(lag) = t.checked_sub(j + 1) {
                next += aj * y.row(lag).transpose();
            }
        }
        y.row_mut(t).copy_from(&next.transpose());
    }
    let kept = y.rows(spec.burn_in, spec.output_len()).into_owned();
    let bars = kept
        .row_iter()
        .enumerate()
        .map(|(i, r)| inverse_transform(&TransformedVector::from_slice(r.transpose().as_slice())?, i + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok((kept, OhlcSeries::from_bars(bars)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load_and_validate() {
        for name in PRESET_NAMES {
            let s = preset(name).unwrap();
            s.validate().unwrap();
            assert_eq!(s.output_len(), 200);
        }
        let s1 = preset("scenario1").unwrap();
        assert_eq!(s1.y1, vec![4.0, 0.7, -0.85, 0.0]);
        assert_eq!(s1.a[0][(0, 0)], 0.55);
        assert_eq!(s1.a[0][(2, 1)], 0.12);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-15;
        assert!(close(s1.noise_cov[(1, 1)], 0.05 * 0.05));
        assert!(close(preset("2").unwrap().noise_cov[(3, 3)], 0.07 * 0.07));
        assert!(close(preset("3").unwrap().noise_cov[(0, 0)], 0.03 * 0.03));
        assert!(preset("9").is_err());
    }

    #[test]
    fn output_shape_validity_determinism() {
        let s = preset("1").unwrap().with_seed(7);
        let (y, bars) = generate(&s).unwrap();
        assert_eq!(y.nrows(), 200);
        assert_eq!(bars.len(), 200);
        assert!(bars.bars().iter().all(|b| b.is_valid()));
        let (y2, _) = generate(&s).unwrap();
        assert_eq!(y, y2);
        let (y3, _) = generate(&s.clone().with_seed(8)).unwrap();
        assert_ne!(y, y3);
    }

    #[test]
    fn zero_noise_converges_to_fixed_point() {
        let mut s = preset("1").unwrap();
        s.noise_cov = DMatrix::zeros(4, 4);
        s.burn_in = 0;
        let (y, bars) = generate(&s).unwrap();
        assert!(bars.bars().iter().all(|b| b.is_valid()));
        let n0 = y.row(1).norm();
        let n1 = y.row(100).norm();
        assert!(n1 < n0 * 0.91f64.powi(98) * 1.01);
        assert!(y.row(219).norm() < 1e-6);
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = preset("1").unwrap();
        s.a[0] = DMatrix::identity(4, 4);
        assert!(matches!(generate(&s), Err(Error::Unstable(_))));
        let mut s = preset("1").unwrap();
        s.noise_cov[(0, 0)] = -1.0;
        assert!(matches!(generate(&s), Err(Error::NotPositiveSemidefinite)));
        let mut s = preset("1").unwrap();
        s.burn_in = 220;
        assert!(generate(&s).is_err());
    }

    #[test]
    fn extra_initial_lags_are_zero() {
        let mut s = preset("1").unwrap();
        s.p = 2;
        s.a.push(DMatrix::from_element(4, 4, 0.01));
        s.noise_cov = DMatrix::zeros(4, 4);
        s.burn_in = 0;
        let (y, _) = generate(&s).unwrap();
        let y1 = DVector::from_vec(s.y1.clone());
        let expect = &s.a[0] * &y1;
        assert!((y.row(1).transpose() - expect).amax() < 1e-15);
    }
}
