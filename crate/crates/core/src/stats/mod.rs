//! Unit-root and cointegration tests.

pub mod adf;
pub mod johansen;
pub mod tables;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adf::{adf_test, adf_test_fixed_lag, AdfResult};
pub use johansen::{johansen_trace_test, johansen_trace_test_with, JohansenDeterministic, JohansenResult};

/// Significance levels with tabulated critical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum Significance {
    One,
    Five,
    Ten,
}

impl Significance {
    pub fn level(self) -> f64 {
        match self {
            Significance::One => 0.01,
            Significance::Five => 0.05,
            Significance::Ten => 0.10,
        }
    }
}

impl TryFrom<f64> for Significance {
    type Error = Error;

    fn try_from(v: f64) -> Result<Self> {
        const LEVELS: [(f64, Significance); 3] = [
            (0.01, Significance::One),
            (0.05, Significance::Five),
            (0.10, Significance::Ten),
        ];
        LEVELS
            .iter()
            .find(|(l, _)| (l - v).abs() < 1e-9)
            .map(|(_, s)| *s)
            .ok_or_else(|| Error::invalid(format!("significance must be 0.01, 0.05 or 0.10, got {v}")))
    }
}

impl From<Significance> for f64 {
    fn from(s: Significance) -> f64 {
        s.level()
    }
}

impl std::fmt::Display for Significance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.level())
    }
}
