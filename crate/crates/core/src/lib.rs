//! Forecasting OHLC candlestick data without breaking its constraints.
//!
//! Each bar is mapped to an unconstrained 4-vector (log low, log range and
//! logits of the open and close positions inside the range), modelled with a
//! VAR or VEC chosen by unit-root and cointegration tests, and mapped back.

pub mod error;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod ohlc;
pub mod pipeline;
pub mod simgen;
pub mod stats;

pub use error::{Error, Result};
pub use metrics::{ComparisonReport, EvalReport};
pub use model::{ForecastPath, VarModel, VecModel};
pub use ohlc::{OhlcBar, OhlcSeries, RawBar, SanitizeConfig, TransformedVector};
pub use pipeline::{BacktestResult, ModelKind, PipelineConfig, WindowForecast, WindowSpec};
pub use simgen::ScenarioSpec;
pub use stats::{AdfResult, JohansenResult, Significance};
