//! VAR and VEC estimation and forecasting.

pub mod diff;
pub mod var;
pub mod vec;

pub use diff::{difference, difference_columns, integrate, integrate_columns};
pub use var::{
    aic_from_residuals, aic_table, default_p_max, fit_var, forecast_var, select_lag_aic, ForecastPath,
    VarModel,
};
pub use vec::{fit_vec, forecast_vec, VecModel};
