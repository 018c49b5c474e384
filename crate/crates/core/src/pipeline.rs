//! Rolling-window forecasting: pick VAR, VEC or a differenced VAR per window,
//! forecast in transformed space and map the forecasts back to bars.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{compare, evaluate, ComparisonReport, EvalReport};
use crate::model::{
    default_p_max, difference_columns, fit_var, fit_vec, forecast_var, forecast_vec, integrate_columns,
    select_lag_aic, ForecastPath,
};
use crate::ohlc::{inverse_transform, sanitize_with_report, transform, OhlcBar, OhlcSeries, SanitizeConfig, SanitizeReport, TransformedVector};
use crate::stats::{adf_test, johansen_trace_test_with, JohansenDeterministic, Significance};

pub const K: usize = 4;
pub const MIN_WINDOW: usize = 30;
pub const MAX_HORIZON: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Estimation window length.
    pub q: usize,
    /// Forecast horizon.
    pub m: usize,
}

impl WindowSpec {
    pub fn new(q: usize, m: usize) -> Result<Self> {
        if q < MIN_WINDOW {
            return Err(Error::invalid(format!("window length q must be at least {MIN_WINDOW}, got {q}")));
        }
        if !(1..=MAX_HORIZON).contains(&m) {
            return Err(Error::invalid(format!("horizon m must be in 1..={MAX_HORIZON}, got {m}")));
        }
        Ok(WindowSpec { q, m })
    }

    /// Number of forecast origins in a series of length `t`.
    pub fn window_count(&self, t: usize) -> usize {
        (t + 1).saturating_sub(self.q + self.m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "VAR")]
    Var,
    #[serde(rename = "VEC")]
    Vec,
    #[serde(rename = "DIFF_VAR")]
    DiffVar,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Var => "VAR",
            ModelKind::Vec => "VEC",
            ModelKind::DiffVar => "DIFF_VAR",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub alpha_adf: Significance,
    pub alpha_johansen: Significance,
    /// Largest lag tried by AIC; derived from the window length when `None`.
    pub p_max: Option<usize>,
    pub deterministic: JohansenDeterministic,
    pub sanitize: SanitizeConfig,
    /// Thread count for the backtest; the global rayon pool when `None`.
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            alpha_adf: Significance::Five,
            alpha_johansen: Significance::Five,
            p_max: None,
            deterministic: JohansenDeterministic::default(),
            sanitize: SanitizeConfig::default(),
            workers: None,
        }
    }
}

/// How a window's model was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostics {
    pub stationary: [bool; K],
    /// Lag order used for the Johansen test, when it ran.
    pub johansen_lag: Option<usize>,
    pub johansen_rank: Option<usize>,
    pub johansen_error: Option<String>,
    /// Components differenced in the fallback branch.
    pub differenced: [bool; K],
    /// ADF decisions on the differenced system.
    pub stationary_after_diff: Option<[bool; K]>,
    /// Set when the first fit was rank deficient and the lag dropped to one.
    pub lag_fallback: bool,
}

/// Model choice and forecasts for one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRun {
    pub model: ModelKind,
    pub p: usize,
    pub r: Option<usize>,
    pub forecast: ForecastPath,
    /// Forecast bars labelled `t = 1..=m` relative to the window end.
    pub bars: Vec<OhlcBar>,
    pub diagnostics: WindowDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowForecast {
    pub window_index: usize,
    /// 1-based period of the last in-sample bar.
    pub origin: usize,
    pub model_used: ModelKind,
    pub p: usize,
    pub r: Option<usize>,
    pub forecast_bars: Vec<OhlcBar>,
    pub realized_bars: Vec<OhlcBar>,
    /// Last in-sample bar, the naive forecast for every horizon.
    pub last_bar: OhlcBar,
    pub diagnostics: WindowDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedWindow {
    pub window_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelCounts {
    #[serde(rename = "VAR")]
    pub var: usize,
    #[serde(rename = "VEC")]
    pub vec: usize,
    #[serde(rename = "DIFF_VAR")]
    pub diff_var: usize,
}

impl ModelCounts {
    pub fn add(&mut self, kind: ModelKind) {
        match kind {
            ModelKind::Var => self.var += 1,
            ModelKind::Vec => self.vec += 1,
            ModelKind::DiffVar => self.diff_var += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.var + self.vec + self.diff_var
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub spec: WindowSpec,
    pub series_len: usize,
    pub windows: Vec<WindowForecast>,
    pub failed: Vec<FailedWindow>,
    pub model_counts: ModelCounts,
    pub sanitize_report: SanitizeReport,
}

impl BacktestResult {
    /// Realized, proposed and naive bars at horizon `h` over all successful windows.
    pub fn horizon_bars(&self, h: usize) -> Result<(Vec<OhlcBar>, Vec<OhlcBar>, Vec<OhlcBar>)> {
        if h == 0 || h > self.spec.m {
            return Err(Error::invalid(format!("horizon {h} outside 1..={}", self.spec.m)));
        }
        let mut actual = Vec::with_capacity(self.windows.len());
        let mut proposed = Vec::with_capacity(self.windows.len());
        let mut naive = Vec::with_capacity(self.windows.len());
        for w in &self.windows {
            actual.push(w.realized_bars[h - 1]);
            proposed.push(w.forecast_bars[h - 1]);
            naive.push(OhlcBar {
                t: w.realized_bars[h - 1].t,
                ..w.last_bar
            });
        }
        Ok((actual, proposed, naive))
    }

    /// Accuracy of the pipeline at horizon `h`, pooled across windows.
    pub fn evaluate(&self, h: usize) -> Result<EvalReport> {
        let (a, f, _) = self.horizon_bars(h)?;
        evaluate(&a, &f)
    }

    /// Pipeline against the naive forecast at horizon `h`.
    pub fn compare_naive(&self, h: usize) -> Result<ComparisonReport> {
        let (a, f, n) = self.horizon_bars(h)?;
        compare(&a, &f, &n)
    }

    /// One CSV row per window and horizon:
    /// `window_index,model,p,r,horizon,o_hat,h_hat,l_hat,c_hat,o,h,l,c`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "window_index", "model", "p", "r", "horizon", "o_hat", "h_hat", "l_hat", "c_hat", "o", "h", "l", "c",
        ])?;
        for win in &self.windows {
            for (i, (f, a)) in win.forecast_bars.iter().zip(&win.realized_bars).enumerate() {
                w.write_record([
                    win.window_index.to_string(),
                    win.model_used.to_string(),
                    win.p.to_string(),
                    win.r.map(|r| r.to_string()).unwrap_or_default(),
                    (i + 1).to_string(),
                    f.open.to_string(),
                    f.high.to_string(),
                    f.low.to_string(),
                    f.close.to_string(),
                    a.open.to_string(),
                    a.high.to_string(),
                    a.low.to_string(),
                    a.close.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Transformed `T x 4` matrix of a series whose bars are strictly interior.
pub fn transform_series(series: &OhlcSeries) -> Result<DMatrix<f64>> {
    let rows = series
        .bars()
        .iter()
        .map(|b| transform(b).map(TransformedVector::to_array))
        .collect::<Result<Vec<_>>>()?;
    Ok(DMatrix::from_fn(rows.len(), K, |i, j| rows[i][j]))
}

fn column(y: &DMatrix<f64>, j: usize) -> Vec<f64> {
    y.column(j).iter().copied().collect()
}

fn adf_flags(y: &DMatrix<f64>, sig: Significance) -> Result<[bool; K]> {
    let mut out = [false; K];
    for (j, flag) in out.iter_mut().enumerate() {
        *flag = adf_test(&column(y, j), sig)?.reject_unit_root;
    }
    Ok(out)
}

/// Lag cap that keeps AIC selection estimable on `t` rows.
fn lag_cap(t: usize, requested: Option<usize>) -> usize {
    let mut p = requested.unwrap_or_else(|| default_p_max(t, K)).max(1);
    while p > 1 && t < (K + 1) * p + 6 {
        p -= 1;
    }
    p
}

fn choose_lag(y: &DMatrix<f64>, p_max: usize) -> usize {
    select_lag_aic(y, p_max).unwrap_or(1)
}

/// Fits VAR(p) and forecasts, retrying with p = 1 on a rank-deficient design.
fn var_forecast(y: &DMatrix<f64>, p: usize, m: usize, fell_back: &mut bool) -> Result<(usize, ForecastPath)> {
    match fit_var(y, p) {
        Ok(model) => Ok((p, forecast_var(&model, y, m)?)),
        Err(Error::RankDeficient(_)) if p > 1 => {
            *fell_back = true;
            let model = fit_var(y, 1)?;
            Ok((1, forecast_var(&model, y, m)?))
        }
        Err(e) => Err(e),
    }
}

fn vec_forecast(y: &DMatrix<f64>, p: usize, r: usize, m: usize, fell_back: &mut bool) -> Result<(usize, ForecastPath)> {
    match fit_vec(y, p, r) {
        Ok(model) => Ok((p, forecast_vec(&model, y, m)?)),
        Err(Error::RankDeficient(_) | Error::Singular(_)) if p > 1 => {
            *fell_back = true;
            let model = fit_vec(y, 1, r)?;
            Ok((1, forecast_vec(&model, y, m)?))
        }
        Err(e) => Err(e),
    }
}

/// Largest Johansen lag not above `p` that the window length supports.
fn johansen_lag(q: usize, p: usize) -> Option<usize> {
    let cap = q.checked_sub(20)? / K;
    (cap >= 1).then(|| p.min(cap))
}

/// Model selection, estimation and forecasting for one `q x 4` transformed window.
pub fn run_window(window: &DMatrix<f64>, m: usize, cfg: &PipelineConfig) -> Result<WindowRun> {
    if window.ncols() != K {
        return Err(Error::invalid(format!("window must have {K} columns")));
    }
    if m == 0 {
        return Err(Error::invalid("forecast horizon must be at least 1"));
    }
    let q = window.nrows();
    let stationary = adf_flags(window, cfg.alpha_adf)?;
    let mut diag = WindowDiagnostics {
        stationary,
        johansen_lag: None,
        johansen_rank: None,
        johansen_error: None,
        differenced: [false; K],
        stationary_after_diff: None,
        lag_fallback: false,
    };
    let p_max = lag_cap(q, cfg.p_max);
    let p_aic = choose_lag(window, p_max);

    let (model, p, r, path) = if stationary.iter().all(|s| *s) {
        let (p, path) = var_forecast(window, p_aic, m, &mut diag.lag_fallback)?;
        (ModelKind::Var, p, None, path)
    } else {
        let joh = match johansen_lag(q, p_aic) {
            Some(pj) => {
                diag.johansen_lag = Some(pj);
                johansen_trace_test_with(window, pj, cfg.alpha_johansen, cfg.deterministic).map(|j| (pj, j.selected_rank))
            }
            None => Err(Error::TooShort { needed: K + 20, got: q }),
        };
        match joh {
            Ok((pj, rank)) if rank > 0 && rank < K => {
                diag.johansen_rank = Some(rank);
                let (p, path) = vec_forecast(window, pj, rank, m, &mut diag.lag_fallback)?;
                (ModelKind::Vec, p, Some(rank), path)
            }
            Ok((_, rank)) if rank == K => {
                diag.johansen_rank = Some(rank);
                let (p, path) = var_forecast(window, p_aic, m, &mut diag.lag_fallback)?;
                (ModelKind::Var, p, None, path)
            }
            other => {
                match other {
                    Ok((_, rank)) => diag.johansen_rank = Some(rank),
                    Err(e) => diag.johansen_error = Some(e.to_string()),
                }
                let flags = stationary.map(|s| !s);
                diag.differenced = flags;
                let dy = difference_columns(window, &flags);
                diag.stationary_after_diff = adf_flags(&dy, cfg.alpha_adf).ok();
                let pd = choose_lag(&dy, lag_cap(dy.nrows(), cfg.p_max));
                let (p, dpath) = var_forecast(&dy, pd, m, &mut diag.lag_fallback)?;
                let last: Vec<f64> = window.row(q - 1).iter().copied().collect();
                let values = integrate_columns(&dpath.values, &last, &flags);
                let path = ForecastPath {
                    origin: q - 1,
                    horizon: m,
                    values,
                };
                (ModelKind::DiffVar, p, None, path)
            }
        }
    };

    let bars = path
        .values
        .row_iter()
        .enumerate()
        .map(|(h, row)| inverse_transform(&TransformedVector::new(row[0], row[1], row[2], row[3]), h + 1))
        .collect::<Result<Vec<_>>>()?;
    Ok(WindowRun {
        model,
        p,
        r,
        forecast: path,
        bars,
        diagnostics: diag,
    })
}

/// Slides a `q`-window over the series one period at a time and forecasts
/// `m` steps from each of the `T - q - m + 1` origins.
pub fn rolling_backtest(series: &OhlcSeries, spec: WindowSpec, cfg: &PipelineConfig) -> Result<BacktestResult> {
    let t = series.len();
    if t < spec.q + spec.m {
        return Err(Error::TooShort {
            needed: spec.q + spec.m,
            got: t,
        });
    }
    let (clean, sanitize_report) = sanitize_with_report(&series.to_raw(), &cfg.sanitize)?;
    if clean.len() != t {
        return Err(Error::invalid("sanitization changed the series length"));
    }
    let y = transform_series(&clean)?;
    let n = spec.window_count(t);
    let realized = series.bars();

    let one = |w: usize| -> std::result::Result<WindowForecast, FailedWindow> {
        let window = y.rows(w, spec.q).into_owned();
        match run_window(&window, spec.m, cfg) {
            Ok(run) => {
                let origin = w + spec.q;
                let forecast_bars = run
                    .bars
                    .iter()
                    .enumerate()
                    .map(|(h, b)| OhlcBar { t: origin + h + 1, ..*b })
                    .collect();
                Ok(WindowForecast {
                    window_index: w,
                    origin,
                    model_used: run.model,
                    p: run.p,
                    r: run.r,
                    forecast_bars,
                    realized_bars: realized[origin..origin + spec.m].to_vec(),
                    last_bar: realized[origin - 1],
                    diagnostics: run.diagnostics,
                })
            }
            Err(e) => Err(FailedWindow {
                window_index: w,
                reason: e.to_string(),
            }),
        }
    };
    let outcomes: Vec<_> = match cfg.workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
            pool.install(|| (0..n).into_par_iter().map(one).collect())
        }
        None => (0..n).into_par_iter().map(one).collect(),
    };

    let mut windows = Vec::with_capacity(n);
    let mut failed = Vec::new();
    let mut model_counts = ModelCounts::default();
    for o in outcomes {
        match o {
            Ok(w) => {
                model_counts.add(w.model_used);
                windows.push(w);
            }
            Err(f) => failed.push(f),
        }
    }
    if !failed.is_empty() {
        log::warn!("{} of {n} windows failed and are excluded from metrics", failed.len());
    }
    Ok(BacktestResult {
        spec,
        series_len: t,
        windows,
        failed,
        model_counts,
        sanitize_report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate, preset};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(rng: &mut ChaCha8Rng) -> f64 {
        StandardNormal.sample(rng)
    }

    #[test]
    fn window_arithmetic() {
        assert_eq!(WindowSpec::new(50, 1).unwrap().window_count(200), 150);
        assert_eq!(WindowSpec::new(40, 3).unwrap().window_count(43), 1);
        assert_eq!(WindowSpec::new(40, 3).unwrap().window_count(42), 0);
        assert!(WindowSpec::new(29, 1).is_err());
        assert!(WindowSpec::new(30, 0).is_err());
        assert!(WindowSpec::new(30, 11).is_err());
    }

    #[test]
    fn stationary_window_uses_var() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut y = DMatrix::zeros(120, 4);
        for t in 1..120 {
            for j in 0..4 {
                y[(t, j)] = 0.5 * y[(t - 1, j)] + 0.1 * noise(&mut rng);
            }
        }
        let run = run_window(&y, 2, &PipelineConfig::default()).unwrap();
        assert_eq!(run.model, ModelKind::Var);
        assert!(run.bars.iter().all(|b| b.is_valid()));
    }

    #[test]
    fn random_walks_use_differenced_var() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut y = DMatrix::zeros(120, 4);
        for t in 1..120 {
            for j in 0..4 {
                y[(t, j)] = y[(t - 1, j)] + 0.05 * noise(&mut rng);
            }
        }
        let run = run_window(&y, 3, &PipelineConfig::default()).unwrap();
        assert_eq!(run.model, ModelKind::DiffVar);
        assert_eq!(run.diagnostics.differenced, [true; 4]);
        assert_eq!(run.bars.len(), 3);
    }

    #[test]
    fn one_trend_gives_rank_three_vec() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut y = DMatrix::zeros(150, 4);
        for t in 1..150 {
            y[(t, 0)] = y[(t - 1, 0)] + 0.05 * noise(&mut rng);
            for j in 1..4 {
                y[(t, j)] = 0.3 * y[(t - 1, j)] + 0.3 * noise(&mut rng);
            }
        }
        let run = run_window(&y, 1, &PipelineConfig::default()).unwrap();
        assert_eq!(run.model, ModelKind::Vec, "{:?}", run.diagnostics);
        assert_eq!(run.r, Some(3));
    }

    #[test]
    fn backtest_counts_and_validity() {
        let (_, s) = generate(&preset("1").unwrap().with_seed(4)).unwrap();
        let spec = WindowSpec::new(40, 2).unwrap();
        let res = rolling_backtest(&s, spec, &PipelineConfig::default()).unwrap();
        assert_eq!(res.windows.len() + res.failed.len(), 159);
        assert_eq!(res.model_counts.total(), res.windows.len());
        for w in &res.windows {
            assert!(w.forecast_bars.iter().all(|b| b.is_valid()));
            assert_eq!(w.realized_bars[0], s.bars()[w.origin]);
        }
        assert!(res.windows.windows(2).all(|p| p[0].window_index < p[1].window_index));
        let mut out = Vec::new();
        res.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("window_index,model,p,r,horizon,o_hat,h_hat,l_hat,c_hat,o,h,l,c\n"));
        assert_eq!(text.lines().count(), 1 + 2 * res.windows.len());
        let json = serde_json::to_string(&res).unwrap();
        let back: BacktestResult = serde_json::from_str(&json).unwrap();
        assert_eq!(back, res);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let (_, s) = generate(&preset("2").unwrap().with_seed(9)).unwrap();
        let spec = WindowSpec::new(35, 1).unwrap();
        let a = rolling_backtest(&s, spec, &PipelineConfig { workers: Some(1), ..Default::default() }).unwrap();
        let b = rolling_backtest(&s, spec, &PipelineConfig { workers: Some(4), ..Default::default() }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_lookahead() {
        let (_, s) = generate(&preset("1").unwrap().with_seed(5)).unwrap();
        let spec = WindowSpec::new(40, 1).unwrap();
        let cut = 120;
        let mut bars = s.bars().to_vec();
        for b in &mut bars[cut..] {
            b.high *= 1.7;
            b.open *= 1.3;
        }
        let perturbed = OhlcSeries::from_bars(bars).unwrap();
        let cfg = PipelineConfig::default();
        let a = rolling_backtest(&s, spec, &cfg).unwrap();
        let b = rolling_backtest(&perturbed, spec, &cfg).unwrap();
        for (wa, wb) in a.windows.iter().zip(&b.windows) {
            if wa.origin <= cut {
                assert_eq!(wa.forecast_bars, wb.forecast_bars, "window {}", wa.window_index);
            }
        }
    }

    #[test]
    fn too_short_series() {
        let (_, s) = generate(&preset("1").unwrap()).unwrap();
        let spec = WindowSpec::new(40, 1).unwrap();
        let short = s.slice(0..40).unwrap();
        assert!(matches!(
            rolling_backtest(&short, spec, &PipelineConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let exact = s.slice(0..41).unwrap();
        assert_eq!(rolling_backtest(&exact, spec, &PipelineConfig::default()).unwrap().windows.len(), 1);
    }
}
