//! Point and interval accuracy measures, the naive baseline and paired
//! one-sided t-tests against it.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::ohlc::OhlcBar;

/// Threshold for the significance flag in comparison reports.
pub const FLAG_LEVEL: f64 = 0.01;
/// Fewest paired observations accepted by [`compare_one_sided`].
pub const MIN_PAIRED: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Price {
    Open,
    High,
    Low,
    Close,
}

impl Price {
    pub const ALL: [Price; 4] = [Price::Open, Price::High, Price::Low, Price::Close];

    pub fn of(self, bar: &OhlcBar) -> f64 {
        match self {
            Price::Open => bar.open,
            Price::High => bar.high,
            Price::Low => bar.low,
            Price::Close => bar.close,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Price::Open => "open",
            Price::High => "high",
            Price::Low => "low",
            Price::Close => "close",
        }
    }
}

fn check_pair(a: usize, f: usize) -> Result<()> {
    if a != f {
        return Err(Error::invalid(format!("length mismatch: {a} actual vs {f} forecast")));
    }
    if a == 0 {
        return Err(Error::EmptySeries);
    }
    Ok(())
}

/// Absolute percentage errors `100 |x - x̂| / |x|`; a zero actual is an error.
pub fn abs_pct_errors(actual: &[f64], forecast: &[f64]) -> Result<Vec<f64>> {
    check_pair(actual.len(), forecast.len())?;
    actual
        .iter()
        .zip(forecast)
        .map(|(&a, &f)| {
            if a == 0.0 {
                Err(Error::invalid("MAPE undefined for a zero actual value"))
            } else {
                Ok(100.0 * ((a - f) / a).abs())
            }
        })
        .collect()
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    let e = abs_pct_errors(actual, forecast)?;
    Ok(e.iter().sum::<f64>() / e.len() as f64)
}

/// Sample standard deviation of the forecasts themselves.
pub fn sd_of_forecasts(forecast: &[f64]) -> Result<f64> {
    let k = forecast.len();
    if k < 2 {
        return Err(Error::TooShort { needed: 2, got: k });
    }
    let mean = forecast.iter().sum::<f64>() / k as f64;
    let ss: f64 = forecast.iter().map(|x| (x - mean).powi(2)).sum();
    Ok((ss / (k - 1) as f64).sqrt())
}

pub fn rmse(actual: &[f64], forecast: &[f64]) -> Result<f64> {
    check_pair(actual.len(), forecast.len())?;
    let ss: f64 = actual.iter().zip(forecast).map(|(a, f)| (a - f).powi(2)).sum();
    Ok((ss / actual.len() as f64).sqrt())
}

/// Midpoint plus half-range distance between two `[low, high]` intervals.
pub fn interval_distance(actual: &OhlcBar, forecast: &OhlcBar) -> f64 {
    let mid = |b: &OhlcBar| (b.high + b.low) / 2.0;
    let half = |b: &OhlcBar| (b.high - b.low) / 2.0;
    (mid(actual) - mid(forecast)).abs() + (half(actual) - half(forecast)).abs()
}

fn check_bars(actual: &[OhlcBar], forecast: &[OhlcBar]) -> Result<()> {
    check_pair(actual.len(), forecast.len())?;
    for (i, b) in actual.iter().chain(forecast).enumerate() {
        if let Some(v) = b.violation() {
            return Err(Error::InvalidBar {
                row: i % actual.len() + 1,
                reason: v.to_string(),
            });
        }
    }
    Ok(())
}

pub fn rmseh(actual: &[OhlcBar], forecast: &[OhlcBar]) -> Result<f64> {
    check_bars(actual, forecast)?;
    let ss: f64 = actual
        .iter()
        .zip(forecast)
        .map(|(a, f)| interval_distance(a, f).powi(2))
        .sum();
    Ok((ss / actual.len() as f64).sqrt())
}

/// Intersection over union of the `[low, high]` intervals; 0 when disjoint.
pub fn interval_iou(actual: &OhlcBar, forecast: &OhlcBar) -> f64 {
    let inter = actual.high.min(forecast.high) - actual.low.max(forecast.low);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = (actual.high - actual.low) + (forecast.high - forecast.low) - inter;
    if union <= 0.0 {
        log::debug!("zero-length union in accuracy ratio");
        return 0.0;
    }
    inter / union
}

/// Mean interval IoU over all periods.
pub fn accuracy_ratio(actual: &[OhlcBar], forecast: &[OhlcBar]) -> Result<f64> {
    check_bars(actual, forecast)?;
    let s: f64 = actual.iter().zip(forecast).map(|(a, f)| interval_iou(a, f)).sum();
    Ok(s / actual.len() as f64)
}

/// Last observed bar repeated for horizons `1..=m`.
pub fn naive_forecast(history: &[OhlcBar], m: usize) -> Result<Vec<OhlcBar>> {
    if history.len() <= m {
        return Err(Error::TooShort {
            needed: m + 1,
            got: history.len(),
        });
    }
    let last = history[history.len() - 1];
    Ok((1..=m).map(|h| OhlcBar { t: last.t + h, ..last }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Errors: the alternative is that the proposed method's values are smaller.
    LowerIsBetter,
    /// Scores such as AR: the alternative is that the proposed values are larger.
    HigherIsBetter,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedTest {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    /// Set when the paired differences have zero variance.
    pub tie: bool,
    pub significant: bool,
}

/// Paired one-sided t-test of `H0: proposed no better than naive`.
pub fn compare_one_sided(proposed: &[f64], naive: &[f64], direction: Direction) -> Result<OneSidedTest> {
    check_pair(proposed.len(), naive.len())?;
    let n = proposed.len();
    if n < MIN_PAIRED {
        return Err(Error::TooShort {
            needed: MIN_PAIRED,
            got: n,
        });
    }
    if proposed.iter().chain(naive).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("paired samples"));
    }
    let d: Vec<f64> = proposed.iter().zip(naive).map(|(p, q)| p - q).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if var <= 0.0 {
        return Ok(OneSidedTest {
            statistic: 0.0,
            p_value: 1.0,
            n,
            tie: true,
            significant: false,
        });
    }
    let t = mean / (var / nf).sqrt();
    let dist = StudentsT::new(0.0, 1.0, nf - 1.0).expect("valid degrees of freedom");
    let p_value = match direction {
        Direction::LowerIsBetter => dist.cdf(t),
        Direction::HigherIsBetter => dist.sf(t),
    };
    Ok(OneSidedTest {
        statistic: t,
        p_value,
        n,
        tie: false,
        significant: p_value < FLAG_LEVEL,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceMetrics {
    pub mape: f64,
    pub sd: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub open: PriceMetrics,
    pub high: PriceMetrics,
    pub low: PriceMetrics,
    pub close: PriceMetrics,
    pub rmseh: f64,
    pub ar: f64,
    pub k: usize,
}

impl EvalReport {
    pub fn price(&self, p: Price) -> &PriceMetrics {
        match p {
            Price::Open => &self.open,
            Price::High => &self.high,
            Price::Low => &self.low,
            Price::Close => &self.close,
        }
    }

    /// `(price, metric, value)` triples in a fixed order; `price` is empty for interval metrics.
    pub fn long_rows(&self) -> Vec<(&'static str, &'static str, f64)> {
        let mut rows = Vec::with_capacity(14);
        for p in Price::ALL {
            let m = self.price(p);
            rows.push((p.name(), "mape", m.mape));
            rows.push((p.name(), "sd", m.sd));
            rows.push((p.name(), "rmse", m.rmse));
        }
        rows.push(("", "rmseh", self.rmseh));
        rows.push(("", "ar", self.ar));
        rows
    }
}

fn column(bars: &[OhlcBar], p: Price) -> Vec<f64> {
    bars.iter().map(|b| p.of(b)).collect()
}

/// All measures for paired actual and forecast bars. SD is NaN when `k = 1`.
pub fn evaluate(actual: &[OhlcBar], forecast: &[OhlcBar]) -> Result<EvalReport> {
    check_bars(actual, forecast)?;
    let pm = |p: Price| -> Result<PriceMetrics> {
        let a = column(actual, p);
        let f = column(forecast, p);
        Ok(PriceMetrics {
            mape: mape(&a, &f)?,
            // undefined for a single forecast
            sd: if f.len() < 2 { f64::NAN } else { sd_of_forecasts(&f)? },
            rmse: rmse(&a, &f)?,
        })
    };
    Ok(EvalReport {
        open: pm(Price::Open)?,
        high: pm(Price::High)?,
        low: pm(Price::Low)?,
        close: pm(Price::Close)?,
        rmseh: rmseh(actual, forecast)?,
        ar: accuracy_ratio(actual, forecast)?,
        k: actual.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub metric: String,
    pub price: Option<Price>,
    pub test: OneSidedTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub proposed: EvalReport,
    pub naive: EvalReport,
    pub tests: Vec<MetricTest>,
}

impl ComparisonReport {
    pub fn test(&self, metric: &str, price: Option<Price>) -> Option<&OneSidedTest> {
        self.tests
            .iter()
            .find(|t| t.metric == metric && t.price == price)
            .map(|t| &t.test)
    }
}

/// Evaluates both forecasts and tests each per-period loss (MAPE, RMSE per
/// price, RMSEH) and the per-period AR score.
pub fn compare(actual: &[OhlcBar], proposed: &[OhlcBar], naive: &[OhlcBar]) -> Result<ComparisonReport> {
    let pe = evaluate(actual, proposed)?;
    let ne = evaluate(actual, naive)?;
    let mut tests = Vec::new();
    for p in Price::ALL {
        let a = column(actual, p);
        let fp = column(proposed, p);
        let fn_ = column(naive, p);
        tests.push(MetricTest {
            metric: "mape".into(),
            price: Some(p),
            test: compare_one_sided(
                &abs_pct_errors(&a, &fp)?,
                &abs_pct_errors(&a, &fn_)?,
                Direction::LowerIsBetter,
            )?,
        });
        let sq = |f: &[f64]| a.iter().zip(f).map(|(x, y)| (x - y).powi(2)).collect::<Vec<_>>();
        tests.push(MetricTest {
            metric: "rmse".into(),
            price: Some(p),
            test: compare_one_sided(&sq(&fp), &sq(&fn_), Direction::LowerIsBetter)?,
        });
    }
    let dist = |f: &[OhlcBar]| {
        actual
            .iter()
            .zip(f)
            .map(|(a, b)| interval_distance(a, b).powi(2))
            .collect::<Vec<_>>()
    };
    tests.push(MetricTest {
        metric: "rmseh".into(),
        price: None,
        test: compare_one_sided(&dist(proposed), &dist(naive), Direction::LowerIsBetter)?,
    });
    let iou = |f: &[OhlcBar]| actual.iter().zip(f).map(|(a, b)| interval_iou(a, b)).collect::<Vec<_>>();
    tests.push(MetricTest {
        metric: "ar".into(),
        price: None,
        test: compare_one_sided(&iou(proposed), &iou(naive), Direction::HigherIsBetter)?,
    });
    Ok(ComparisonReport {
        proposed: pe,
        naive: ne,
        tests,
    })
}

const ROW_LABELS: [(&str, &str); 14] = [
    ("MAPE", "open"),
    ("", "high"),
    ("", "low"),
    ("", "close"),
    ("SD", "open"),
    ("", "high"),
    ("", "low"),
    ("", "close"),
    ("RMSE", "open"),
    ("", "high"),
    ("", "low"),
    ("", "close"),
    ("RMSEH", ""),
    ("AR", ""),
];

fn eval_cells(r: &EvalReport) -> [String; 14] {
    let mut out: [String; 14] = Default::default();
    for (i, p) in Price::ALL.iter().enumerate() {
        let m = r.price(*p);
        out[i] = format!("{:.2}%", m.mape);
        out[4 + i] = format!("{:.3}", m.sd);
        out[8 + i] = format!("{:.3}", m.rmse);
    }
    out[12] = format!("{:.3}", r.rmseh);
    out[13] = format!("{:.3}", r.ar);
    out
}

fn render(header: &[String], rows: &[Vec<String>]) -> String {
    let ncol = header.len();
    let mut width = vec![0; ncol];
    for row in std::iter::once(header).chain(rows.iter().map(|r| r.as_slice())) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |row: &[String]| {
        row.iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, w))| {
                if i < 2 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut s = line(header);
    s.push('\n');
    s.push_str(&"-".repeat(width.iter().sum::<usize>() + 2 * (ncol - 1)));
    s.push('\n');
    for r in rows {
        s.push_str(&line(r));
        s.push('\n');
    }
    s
}

/// Criterion rows by settings columns, e.g. one column per `(q, m)`.
pub fn format_eval_table(columns: &[(String, EvalReport)]) -> String {
    let mut header = vec!["Criterion".to_string(), String::new()];
    header.extend(columns.iter().map(|(l, _)| l.clone()));
    let cells: Vec<[String; 14]> = columns.iter().map(|(_, r)| eval_cells(r)).collect();
    let rows: Vec<Vec<String>> = ROW_LABELS
        .iter()
        .enumerate()
        .map(|(i, (a, b))| {
            let mut row = vec![a.to_string(), b.to_string()];
            row.extend(cells.iter().map(|c| c[i].clone()));
            row
        })
        .collect();
    render(&header, &rows)
}

/// Proposed vs naive side by side; `*` marks a significant one-sided test.
/// `counts` adds the model usage rows, e.g. `[("VAR", 93), ("VEC", 4037)]`.
pub fn format_comparison_table(report: &ComparisonReport, counts: &[(&str, usize)]) -> String {
    let header: Vec<String> = ["Criterion", "", "Proposed", "Naive"].map(String::from).to_vec();
    let star = |metric: &str, price: Option<Price>| {
        if report.test(metric, price).is_some_and(|t| t.significant) {
            "*"
        } else {
            ""
        }
    };
    let mut rows = Vec::new();
    for (i, p) in Price::ALL.iter().enumerate() {
        rows.push(vec![
            if i == 0 { "MAPE" } else { "" }.to_string(),
            p.name().to_string(),
            format!("{:.3}%{}", report.proposed.price(*p).mape, star("mape", Some(*p))),
            format!("{:.3}%", report.naive.price(*p).mape),
        ]);
    }
    for (i, p) in Price::ALL.iter().enumerate() {
        rows.push(vec![
            if i == 0 { "RMSE" } else { "" }.to_string(),
            p.name().to_string(),
            format!("{:.3}{}", report.proposed.price(*p).rmse, star("rmse", Some(*p))),
            format!("{:.3}", report.naive.price(*p).rmse),
        ]);
    }
    rows.push(vec![
        "RMSEH".into(),
        String::new(),
        format!("{:.3}{}", report.proposed.rmseh, star("rmseh", None)),
        format!("{:.3}", report.naive.rmseh),
    ]);
    rows.push(vec![
        "AR".into(),
        String::new(),
        format!("{:.3}{}", report.proposed.ar, star("ar", None)),
        format!("{:.3}", report.naive.ar),
    ]);
    for (name, n) in counts {
        rows.push(vec![format!("Count of {name}"), String::new(), n.to_string(), String::new()]);
    }
    render(&header, &rows)
}
