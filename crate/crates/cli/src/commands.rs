use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use ohlcast::metrics::{format_comparison_table, format_eval_table};
use ohlcast::ohlc::io::{read_ohlc_csv, write_ohlc_csv};
use ohlcast::ohlc::{sanitize_with_report, SanitizeConfig, SanitizeReport};
use ohlcast::pipeline::{rolling_backtest, run_window, transform_series, ModelCounts, WindowDiagnostics};
use ohlcast::simgen::{generate, preset};
use ohlcast::{BacktestResult, ModelKind, OhlcBar, OhlcSeries, PipelineConfig, WindowSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Source};
use crate::CliError;

pub const OUT_ENV: &str = "OHLCAST_OUT";

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut File) -> Result<(), CliError>) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    body(tmp.as_file_mut())?;
    tmp.as_file_mut().flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_atomic(path, |f| {
        serde_json::to_writer_pretty(&mut *f, value)?;
        writeln!(f).map_err(|e| CliError::Io(e.to_string()))
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    write_atomic(path, |f| f.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())))
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    PipelineConfig {
        alpha_adf: cfg.alpha_adf,
        alpha_johansen: cfg.alpha_johansen,
        p_max: cfg.p_max,
        sanitize: SanitizeConfig::with_seed(cfg.seed),
        ..PipelineConfig::default()
    }
}

/// Loads the series and sanitizes file input.
fn load(cfg: &RunConfig) -> Result<(OhlcSeries, SanitizeReport), CliError> {
    match cfg.source()? {
        Source::Scenario(name) => {
            let spec = preset(name)?.with_seed(cfg.seed);
            Ok((generate(&spec)?.1, SanitizeReport::default()))
        }
        Source::Input(path) => {
            let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            let raw = read_ohlc_csv(BufReader::new(file))?;
            Ok(sanitize_with_report(&raw, &SanitizeConfig::with_seed(cfg.seed))?)
        }
    }
}

/// Runs `f` on a pool of the configured size.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    let name = match cfg.source()? {
        Source::Scenario(s) => s,
        Source::Input(_) => return Err(CliError::Usage("simulate takes --scenario, not --input".into())),
    };
    let spec = preset(name)?.with_seed(cfg.seed);
    let (_, series) = generate(&spec)?;
    let path = match &cfg.out {
        Some(p) => p.clone(),
        None => out_dir(cfg).join(format!("{}_seed{}.csv", cfg.source()?.tag(), cfg.seed)),
    };
    write_atomic(&path, |f| Ok(write_ohlc_csv(f, &series)?))?;
    write_json(&path.with_extension("json"), &spec)?;
    println!("{} bars -> {}", series.len(), path.display());
    Ok(())
}

/// One `(q, m)` backtest as stored on disk.
#[derive(Debug, Serialize, Deserialize)]
pub struct BacktestFile {
    pub tag: String,
    pub seed: u64,
    pub config: PipelineConfig,
    pub result: BacktestResult,
}

#[derive(Debug, Serialize, Deserialize)]
struct TallyRow {
    q: usize,
    m: usize,
    windows: usize,
    failed: usize,
    counts: ModelCounts,
}

fn stem(tag: &str, q: usize, m: usize) -> String {
    format!("{tag}_q{q}_m{m}")
}

pub fn backtest(cfg: &RunConfig) -> Result<(), CliError> {
    let (series, report) = load(cfg)?;
    let tag = cfg.source()?.tag();
    let cells: Vec<(usize, usize)> = cfg.q.iter().flat_map(|&q| cfg.m.iter().map(move |&m| (q, m))).collect();
    for &(q, m) in &cells {
        WindowSpec::new(q, m)?;
        if series.len() < q + m {
            return Err(CliError::Usage(format!(
                "series has {} bars, fewer than q + m = {}",
                series.len(),
                q + m
            )));
        }
    }
    let pc = pipeline_config(cfg);
    let results = with_workers(cfg.workers, || {
        cells
            .par_iter()
            .map(|&(q, m)| rolling_backtest(&series, WindowSpec::new(q, m)?, &pc))
            .collect::<Result<Vec<_>, _>>()
    })??;

    let dir = out_dir(cfg);
    let mut tally = Vec::with_capacity(cells.len());
    let mut total = ModelCounts::default();
    for ((q, m), mut result) in cells.iter().copied().zip(results) {
        result.sanitize_report = report;
        let name = stem(&tag, q, m);
        write_atomic(&dir.join(format!("{name}.csv")), |f| Ok(result.write_csv(f)?))?;
        tally.push(TallyRow {
            q,
            m,
            windows: result.windows.len(),
            failed: result.failed.len(),
            counts: result.model_counts,
        });
        total.var += result.model_counts.var;
        total.vec += result.model_counts.vec;
        total.diff_var += result.model_counts.diff_var;
        if cells.len() == 1 {
            match result.compare_naive(m) {
                Ok(c) => print!("{}", format_comparison_table(&c, &counts_rows(&result.model_counts))),
                Err(e) => log::warn!("no naive comparison: {e}"),
            }
        }
        let file = BacktestFile {
            tag: tag.clone(),
            seed: cfg.seed,
            config: pc,
            result,
        };
        write_json(&dir.join(format!("{name}.json")), &file)?;
    }
    write_json(&dir.join(format!("{tag}_tally.json")), &tally)?;

    println!("{:>4} {:>3} {:>7} {:>6} {:>6} {:>6} {:>8}", "q", "m", "windows", "failed", "VAR", "VEC", "DIFF_VAR");
    for t in &tally {
        println!(
            "{:>4} {:>3} {:>7} {:>6} {:>6} {:>6} {:>8}",
            t.q, t.m, t.windows, t.failed, t.counts.var, t.counts.vec, t.counts.diff_var
        );
    }
    println!(
        "Count of VAR {}, Count of VEC {}, Count of DIFF_VAR {} ({} result files in {})",
        total.var,
        total.vec,
        total.diff_var,
        tally.len(),
        dir.display()
    );
    Ok(())
}

fn counts_rows(c: &ModelCounts) -> [(&'static str, usize); 3] {
    [("VAR", c.var), ("VEC", c.vec), ("DIFF_VAR", c.diff_var)]
}

/// Result files are named `{tag}_q{q}_m{m}.json`.
fn is_result_name(name: &str) -> bool {
    let Some(base) = name.strip_suffix(".json") else {
        return false;
    };
    let Some((rest, m)) = base.rsplit_once("_m") else {
        return false;
    };
    let Some((_, q)) = rest.rsplit_once("_q") else {
        return false;
    };
    !q.is_empty() && !m.is_empty() && q.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit())
}

/// Columns per rendered table, to keep sweeps readable.
const TABLE_COLUMNS: usize = 9;

pub fn report(cfg: &RunConfig, dir: Option<&Path>, naive: bool) -> Result<(), CliError> {
    let src = dir.map(Path::to_path_buf).unwrap_or_else(|| out_dir(cfg));
    let entries = std::fs::read_dir(&src).map_err(|e| CliError::Io(format!("{}: {e}", src.display())))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(is_result_name))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(CliError::Usage(format!("no backtest results (*_q<q>_m<m>.json) in {}", src.display())));
    }
    let mut groups: BTreeMap<String, Vec<BacktestFile>> = BTreeMap::new();
    for path in names {
        let file = File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let parsed: BacktestFile = serde_json::from_reader(BufReader::new(file))
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        groups.entry(parsed.tag.clone()).or_default().push(parsed);
    }

    let dest = cfg.out.clone().unwrap_or_else(|| src.clone());
    for (tag, mut files) in groups {
        files.sort_by_key(|f| (f.result.spec.m, f.result.spec.q));
        let mut text = format!("# {tag}\n");
        let mut long = Vec::new();
        let mut columns = Vec::new();
        for f in &files {
            let WindowSpec { q, m } = f.result.spec;
            if f.result.windows.is_empty() {
                text.push_str(&format!("q={q} m={m}: no successful windows\n"));
                continue;
            }
            let eval = f.result.evaluate(m)?;
            for (price, metric, value) in eval.long_rows() {
                long.push((q, m, price, metric, value));
            }
            columns.push((format!("q={q} m={m}"), eval));
        }
        for chunk in columns.chunks(TABLE_COLUMNS) {
            text.push('\n');
            text.push_str(&format_eval_table(chunk));
        }
        if naive {
            for f in &files {
                let WindowSpec { q, m } = f.result.spec;
                text.push_str(&format!("\nq={q} m={m} against the naive forecast\n"));
                match f.result.compare_naive(m) {
                    Ok(c) => text.push_str(&format_comparison_table(&c, &counts_rows(&f.result.model_counts))),
                    Err(e) => text.push_str(&format!("not available: {e}\n")),
                }
            }
        }
        print!("{text}");
        write_text(&dest.join(format!("{tag}_report.txt")), &text)?;
        write_atomic(&dest.join(format!("{tag}_long.csv")), |f| {
            let mut w = csv::Writer::from_writer(f);
            w.write_record(["q", "m", "price", "metric", "value"])?;
            for (q, m, price, metric, value) in &long {
                w.write_record([q.to_string(), m.to_string(), price.to_string(), metric.to_string(), value.to_string()])?;
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))
        })?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ForecastBar {
    horizon: usize,
    #[serde(flatten)]
    bar: OhlcBar,
}

#[derive(Debug, Serialize)]
struct ForecastOutput {
    source: String,
    series_len: usize,
    q: usize,
    m: usize,
    /// Label of the last in-sample bar.
    last_label: String,
    model: ModelKind,
    p: usize,
    r: Option<usize>,
    diagnostics: WindowDiagnostics,
    sanitized: bool,
    sanitize_report: SanitizeReport,
    bars: Vec<ForecastBar>,
}

pub fn forecast(cfg: &RunConfig) -> Result<(), CliError> {
    let (q, m) = cfg.single()?;
    WindowSpec::new(q, m)?;
    let (series, report) = load(cfg)?;
    let t = series.len();
    if t < q {
        return Err(CliError::Usage(format!("series has {t} bars, fewer than q = {q}")));
    }
    let tail = series.slice(t - q..t)?;
    let run = run_window(&transform_series(&tail)?, m, &pipeline_config(cfg))?;
    let out = ForecastOutput {
        source: cfg.source()?.tag(),
        series_len: t,
        q,
        m,
        last_label: series.labels()[t - 1].clone(),
        model: run.model,
        p: run.p,
        r: run.r,
        diagnostics: run.diagnostics,
        sanitized: report.modified(),
        sanitize_report: report,
        bars: run
            .bars
            .into_iter()
            .enumerate()
            .map(|(h, b)| ForecastBar {
                horizon: h + 1,
                bar: OhlcBar { t: t + h + 1, ..b },
            })
            .collect(),
    };
    match &cfg.out {
        Some(path) => write_json(path, &out),
        None => {
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
    }
}

/// Rechecks every row of an OHLC CSV against the bar constraints.
pub fn validate(path: &Path) -> Result<(), CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let raw = read_ohlc_csv(BufReader::new(file))?;
    let bad: Vec<String> = raw
        .iter()
        .enumerate()
        .filter_map(|(i, r)| {
            OhlcBar::new(i + 1, r.open, r.high, r.low, r.close)
                .err()
                .map(|e| format!("row {} ({}): {e}", i + 1, r.label))
        })
        .collect();
    if bad.is_empty() {
        println!("{}: {} bars, all valid", path.display(), raw.len());
        Ok(())
    } else {
        for b in bad.iter().take(20) {
            eprintln!("{b}");
        }
        Err(CliError::Usage(format!("{} of {} bars invalid", bad.len(), raw.len())))
    }
}
