//! Run configuration: JSON file values overridden by command-line flags.

use std::path::{Path, PathBuf};

use ohlcast::stats::Significance;
use serde::Deserialize;

use crate::CliError;

/// Values accepted in a `--config` JSON file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub scenario: Option<String>,
    pub input: Option<PathBuf>,
    pub q: Option<GridValue>,
    pub m: Option<GridValue>,
    pub seed: Option<u64>,
    pub p_max: Option<usize>,
    pub alpha_adf: Option<f64>,
    pub alpha_johansen: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// `40`, `[40, 50]` or `"40-70:10"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    One(usize),
    List(Vec<usize>),
    Text(String),
}

impl GridValue {
    fn values(&self) -> Result<Vec<usize>, CliError> {
        match self {
            GridValue::One(v) => Ok(vec![*v]),
            GridValue::List(v) => Ok(v.clone()),
            GridValue::Text(s) => parse_grid(s),
        }
    }
}

/// Parses `40`, `40,50,70`, `30-70` or `40-70:10` into ascending distinct values.
pub fn parse_grid(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse grid `{s}`; use 40, 40,50,70 or 30-70[:step]"));
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let mut out = Vec::new();
    for part in s.split(',') {
        let (range, step) = match part.split_once(':') {
            Some((r, st)) => (r, num(st)?),
            None => (part, 1),
        };
        match range.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if step == 0 || a > b {
                    return Err(bad());
                }
                out.extend((a..=b).step_by(step));
            }
            None => out.push(num(range)?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Where the bars come from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Scenario(String),
    Input(PathBuf),
}

impl Source {
    /// File-name prefix for outputs.
    pub fn tag(&self) -> String {
        match self {
            Source::Scenario(s) => format!("scenario{}", s.strip_prefix("scenario").unwrap_or(s)),
            Source::Input(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "input".into()),
        }
    }
}

/// Resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Option<Source>,
    pub q: Vec<usize>,
    pub m: Vec<usize>,
    pub seed: u64,
    pub p_max: Option<usize>,
    pub alpha_adf: Significance,
    pub alpha_johansen: Significance,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Flag values as parsed by clap; `None` means not given.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub scenario: Option<String>,
    pub input: Option<PathBuf>,
    pub q: Option<String>,
    pub m: Option<String>,
    pub seed: Option<u64>,
    pub p_max: Option<usize>,
    pub alpha_adf: Option<f64>,
    pub alpha_johansen: Option<f64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_Q: usize = 40;
pub const DEFAULT_M: usize = 1;

fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn significance(v: f64, flag: &str) -> Result<Significance, CliError> {
    Significance::try_from(v).map_err(|_| CliError::Usage(format!("{flag} must be 0.01, 0.05 or 0.10, got {v}")))
}

impl RunConfig {
    /// Flags win over the config file, which wins over built-in defaults.
    pub fn resolve(o: Overrides) -> Result<Self, CliError> {
        let file = match &o.config {
            Some(p) => load_file(p)?,
            None => FileConfig::default(),
        };
        let scenario = o.scenario.or(file.scenario);
        let input = o.input.or(file.input);
        let source = match (scenario, input) {
            (Some(_), Some(_)) => return Err(CliError::Usage("give either a scenario or an input file, not both".into())),
            (Some(s), None) => Some(Source::Scenario(s)),
            (None, Some(p)) => Some(Source::Input(p)),
            (None, None) => None,
        };
        let grid = |flag: Option<String>, file: Option<GridValue>, default: usize, name: &str| {
            let v = match (flag, file) {
                (Some(s), _) => parse_grid(&s)?,
                (None, Some(g)) => g.values()?,
                (None, None) => vec![default],
            };
            if v.is_empty() || v.contains(&0) {
                return Err(CliError::Usage(format!("{name} values must be at least 1")));
            }
            Ok(v)
        };
        let q = grid(o.q, file.q, DEFAULT_Q, "q")?;
        let m = grid(o.m, file.m, DEFAULT_M, "m")?;
        let workers = o.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Usage("workers must be at least 1".into()));
        }
        Ok(RunConfig {
            source,
            q,
            m,
            seed: o.seed.or(file.seed).unwrap_or(0),
            p_max: o.p_max.or(file.p_max),
            alpha_adf: significance(o.alpha_adf.or(file.alpha_adf).unwrap_or(0.05), "alpha-adf")?,
            alpha_johansen: significance(o.alpha_johansen.or(file.alpha_johansen).unwrap_or(0.05), "alpha-johansen")?,
            workers,
            out: o.out.or(file.out),
        })
    }

    pub fn source(&self) -> Result<&Source, CliError> {
        self.source
            .as_ref()
            .ok_or_else(|| CliError::Usage("no data source; pass --scenario or --input".into()))
    }

    /// The single `(q, m)` pair for commands that do not sweep.
    pub fn single(&self) -> Result<(usize, usize), CliError> {
        match (self.q.as_slice(), self.m.as_slice()) {
            ([q], [m]) => Ok((*q, *m)),
            _ => Err(CliError::Usage("this command takes a single q and m".into())),
        }
    }
}
