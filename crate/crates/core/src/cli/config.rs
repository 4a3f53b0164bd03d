//! `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Relative paths are resolved
//! against the directory holding the config file. The keys `k1` and `k2`
//! may also come from the `DUALMARK_K1` / `DUALMARK_K2` environment
//! variables, which take precedence over the file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::attacks::{AlterMode, AttackKind};
use crate::error::{Error, Result};
use crate::model::{MarkConfig, SecretKeys};

pub const ENV_K1: &str = "DUALMARK_K1";
pub const ENV_K2: &str = "DUALMARK_K2";

pub const DEFAULT_THRESHOLD: f64 = 90.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub watermark: Option<PathBuf>,
    pub recovered: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
    pub pk_column: Option<String>,
    pub auto_pk: bool,
    pub numeric_columns: Vec<(String, u32)>,
    pub datetime_columns: Vec<String>,
    pub k1: Option<i64>,
    pub k2: Option<i64>,
    /// Minimum match rate, in percent, for `verify` to succeed.
    pub threshold: f64,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub seed: Option<u64>,
    pub attack: Option<AttackKind>,
    pub fraction: Option<f64>,
    pub alter_mode: AlterMode,
    pub bench_n: Option<usize>,
    pub bench_trials: Option<usize>,
    pub bench_fractions: Option<Vec<f64>>,
    pub bench_alter_mode: Option<AlterMode>,
    pub bench_svg: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            output: None,
            watermark: None,
            recovered: None,
            report_dir: None,
            pk_column: None,
            auto_pk: true,
            numeric_columns: Vec::new(),
            datetime_columns: Vec::new(),
            k1: None,
            k2: None,
            threshold: DEFAULT_THRESHOLD,
            width: None,
            height: None,
            seed: None,
            attack: None,
            fraction: None,
            alter_mode: AlterMode::default(),
            bench_n: None,
            bench_trials: None,
            bench_fractions: None,
            bench_alter_mode: None,
            bench_svg: false,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected a boolean, got `{value}`"))),
    }
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let path = |v: &str| {
            let p = PathBuf::from(v);
            if p.is_relative() {
                base_dir.join(p)
            } else {
                p
            }
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "input" => cfg.input = Some(path(value)),
                "output" => cfg.output = Some(path(value)),
                "watermark" => cfg.watermark = Some(path(value)),
                "recovered" => cfg.recovered = Some(path(value)),
                "report_dir" => cfg.report_dir = Some(path(value)),
                "pk_column" => cfg.pk_column = Some(value.to_string()),
                "auto_pk" => cfg.auto_pk = parse_bool(key, value)?,
                "numeric_columns" => {
                    cfg.numeric_columns = list(value)
                        .map(|item| match item.split_once(':') {
                            Some((name, d)) => Ok((name.trim().to_string(), parse_num(key, d.trim())?)),
                            None => Ok((item.to_string(), 0)),
                        })
                        .collect::<Result<_>>()?;
                }
                "datetime_columns" => cfg.datetime_columns = list(value).map(str::to_string).collect(),
                "k1" => cfg.k1 = Some(parse_num(key, value)?),
                "k2" => cfg.k2 = Some(parse_num(key, value)?),
                "threshold" => cfg.threshold = parse_num(key, value)?,
                "width" => cfg.width = Some(parse_num(key, value)?),
                "height" => cfg.height = Some(parse_num(key, value)?),
                "seed" => cfg.seed = Some(parse_num(key, value)?),
                "attack" => cfg.attack = Some(value.parse()?),
                "fraction" => cfg.fraction = Some(parse_num(key, value)?),
                "alter_mode" => cfg.alter_mode = value.parse()?,
                "bench_n" => cfg.bench_n = Some(parse_num(key, value)?),
                "bench_trials" => cfg.bench_trials = Some(parse_num(key, value)?),
                "bench_fractions" => {
                    cfg.bench_fractions = Some(list(value).map(|f| parse_num(key, f)).collect::<Result<_>>()?);
                }
                "bench_alter_mode" => cfg.bench_alter_mode = Some(value.parse()?),
                "bench_svg" => cfg.bench_svg = parse_bool(key, value)?,
                _ => return Err(Error::Config(format!("line {}: unknown key `{key}`", lineno + 1))),
            }
        }
        if !(0.0..=100.0).contains(&cfg.threshold) {
            return Err(Error::Config(format!("threshold {} is outside 0..=100", cfg.threshold)));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RunConfig::parse(&text, base)
    }

    pub fn mark_config(&self) -> Result<MarkConfig> {
        let pk = self
            .pk_column
            .clone()
            .ok_or_else(|| Error::Config("`pk_column` is not set".into()))?;
        MarkConfig::new(pk, self.numeric_columns.clone(), self.datetime_columns.clone())
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Keys from the environment, falling back to the config file.
    pub fn keys(&self) -> Result<SecretKeys> {
        self.keys_with(|name| std::env::var(name).ok())
    }

    pub fn keys_with(&self, env: impl Fn(&str) -> Option<String>) -> Result<SecretKeys> {
        let pick = |name: &str, file: Option<i64>| -> Result<i64> {
            match env(name) {
                Some(v) => parse_num(name, v.trim()),
                None => file.ok_or_else(|| {
                    Error::Config(format!("key not configured: set it in the config file or via {name}"))
                }),
            }
        };
        SecretKeys::new(pick(ENV_K1, self.k1)?, pick(ENV_K2, self.k2)?)
    }

    /// Keys if any are configured at all, otherwise `None`.
    pub fn optional_keys(&self) -> Result<Option<SecretKeys>> {
        let env_set = std::env::var_os(ENV_K1).is_some() || std::env::var_os(ENV_K2).is_some();
        if env_set || self.k1.is_some() || self.k2.is_some() {
            self.keys().map(Some)
        } else {
            Ok(None)
        }
    }
}
