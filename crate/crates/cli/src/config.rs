//! Flat `key = value` configuration files.
//!
//! Every physical key is optional and falls back to the nominal operating
//! point; the keys that were filled in are reported back. The timing model is
//! given either as `misalign_half_width_ps` or as `misalign_norm` (mean
//! absolute error over the symbol duration), never both.

use std::collections::BTreeMap;
use std::path::Path;

use ofdmqkd::misalign::{MisalignError, MisalignmentFamily, MisalignmentModel};
use ofdmqkd::params::{table_one_raw, ParamsError, RawParams, SystemParams};
use thiserror::Error;

pub const KEY_MISALIGN_DIST: &str = "misalign_dist";
pub const KEY_MISALIGN_HALF_WIDTH_PS: &str = "misalign_half_width_ps";
pub const KEY_MISALIGN_NORM: &str = "misalign_norm";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` (first set on line {first})")]
    DuplicateKey { line: usize, key: String, first: usize },
    #[error("line {line}: `{key}` has invalid value `{value}`")]
    InvalidValue { line: usize, key: String, value: String },
    #[error("line {line}: `{key}` conflicts with `{other}` on line {other_line}")]
    Conflict {
        line: usize,
        key: String,
        other: String,
        other_line: usize,
    },
    #[error("line {line}: {source}")]
    Params {
        line: usize,
        #[source]
        source: ParamsError,
    },
    #[error("line {line}: `{key}`: {source}")]
    Misalign {
        line: usize,
        key: String,
        #[source]
        source: MisalignError,
    },
}

/// How the timing error was specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MisalignSetting {
    HalfWidth(f64),
    Norm(f64),
}

impl MisalignSetting {
    pub fn model(&self, params: &SystemParams) -> Result<MisalignmentModel, MisalignError> {
        match *self {
            MisalignSetting::HalfWidth(a) => MisalignmentModel::uniform(a),
            MisalignSetting::Norm(x) => MisalignmentModel::from_normalized_mean(x, params.symbol_duration()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub params: SystemParams,
    pub family: MisalignmentFamily,
    pub misalign: MisalignSetting,
    /// Keys absent from the file, in the order they were filled in.
    pub defaulted: Vec<String>,
}

impl Config {
    pub fn model(&self) -> Result<MisalignmentModel, MisalignError> {
        self.misalign.model(&self.params)
    }
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<Config, ConfigError> {
    let defaults = table_one_raw();
    let mut seen: BTreeMap<String, (usize, String)> = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line, text: content.to_string() });
        }
        let known = defaults.contains_key(key)
            || [KEY_MISALIGN_DIST, KEY_MISALIGN_HALF_WIDTH_PS, KEY_MISALIGN_NORM].contains(&key);
        if !known {
            return Err(ConfigError::UnknownKey { line, key: key.to_string() });
        }
        if let Some((first, _)) = seen.get(key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
                first: *first,
            });
        }
        seen.insert(key.to_string(), (line, value.to_string()));
    }

    let line_of = |key: &str| seen.get(key).map_or(0, |(l, _)| *l);
    let number = |key: &str, value: &str| -> Result<f64, ConfigError> {
        value.parse::<f64>().map_err(|_| ConfigError::InvalidValue {
            line: line_of(key),
            key: key.to_string(),
            value: value.to_string(),
        })
    };

    let mut defaulted = Vec::new();
    let mut raw = RawParams::new();
    for (key, default) in &defaults {
        match seen.get(key) {
            Some((_, v)) => {
                raw.insert(key.clone(), number(key, v)?);
            }
            None => {
                raw.insert(key.clone(), *default);
                defaulted.push(key.clone());
            }
        }
    }
    let params = SystemParams::validate(&raw).map_err(|source| ConfigError::Params {
        line: line_of(source.key()),
        source,
    })?;

    let family = match seen.get(KEY_MISALIGN_DIST) {
        Some((line, v)) => v.parse().map_err(|source| ConfigError::Misalign {
            line: *line,
            key: KEY_MISALIGN_DIST.to_string(),
            source,
        })?,
        None => {
            defaulted.push(KEY_MISALIGN_DIST.to_string());
            MisalignmentFamily::Uniform
        }
    };

    let misalign = match (seen.get(KEY_MISALIGN_HALF_WIDTH_PS), seen.get(KEY_MISALIGN_NORM)) {
        (Some((l1, _)), Some((l2, _))) => {
            let (line, key, other, other_line) = if l1 > l2 {
                (*l1, KEY_MISALIGN_HALF_WIDTH_PS, KEY_MISALIGN_NORM, *l2)
            } else {
                (*l2, KEY_MISALIGN_NORM, KEY_MISALIGN_HALF_WIDTH_PS, *l1)
            };
            return Err(ConfigError::Conflict {
                line,
                key: key.to_string(),
                other: other.to_string(),
                other_line,
            });
        }
        (Some((_, v)), None) => MisalignSetting::HalfWidth(number(KEY_MISALIGN_HALF_WIDTH_PS, v)?),
        (None, Some((_, v))) => MisalignSetting::Norm(number(KEY_MISALIGN_NORM, v)?),
        (None, None) => {
            defaulted.push(KEY_MISALIGN_NORM.to_string());
            MisalignSetting::Norm(0.0)
        }
    };
    let config = Config {
        params,
        family,
        misalign,
        defaulted,
    };
    if let Err(source) = config.model() {
        let key = match misalign {
            MisalignSetting::HalfWidth(_) => KEY_MISALIGN_HALF_WIDTH_PS,
            MisalignSetting::Norm(_) => KEY_MISALIGN_NORM,
        };
        return Err(ConfigError::Misalign {
            line: line_of(key),
            key: key.to_string(),
            source,
        });
    }
    Ok(config)
}
