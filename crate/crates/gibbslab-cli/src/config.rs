//! Flat key = value configuration with sections, read from a TOML file.
//! Command-line flags override file values; the resolved snapshot lands in
//! the run manifest.

use crate::CliError;
use std::collections::BTreeMap;
use std::path::Path;

/// Resolved configuration: a flat, ordered key/value map per section.
#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        let Some(path) = path else { return Ok(cfg) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        for (section, value) in table {
            match value {
                toml::Value::Table(inner) => {
                    for (key, v) in inner {
                        cfg.values.insert(format!("{section}.{key}"), flat(&v)?);
                    }
                }
                other => {
                    cfg.values.insert(section, flat(&other)?);
                }
            }
        }
        Ok(cfg)
    }

    /// Look up `section.key`, falling back to `common.key`.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&format!("{section}.{key}"))
            .or_else(|| self.values.get(&format!("common.{key}")))
            .map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: String) {
        self.values.insert(format!("{section}.{key}"), value);
    }

    pub fn snapshot(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}

fn flat(v: &toml::Value) -> Result<String, CliError> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        other => {
            return Err(CliError::Config(format!(
                "config values must be scalars, got {other}"
            )))
        }
    })
}

/// Parse a `lo:hi` window specification.
pub fn parse_window(s: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("window must look like 8:11, got {s}")))?;
    let lo: f64 = a.trim().parse().map_err(|_| CliError::Config(format!("bad window start {a}")))?;
    let hi: f64 = b.trim().parse().map_err(|_| CliError::Config(format!("bad window end {b}")))?;
    Ok((lo, hi))
}
