//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// One `key = value` per line; `#` starts a comment line. Repeated keys
    /// are rejected.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Config::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(CliError::config(format!("line {}: empty key", i + 1)));
            }
            if cfg.values.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(CliError::config(format!("line {}: key `{k}` repeated", i + 1)));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, text: &str) -> CliResult<()> {
        let (k, v) = text
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{text}` is not `key=value`")))?;
        if k.trim().is_empty() {
            return Err(CliError::config(format!("override `{text}` has an empty key")));
        }
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        let unknown: Vec<&str> = self
            .values
            .keys()
            .map(String::as_str)
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::config(format!("unknown key(s): {}", unknown.join(", "))))
        }
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.str(key).unwrap_or(default)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.str(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::config(format!("value `{v}` for `{key}` is not valid")))
            })
            .transpose()
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    pub fn require<T: FromStr>(&self, key: &str) -> CliResult<T> {
        self.get(key)?
            .ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }
}
