//! Flat `key = value` configuration with dotted keys.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}, line {line}: {msg}")]
    Syntax {
        origin: String,
        line: usize,
        msg: String,
    },
    #[error("invalid override {0:?} (expected key=value)")]
    Override(String),
    #[error("unknown key {key:?}; accepted keys: {accepted}")]
    UnknownKey { key: String, accepted: String },
    #[error("key {key}: cannot parse {value:?} as {ty}")]
    Value {
        key: String,
        value: String,
        ty: &'static str,
    },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlatConfig {
    entries: BTreeMap<String, String>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        })
}

impl FlatConfig {
    /// Parses `key = value` lines; `#` starts a comment, blank lines are
    /// skipped, later keys replace earlier ones.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| ConfigError::Syntax {
                origin: origin.to_string(),
                line: i + 1,
                msg: msg.to_string(),
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`"))?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(err("malformed key"));
            }
            entries.insert(k.to_string(), v.to_string());
        }
        Ok(FlatConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies `key=value` overrides in order.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<(), ConfigError> {
        for s in sets {
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| ConfigError::Override(s.clone()))?;
            let k = k.trim();
            if !valid_key(k) {
                return Err(ConfigError::Override(s.clone()));
            }
            self.entries.insert(k.to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    /// Rejects keys outside `accepted`.
    pub fn check_keys(&self, accepted: &[&str]) -> Result<(), ConfigError> {
        match self
            .entries
            .keys()
            .find(|k| !accepted.contains(&k.as_str()))
        {
            Some(k) => Err(ConfigError::UnknownKey {
                key: k.clone(),
                accepted: accepted.join(", "),
            }),
            None => Ok(()),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn get<V: FromStr>(&self, key: &str, default: V) -> Result<V, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| ConfigError::Value {
                key: key.to_string(),
                value: v.to_string(),
                ty: std::any::type_name::<V>(),
            }),
        }
    }

    /// Comma-separated list.
    pub fn get_list<V: FromStr>(&self, key: &str, default: Vec<V>) -> Result<Vec<V>, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| s.trim())
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| ConfigError::Value {
                        key: key.to_string(),
                        value: s.to_string(),
                        ty: std::any::type_name::<V>(),
                    })
                })
                .collect(),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.entries.iter()
    }
}
