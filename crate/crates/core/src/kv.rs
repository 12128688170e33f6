//! Plain-text key-value configuration files.
//!
//! Format: `[section]` headers, `key = value` lines, `#` or `;` comments,
//! blank lines ignored. Keys before the first section header live in the
//! unnamed section `""`. Duplicate keys within a section are an error, as is
//! any syntax the grammar above does not cover. Consumers declare the keys
//! they understand and [`KvConfig::check_schema`] rejects everything else, so
//! a typo in a config file fails loudly instead of being silently ignored.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Parsed configuration: ordered sections of ordered key-value pairs.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl KvConfig {
    /// Parse from text; strict about syntax and duplicate keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| {
                    Error::Config(format!("line {}: unterminated section header", ln + 1))
                })?;
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::Config(format!(
                        "line {}: empty section name",
                        ln + 1
                    )));
                }
                current = name.to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    ln + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", ln + 1)));
            }
            let section = sections.entry(current.clone()).or_default();
            if section.insert(key.to_string(), value.to_string()).is_some() {
                return Err(Error::Config(format!(
                    "line {}: duplicate key `{key}` in section `[{current}]`",
                    ln + 1
                )));
            }
        }
        Ok(KvConfig { sections })
    }

    /// Raw string lookup.
    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        self.parse_with(section, key, |s| s.parse::<f64>().ok())
    }

    pub fn get_u32(&self, section: &str, key: &str) -> Result<Option<u32>> {
        self.parse_with(section, key, |s| s.parse::<u32>().ok())
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>> {
        self.parse_with(section, key, |s| s.parse::<u64>().ok())
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        self.parse_with(section, key, |s| s.parse::<usize>().ok())
    }

    pub fn get_bool(&self, section: &str, key: &str) -> Result<Option<bool>> {
        self.parse_with(section, key, |s| match s {
            "true" | "yes" | "on" | "1" => Some(true),
            "false" | "no" | "off" | "0" => Some(false),
            _ => None,
        })
    }

    fn parse_with<T>(
        &self,
        section: &str,
        key: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(raw) => f(raw).map(Some).ok_or_else(|| {
                Error::Config(format!(
                    "section `[{section}]`, key `{key}`: cannot parse value `{raw}`"
                ))
            }),
        }
    }

    /// Iterate over `(section, key, value)` triples.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.sections.iter().flat_map(|(s, kv)| {
            kv.iter()
                .map(move |(k, v)| (s.as_str(), k.as_str(), v.as_str()))
        })
    }

    /// Reject any present key not covered by `allowed`
    /// (`(section, keys-in-section)` pairs).
    pub fn check_schema(&self, allowed: &[(&str, &[&str])]) -> Result<()> {
        for (section, kv) in &self.sections {
            let Some((_, keys)) = allowed.iter().find(|(s, _)| s == section) else {
                return Err(Error::Config(format!("unknown section `[{section}]`")));
            };
            for key in kv.keys() {
                if !keys.contains(&key.as_str()) {
                    return Err(Error::Config(format!(
                        "unknown key `{key}` in section `[{section}]`"
                    )));
                }
            }
        }
        Ok(())
    }
}
