//! Flat INI-style configuration files.
//!
//! ```text
//! # comment
//! [fit]
//! alpha = 1
//! norm = frobenius
//! ```
//!
//! Keys are case-insensitive and `_` is read as `-`. Keys before the first
//! section header belong to the unnamed global section.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::fail::{CliResult, Failure};

#[derive(Debug, Clone, Default)]
pub struct Section {
    pub name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    pub fn from_pairs<'a>(name: &str, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        Self {
            name: name.to_string(),
            entries: pairs.into_iter().map(|(k, v)| (normalize(k), v.to_string())).collect(),
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// `sections[0]` is the unnamed global section.
#[derive(Debug, Clone)]
pub struct Config {
    pub sections: Vec<Section>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            sections: vec![Section::default()],
        }
    }
}

fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('_', "-")
}

impl Config {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Self::parse(&text).map_err(|e| e.context(format!("in config {}", path.display())))
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut sections = vec![Section::default()];
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Failure::validation(format!("line {}: unterminated section header", no + 1)))?;
                sections.push(Section {
                    name: name.trim().to_ascii_lowercase(),
                    entries: BTreeMap::new(),
                });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::validation(format!("line {}: expected key = value", no + 1)))?;
            let key = normalize(key);
            let section = sections.last_mut().expect("global section");
            if section.entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(Failure::validation(format!("line {}: duplicate key {key:?}", no + 1)));
            }
        }
        Ok(Self { sections })
    }

    /// Entries of the global section overlaid by every section called `name`.
    pub fn view(&self, name: &str) -> Section {
        let mut out = Section {
            name: name.to_string(),
            entries: self.sections[0].entries.clone(),
        };
        for s in self.sections.iter().filter(|s| s.name == name) {
            out.entries.extend(s.entries.clone());
        }
        out
    }

    pub fn sections_named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Section> {
        self.sections
            .iter()
            .filter(move |s| s.name == prefix || s.name.starts_with(&format!("{prefix}.")))
    }
}

/// Parses a config value, naming the key on failure.
pub fn parse_value<T: FromStr>(key: &str, raw: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| Failure::validation(format!("config key {key}: {e} ({raw:?})")))
}

/// Flag value if given, otherwise the config value.
pub fn resolve<T: FromStr>(flag: Option<T>, section: &Section, key: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match flag {
        Some(v) => Ok(Some(v)),
        None => section.raw(key).map(|raw| parse_value(key, raw)).transpose(),
    }
}

/// Boolean switch: set by the flag or by a truthy config value.
pub fn resolve_switch(flag: bool, section: &Section, key: &str) -> CliResult<bool> {
    if flag {
        return Ok(true);
    }
    match section.raw(key).map(|v| v.to_ascii_lowercase()) {
        None => Ok(false),
        Some(v) => match v.as_str() {
            "true" | "yes" | "1" | "on" => Ok(true),
            "false" | "no" | "0" | "off" => Ok(false),
            _ => Err(Failure::validation(format!("config key {key}: expected a boolean, got {v:?}"))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_overrides() {
        let cfg = Config::parse("seed = 3\n# note\n[fit]\nN_Lambda = 20\nalpha=0.5\n[cov]\nalpha = 2\n").unwrap();
        let fit = cfg.view("fit");
        assert_eq!(fit.raw("n-lambda"), Some("20"));
        assert_eq!(fit.raw("seed"), Some("3"));
        assert_eq!(resolve::<f64>(None, &fit, "alpha").unwrap(), Some(0.5));
        assert_eq!(resolve(Some(1.0), &fit, "alpha").unwrap(), Some(1.0));
        assert_eq!(cfg.view("cov").raw("alpha"), Some("2"));
        assert_eq!(cfg.view("bench").raw("alpha"), None);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(Config::parse("[fit\n").is_err());
        assert!(Config::parse("alpha\n").is_err());
        assert!(Config::parse("a = 1\na = 2\n").is_err());
        let cfg = Config::parse("[fit]\nalpha = x\n").unwrap();
        assert!(resolve::<f64>(None, &cfg.view("fit"), "alpha").is_err());
    }

    #[test]
    fn repeated_condition_sections() {
        let cfg = Config::parse("[condition.a]\nn = 1\n[condition.b]\nn = 2\n[conditions]\nn = 3\n").unwrap();
        let names: Vec<&str> = cfg.sections_named("condition").map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["condition.a", "condition.b"]);
    }

    #[test]
    fn switches() {
        let cfg = Config::parse("one-se = yes\ncalibrate = maybe\n").unwrap();
        let s = cfg.view("fit");
        assert!(resolve_switch(false, &s, "one-se").unwrap());
        assert!(resolve_switch(true, &s, "standardize").unwrap());
        assert!(!resolve_switch(false, &s, "standardize").unwrap());
        assert!(resolve_switch(false, &s, "calibrate").is_err());
    }
}
