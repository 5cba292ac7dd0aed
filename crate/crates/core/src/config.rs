//! Line-oriented `key = value` run configuration.
//!
//! ```text
//! # dictionary training
//! features = data/train/manifest.csv
//! atoms = 32
//! k = 5          # matching pursuit budget
//! ```
//!
//! Blank lines and `#` comments are ignored. Every command validates its
//! keys against a schema, so misspelled keys are errors rather than silently
//! ignored settings. Relative paths resolve against the config file's
//! directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usize,
    U64,
    F64,
    Bool,
    Str,
    Path,
    /// Comma-separated non-negative integers.
    UsizeList,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: Kind,
}

pub const fn key(name: &'static str, kind: Kind) -> KeySpec {
    KeySpec { name, kind }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, (String, usize)>,
    base_dir: PathBuf,
}

impl RunConfig {
    /// Parses config text. `base_dir` anchors relative paths.
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line_no}: expected key = value")))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                return Err(Error::Config(format!("line {line_no}: invalid key {k:?}")));
            }
            if values.insert(k.to_string(), (v.to_string(), line_no)).is_some() {
                return Err(Error::Config(format!("line {line_no}: duplicate key {k}")));
            }
        }
        Ok(Self {
            values,
            base_dir: base_dir.into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, base)
    }

    /// Sets or replaces a value, as a command line override would.
    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), (value.into(), 0));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    /// Rejects unknown keys and values that do not parse as their kind.
    pub fn validate(&self, schema: &[KeySpec]) -> Result<()> {
        for (k, (v, line)) in &self.values {
            let spec = schema.iter().find(|s| s.name == k).ok_or_else(|| {
                let known: Vec<&str> = schema.iter().map(|s| s.name).collect();
                Error::Config(format!(
                    "{}unknown key {k} (expected one of: {})",
                    at_line(*line),
                    known.join(", ")
                ))
            })?;
            check_kind(k, v, spec.kind).map_err(|m| Error::Config(format!("{}{m}", at_line(*line))))?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        let v = self.parsed::<f64>(key)?.unwrap_or(default);
        if !v.is_finite() {
            return Err(Error::Config(format!("key {key}: value must be finite")));
        }
        Ok(v)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_bool(v).ok_or_else(|| Error::Config(format!("key {key}: expected true or false"))),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|v| self.base_dir.join(v))
    }

    pub fn require_path(&self, key: &str) -> Result<PathBuf> {
        self.path(key)
            .ok_or_else(|| Error::Config(format!("missing required key {key}")))
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => parse_list(v).ok_or_else(|| Error::Config(format!("key {key}: expected a list like 1,2,3"))),
        }
    }
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!("line {line}: ")
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

fn parse_list(v: &str) -> Option<Vec<usize>> {
    let items: Option<Vec<usize>> = v.split(',').map(|s| s.trim().parse().ok()).collect();
    items.filter(|l| !l.is_empty())
}

fn check_kind(key: &str, v: &str, kind: Kind) -> std::result::Result<(), String> {
    let ok = match kind {
        Kind::Usize => v.parse::<usize>().is_ok(),
        Kind::U64 => v.parse::<u64>().is_ok(),
        Kind::F64 => v.parse::<f64>().is_ok_and(f64::is_finite),
        Kind::Bool => parse_bool(v).is_some(),
        Kind::Str | Kind::Path => !v.is_empty(),
        Kind::UsizeList => parse_list(v).is_some(),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("key {key}: {v:?} is not a valid {kind:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[KeySpec] = &[
        key("atoms", Kind::Usize),
        key("lambda", Kind::F64),
        key("features", Kind::Path),
        key("dims", Kind::UsizeList),
        key("whiten", Kind::Bool),
    ];

    #[test]
    fn parses_comments_and_paths() {
        let text = "# header\natoms = 32  # trailing\n\nfeatures = data/m.csv\ndims = 2, 3\n";
        let cfg = RunConfig::parse(text, "/cfg").unwrap();
        cfg.validate(SCHEMA).unwrap();
        assert_eq!(cfg.usize_or("atoms", 1).unwrap(), 32);
        assert_eq!(cfg.f64_or("lambda", 0.5).unwrap(), 0.5);
        assert_eq!(cfg.path("features").unwrap(), PathBuf::from("/cfg/data/m.csv"));
        assert_eq!(cfg.usize_list_or("dims", &[]).unwrap(), vec![2, 3]);
        assert!(!cfg.bool_or("whiten", false).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("atoms 3", ".").is_err());
        assert!(RunConfig::parse("atoms = 3\natoms = 4", ".").is_err());
        let unknown = RunConfig::parse("atom = 3", ".").unwrap();
        let err = unknown.validate(SCHEMA).unwrap_err();
        assert_eq!(err.kind(), "config");
        assert!(err.to_string().contains("line 1"));
        let bad = RunConfig::parse("atoms = -3", ".").unwrap();
        assert!(bad.validate(SCHEMA).is_err());
        let bad = RunConfig::parse("lambda = nan", ".").unwrap();
        assert!(bad.validate(SCHEMA).is_err());
        assert!(RunConfig::default().require_path("features").is_err());
    }

    #[test]
    fn overrides_replace_values() {
        let mut cfg = RunConfig::parse("atoms = 3", ".").unwrap();
        cfg.set("atoms", "5");
        assert_eq!(cfg.usize_or("atoms", 0).unwrap(), 5);
    }
}
