//! Flat `key = value` text with optional `[section]` headers.
//!
//! Used for regime presets, experiment configs, run manifests and model
//! sidecars. Keys inside a section are reported as `section.key`. Lines
//! starting with `#` are comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Parsed key/value document. Remembers which keys were consumed so that
/// leftovers can be rejected.
#[derive(Debug, Clone, Default)]
pub struct KvDoc {
    entries: BTreeMap<String, (usize, String)>,
    taken: std::collections::BTreeSet<String>,
}

impl KvDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {lineno}: unterminated section header")))?
                    .trim();
                if name.is_empty() {
                    return Err(Error::Config(format!("line {lineno}: empty section name")));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Config(format!("line {lineno}: empty key")));
            }
            let full = if section.is_empty() {
                key.to_string()
            } else {
                format!("{section}.{key}")
            };
            if entries.insert(full.clone(), (lineno, value.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {lineno}: duplicate key `{full}`")));
            }
        }
        Ok(KvDoc { entries, taken: Default::default() })
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn take_str(&mut self, key: &str) -> Option<String> {
        let v = self.entries.get(key).map(|(_, v)| v.clone());
        if v.is_some() {
            self.taken.insert(key.to_string());
        }
        v
    }

    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some((lineno, raw)) = self.entries.get(key).cloned() else {
            return Ok(None);
        };
        self.taken.insert(key.to_string());
        raw.parse::<T>()
            .map(Some)
            .map_err(|_| Error::Config(format!("line {lineno}: cannot parse value `{raw}` for `{key}`")))
    }

    pub fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?
            .ok_or_else(|| Error::Config(format!("missing key `{key}`")))
    }

    /// Fails on the first key that was never taken.
    pub fn reject_unknown(&self) -> Result<()> {
        match self.entries.iter().find(|(k, _)| !self.taken.contains(*k)) {
            Some((k, (lineno, _))) => Err(Error::Config(format!("line {lineno}: unknown key `{k}`"))),
            None => Ok(()),
        }
    }
}

/// Serializer counterpart of [`KvDoc`]. Floats use Rust's shortest
/// round-trip formatting so values survive a write/read cycle exactly.
#[derive(Debug, Default)]
pub struct KvWriter {
    out: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn comment(&mut self, text: &str) -> &mut Self {
        for line in text.lines() {
            let _ = writeln!(self.out, "# {line}");
        }
        self
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "[{name}]");
        self
    }

    pub fn entry(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.out, "{key} = {value}");
        self
    }

    pub fn finish(&self) -> String {
        self.out.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_prefix_keys() {
        let mut doc = KvDoc::parse("top = 1\n[model]\n# comment\nF1 = 0.5\n").unwrap();
        assert_eq!(doc.require::<i32>("top").unwrap(), 1);
        assert_eq!(doc.require::<f64>("model.F1").unwrap(), 0.5);
        doc.reject_unknown().unwrap();
    }

    #[test]
    fn unknown_and_duplicate_keys_fail() {
        let mut doc = KvDoc::parse("a = 1\nb = 2\n").unwrap();
        doc.require::<i32>("a").unwrap();
        let err = doc.reject_unknown().unwrap_err().to_string();
        assert!(err.contains("unknown key `b`"), "{err}");
        assert!(KvDoc::parse("a = 1\na = 2\n").is_err());
        assert!(KvDoc::parse("just words\n").is_err());
    }

    #[test]
    fn bad_value_reports_line() {
        let mut doc = KvDoc::parse("\nx = abc\n").unwrap();
        let err = doc.require::<f64>("x").unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }
}
