//! Line-oriented `section.key = value` parsing.
//!
//! Blank lines and lines starting with `#` are skipped. Keys must be unique;
//! unknown keys are rejected one layer up, where the schema lives.

use crate::error::CliError;
use std::collections::BTreeMap;

/// Parsed key-value text with source line numbers for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KvMap {
    entries: BTreeMap<String, (String, usize)>,
}

impl KvMap {
    pub fn parse(text: &str, path: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::ConfigSyntax {
                    path: path.into(),
                    line: line_no,
                    message: format!("expected `section.key = value`, got `{line}`"),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || !key.contains('.') {
                return Err(CliError::ConfigSyntax {
                    path: path.into(),
                    line: line_no,
                    message: format!("key `{key}` must be of the form `section.key`"),
                });
            }
            if entries.insert(key.clone(), (value, line_no)).is_some() {
                return Err(CliError::ConfigSyntax {
                    path: path.into(),
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }
        Ok(KvMap { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|&(_, l)| l)
    }

    /// Insert or replace a key (sweep overrides).
    pub fn set(&mut self, key: &str, value: &str) {
        self.entries
            .insert(key.to_string(), (value.to_string(), 0));
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_comments_and_blanks() {
        let text = "# header\n\ngrid.nx = 32\nsolver.mode= picard \n";
        let map = KvMap::parse(text, "test.cfg").unwrap();
        assert_eq!(map.get("grid.nx"), Some("32"));
        assert_eq!(map.get("solver.mode"), Some("picard"));
        assert_eq!(map.line_of("grid.nx"), Some(3));
    }

    #[test]
    fn rejects_missing_equals() {
        let err = KvMap::parse("grid.nx 32", "t.cfg").unwrap_err();
        assert!(err.to_string().contains("t.cfg:1"));
    }

    #[test]
    fn rejects_duplicates_and_undotted_keys() {
        assert!(KvMap::parse("grid.nx = 1\ngrid.nx = 2", "t.cfg").is_err());
        assert!(KvMap::parse("nx = 1", "t.cfg").is_err());
    }
}
