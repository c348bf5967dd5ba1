//! Flat `key = value` text used for dataset headers, model headers and
//! experiment configs.
//!
//! One entry per line, the first `=` separates key and value, surrounding
//! whitespace is trimmed. Blank lines and lines starting with `#` are skipped.
//! Keys are non-empty runs of `[A-Za-z0-9_.-]` and must be unique. Order is
//! preserved so that writing a parsed file reproduces it in canonical form.

use std::fmt;
use std::str::FromStr;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta {
    entries: Vec<(String, String)>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'-'))
}

fn valid_value(v: &str) -> bool {
    v.trim() == v && !v.contains(['\n', '\r'])
}

impl Meta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = Meta::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                HarnessError::Format(format!("line {}: expected `key = value`", no + 1))
            })?;
            let (k, v) = (k.trim(), v.trim());
            if !valid_key(k) {
                return Err(HarnessError::Format(format!("line {}: invalid key {k:?}", no + 1)));
            }
            if meta.get(k).is_some() {
                return Err(HarnessError::Format(format!("line {}: duplicate key {k:?}", no + 1)));
            }
            meta.entries.push((k.to_string(), v.to_string()));
        }
        Ok(meta)
    }

    /// Inserts or replaces `key`.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) -> Result<()> {
        let value = value.to_string();
        if !valid_key(key) {
            return Err(HarnessError::Format(format!("invalid key {key:?}")));
        }
        if !valid_value(&value) {
            return Err(HarnessError::Format(format!("invalid value for {key}: {value:?}")));
        }
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        Ok(())
    }

    /// Comma-separated list value.
    pub fn set_list<T: fmt::Display>(&mut self, key: &str, values: &[T]) -> Result<()> {
        let s: Vec<String> = values.iter().map(|v| v.to_string()).collect();
        self.set(key, s.join(", "))
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        let i = self.entries.iter().position(|(k, _)| k == key)?;
        Some(self.entries.remove(i).1)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| HarnessError::Format(format!("missing key `{key}`")))
    }

    /// Typed value of a required key.
    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| HarnessError::Format(format!("`{key}`: cannot parse {v:?}")))
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.parse_value(key).map(Some),
        }
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.require(key)?;
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',')
            .map(|s| {
                let s = s.trim();
                s.parse()
                    .map_err(|_| HarnessError::Format(format!("`{key}`: cannot parse {s:?}")))
            })
            .collect()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for Meta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for Meta {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "# header\nformat_version = 1\n\nproblem=burgers\nx_shape = 2, 256\n";
        let m = Meta::parse(text).unwrap();
        assert_eq!(m.get("problem"), Some("burgers"));
        assert_eq!(m.parse_list::<usize>("x_shape").unwrap(), vec![2, 256]);
        assert_eq!(m.parse_value::<u32>("format_version").unwrap(), 1);
        let again = Meta::parse(&m.to_string()).unwrap();
        assert_eq!(again, m);
        assert_eq!(m.to_string(), "format_version = 1\nproblem = burgers\nx_shape = 2, 256\n");
    }

    #[test]
    fn values_may_contain_equals() {
        let m = Meta::parse("note = a=b").unwrap();
        assert_eq!(m.get("note"), Some("a=b"));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(Meta::parse("no separator").is_err());
        assert!(Meta::parse("bad key! = 1").is_err());
        assert!(Meta::parse(" = 1").is_err());
        assert!(Meta::parse("a = 1\na = 2").is_err());
        let m = Meta::parse("a = x").unwrap();
        assert!(m.parse_value::<f64>("a").is_err());
        assert!(m.require("b").is_err());
    }

    #[test]
    fn floats_round_trip_exactly() {
        let mut m = Meta::new();
        let v = [0.1, 1e-10, std::f64::consts::PI, -3.0e300, 5e-324];
        m.set_list("v", &v).unwrap();
        let back = Meta::parse(&m.to_string()).unwrap().parse_list::<f64>("v").unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn set_rejects_multiline_values() {
        let mut m = Meta::new();
        assert!(m.set("a", "x\ny").is_err());
        assert!(m.set("a", " padded").is_err());
        m.set("a", 1).unwrap();
        m.set("a", 2).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m.remove("a").as_deref(), Some("2"));
    }

    proptest! {
        #[test]
        fn canonical_form_is_a_fixed_point(
            entries in proptest::collection::btree_map("[a-z_][a-z0-9_.]{0,8}", "[ -~]{0,20}", 0..8)
        ) {
            let mut m = Meta::new();
            for (k, v) in &entries {
                m.set(k, v.trim()).unwrap();
            }
            let text = m.to_string();
            let parsed = Meta::parse(&text).unwrap();
            prop_assert_eq!(&parsed, &m);
            prop_assert_eq!(parsed.to_string(), text);
        }

        #[test]
        fn parse_never_panics(s in "\\PC{0,200}") {
            if let Ok(m) = Meta::parse(&s) {
                let again = Meta::parse(&m.to_string()).unwrap();
                prop_assert_eq!(again, m);
            }
        }
    }
}
