//! Flat `name = value` text, one pair per line, used for generator specs and
//! diagnostics. Blank lines and lines starting with `#` are ignored; order is kept.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KvList {
    entries: Vec<(String, String)>,
}

impl KvList {
    pub fn new() -> Self {
        KvList::default()
    }

    /// Appends a pair. Floats use the shortest representation that round-trips.
    pub fn push(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    /// Appends a float, switching to exponent notation for very small or large magnitudes.
    pub fn push_f64(&mut self, key: impl Into<String>, value: f64) {
        self.push(key, format_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
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

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse_opt(key)?.ok_or_else(|| Error::InvalidSpec(format!("missing key `{key}`")))
    }

    pub fn parse_opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| Error::InvalidSpec(format!("bad value `{v}` for key `{key}`"))),
        }
    }
}

/// Shortest round-trip text for `x`, in exponent form outside `[1e-4, 1e6)`.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl fmt::Display for KvList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromStr for KvList {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = KvList::new();
        for (n, line) in s.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) =
                t.split_once('=').ok_or_else(|| Error::Parse { line: n + 1, msg: "expected `name = value`".into() })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse { line: n + 1, msg: "empty key".into() });
            }
            out.push(k, v.trim());
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut kv = KvList::new();
        kv.push_f64("mu", -0.005);
        kv.push_f64("tiny", 8.5e-16);
        kv.push("xi", "error: no root");
        kv.push("m", 20usize);
        let back: KvList = kv.to_string().parse().unwrap();
        assert_eq!(back, kv);
        assert_eq!(back.parse::<f64>("mu").unwrap(), -0.005);
        assert_eq!(back.get("tiny"), Some("8.5e-16"));
        assert!(back.parse::<f64>("xi").is_err());
        assert!(back.parse::<f64>("nope").is_err());
        assert_eq!(back.parse_opt::<usize>("nope").unwrap(), None);
    }

    #[test]
    fn comments_and_errors() {
        let kv: KvList = "# header\n\na = 1\n".parse().unwrap();
        assert_eq!(kv.get("a"), Some("1"));
        assert!(matches!("a 1".parse::<KvList>(), Err(Error::Parse { line: 1, .. })));
    }
}
