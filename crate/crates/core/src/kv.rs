//! Flat `key = value` configuration text.
//!
//! One pair per line; `#` starts a comment; blank lines are ignored; keys
//! are unique. Used by the simulator config, the classifier config and the
//! display model file.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct KvMap {
    entries: BTreeMap<String, (usize, String)>,
}

pub fn parse(text: &str) -> Result<KvMap> {
    let mut entries = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::Config(format!("line {line_no}: expected 'key = value'")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Config(format!("line {line_no}: empty key")));
        }
        if entries.insert(key.to_string(), (line_no, value.trim().to_string())).is_some() {
            return Err(Error::Config(format!("line {line_no}: duplicate key '{key}'")));
        }
    }
    Ok(KvMap { entries })
}

impl KvMap {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn require(&self, key: &str) -> Result<(usize, &str)> {
        self.entries
            .get(key)
            .map(|(l, v)| (*l, v.as_str()))
            .ok_or_else(|| Error::Config(format!("missing key '{key}'")))
    }

    pub fn get_f64(&self, key: &str) -> Result<f64> {
        let (line, v) = self.require(key)?;
        parse_f64(v).map_err(|m| Error::Config(format!("line {line}: '{key}': {m}")))
    }

    pub fn get_u64(&self, key: &str) -> Result<u64> {
        let (line, v) = self.require(key)?;
        v.parse::<u64>()
            .map_err(|_| Error::Config(format!("line {line}: '{key}': expected a nonnegative integer, got '{v}'")))
    }

    pub fn get_f64_or(&self, key: &str, default: f64) -> Result<f64> {
        if self.entries.contains_key(key) {
            self.get_f64(key)
        } else {
            Ok(default)
        }
    }

    /// Three numbers separated by whitespace and/or commas.
    pub fn get_triplet(&self, key: &str) -> Result<[f64; 3]> {
        let (line, v) = self.require(key)?;
        parse_triplet(v).map_err(|m| Error::Config(format!("line {line}: '{key}': {m}")))
    }
}

fn parse_f64(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got '{s}'")),
    }
}

pub(crate) fn parse_triplet(s: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()).collect();
    if parts.len() != 3 {
        return Err(format!("expected three numbers, got '{s}'"));
    }
    let mut out = [0.0; 3];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = parse_f64(p)?;
    }
    Ok(out)
}
