//! Run manifests: what produced an output set, with digests of everything
//! that went in and came out. Files are named by role or by their path
//! relative to the output, never by absolute location, so identical runs
//! give identical manifests.

use std::collections::BTreeMap;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Seed behind any randomness in the run; absent for deterministic steps.
    pub seed: Option<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub inputs: BTreeMap<String, String>,
    pub configs: BTreeMap<String, String>,
    /// Free-form run parameters that are not files.
    pub parameters: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &'static str, timestamp: u64) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            timestamp,
            inputs: BTreeMap::new(),
            configs: BTreeMap::new(),
            parameters: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, role: &str, bytes: &[u8]) -> &mut Self {
        self.inputs.insert(role.to_string(), sha256_hex(bytes));
        self
    }

    pub fn config(&mut self, role: &str, bytes: &[u8]) -> &mut Self {
        self.configs.insert(role.to_string(), sha256_hex(bytes));
        self
    }

    pub fn parameter(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn output(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn json_is_stable() {
        let mut a = RunManifest::new("simulate", 0);
        a.output("b.csv", b"1").output("a.csv", b"2");
        let mut b = RunManifest::new("simulate", 0);
        b.output("a.csv", b"2").output("b.csv", b"1");
        assert_eq!(a.to_json(), b.to_json());
        assert!(a.to_json().contains("\"seed\": null"));
    }
}
