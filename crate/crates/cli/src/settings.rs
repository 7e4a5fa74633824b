//! Flat `key = value` settings: a config file overlaid by command-line flags.
//! Every value read is recorded so the manifest echoes the effective config.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use kmpflow::env::stream::parse_seed;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "seed", "alpha", "eps", "bigN", "time", "replicas", "out", "workers", "phi", "scope", "init", "particles", "starts", "targets", "sites",
    "steps", "snapshots", "dims", "draws", "dx", "half-width", "beta", "stride", "radius", "reach", "zmax", "level", "start", "profile",
    "speeds", "times", "scale", "only", "fault-gamma", "dump-env",
];

#[derive(Debug, Default)]
pub struct Settings {
    raw: BTreeMap<String, String>,
    effective: BTreeMap<String, String>,
}

fn config_err(key: &str, msg: impl Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

impl Settings {
    /// Parse a config file: one `key = value` per line, `#` comments.
    pub fn from_file_text(text: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config(format!("config line {}: expected key = value", i + 1)))?;
            s.set(k.trim(), v.trim())?;
        }
        Ok(s)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = if key == "bign" || key == "N" { "bigN" } else { key };
        if !KEYS.contains(&key) {
            return Err(config_err(key, "unknown setting"));
        }
        self.raw.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.raw.contains_key(key)
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.effective.insert(key.to_string(), value.to_string());
    }

    /// Keys given but never read.
    pub fn unused(&self) -> Vec<&str> {
        self.raw.keys().filter(|k| !self.effective.contains_key(*k)).map(String::as_str).collect()
    }

    pub fn effective(&self) -> &BTreeMap<String, String> {
        &self.effective
    }

    pub fn get<T: FromStr + Display + Clone>(&mut self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = match self.raw.get(key) {
            Some(s) => s.parse::<T>().map_err(|e| config_err(key, format!("cannot parse {s:?}: {e}")))?,
            None => default,
        };
        self.record(key, &v);
        Ok(v)
    }

    pub fn positive(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.get(key, default)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(config_err(key, format!("must be positive and finite, got {v}")));
        }
        Ok(v)
    }

    pub fn nonnegative(&mut self, key: &str, default: f64) -> Result<f64, CliError> {
        let v = self.get(key, default)?;
        if !(v >= 0.0 && v.is_finite()) {
            return Err(config_err(key, format!("must be nonnegative and finite, got {v}")));
        }
        Ok(v)
    }

    pub fn count(&mut self, key: &str, default: u64) -> Result<u64, CliError> {
        let v: u64 = self.get(key, default)?;
        if v == 0 {
            return Err(config_err(key, "must be at least 1"));
        }
        Ok(v)
    }

    pub fn flag(&mut self, key: &str) -> Result<bool, CliError> {
        self.get(key, false)
    }

    pub fn seed(&mut self) -> Result<u64, CliError> {
        let v = match self.raw.get("seed") {
            Some(s) => parse_seed(s).ok_or_else(|| config_err("seed", format!("expected decimal or 0x-hex, got {s:?}")))?,
            None => 2024,
        };
        self.record("seed", v);
        Ok(v)
    }

    /// Comma-separated list.
    pub fn list<T: FromStr + Display>(&mut self, key: &str, default: &str) -> Result<Vec<T>, CliError>
    where
        T::Err: Display,
    {
        let s = self.raw.get(key).cloned().unwrap_or_else(|| default.to_string());
        let v = s
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|e| config_err(key, format!("cannot parse {p:?}: {e}"))))
            .collect::<Result<Vec<T>, _>>()?;
        self.record(key, s);
        Ok(v)
    }

    /// Comma-separated `site:value` pairs.
    pub fn pairs<T: FromStr + Display>(&mut self, key: &str, default: &str) -> Result<Vec<(i64, T)>, CliError>
    where
        T::Err: Display,
    {
        let s = self.raw.get(key).cloned().unwrap_or_else(|| default.to_string());
        let mut out = Vec::new();
        for p in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = p.split_once(':').ok_or_else(|| config_err(key, format!("expected site:value, got {p:?}")))?;
            let x = a.trim().parse::<i64>().map_err(|e| config_err(key, format!("bad site {a:?}: {e}")))?;
            let v = b.trim().parse::<T>().map_err(|e| config_err(key, format!("bad value {b:?}: {e}")))?;
            out.push((x, v));
        }
        self.record(key, s);
        Ok(out)
    }

    pub fn choice(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String, CliError> {
        let v: String = self.get(key, default.to_string())?;
        if !allowed.contains(&v.as_str()) {
            return Err(config_err(key, format!("expected one of {allowed:?}, got {v:?}")));
        }
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut s = Settings::from_file_text("alpha = 2 # comment\n\nseed=0x10\n").unwrap();
        s.set("alpha", "3").unwrap();
        assert_eq!(s.positive("alpha", 1.0).unwrap(), 3.0);
        assert_eq!(s.seed().unwrap(), 16);
        assert_eq!(s.count("replicas", 7).unwrap(), 7);
        assert_eq!(s.effective()["alpha"], "3");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Settings::from_file_text("colour = red").is_err());
        assert!(Settings::from_file_text("alpha 2").is_err());
        let mut s = Settings::default();
        s.set("alpha", "-1").unwrap();
        assert!(s.positive("alpha", 1.0).is_err());
        s.set("seed", "0xZZ").unwrap();
        assert!(s.seed().is_err());
    }

    #[test]
    fn lists_and_pairs() {
        let mut s = Settings::default();
        s.set("bigN", "16, 64").unwrap();
        s.set("particles", "0:2,3:1").unwrap();
        assert_eq!(s.list::<u64>("bigN", "").unwrap(), vec![16, 64]);
        assert_eq!(s.pairs::<u64>("particles", "").unwrap(), vec![(0, 2), (3, 1)]);
        assert!(s.list::<u64>("starts", "a").is_err());
    }
}
