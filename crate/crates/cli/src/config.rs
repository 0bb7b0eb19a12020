//! Flat TOML run configuration with flag overrides.

use std::collections::BTreeMap;
use std::path::Path;

use shl_core::experiments::Param;
use toml::Value;

use crate::CliError;

/// Keys every subcommand accepts.
pub const GLOBAL_KEYS: [&str; 2] = ["out", "threads"];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, Value>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::Usage(format!("config: {e}")))?;
        let mut values = BTreeMap::new();
        for (k, v) in table {
            if matches!(v, Value::Table(_)) {
                return Err(CliError::Usage(format!("config key `{k}`: nested tables are not supported")));
            }
            values.insert(k, v);
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.values.insert(key.to_string(), value);
    }

    /// Applies `key=value`, reading the value as a TOML literal and falling
    /// back to a bare string.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<(), CliError> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("expected key=value, got `{assignment}`")))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(CliError::Usage(format!("empty key in `{assignment}`")));
        }
        let v = v.trim();
        let parsed = format!("v = {v}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(v.to_string()));
        self.set(k, parsed);
        Ok(())
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.values.get(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => as_f64(v).ok_or_else(|| CliError::Usage(format!("`{key}` must be a number"))),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(Value::Integer(i)) if *i >= 0 => Ok(*i as u64),
            Some(_) => Err(CliError::Usage(format!("`{key}` must be a non-negative integer"))),
        }
    }

    pub fn list_or(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        match self.values.get(key).map(to_param) {
            None => Ok(default),
            Some(Some(Param::List(v))) => Ok(v),
            Some(Some(Param::Number(v))) => Ok(vec![v]),
            Some(_) => Err(CliError::Usage(format!("`{key}` must be a list of numbers"))),
        }
    }

    pub fn str_or(&self, key: &str, default: &str) -> Result<String, CliError> {
        match self.values.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(_) => Err(CliError::Usage(format!("`{key}` must be a string"))),
        }
    }

    /// Fails on keys outside `allowed` and [`GLOBAL_KEYS`].
    pub fn reject_unknown(&self, allowed: &[&str]) -> Result<(), CliError> {
        let unknown: Vec<&str> = self
            .keys()
            .filter(|k| !allowed.contains(k) && !GLOBAL_KEYS.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!(
                "unknown config keys {unknown:?}; accepted: {}",
                allowed.iter().chain(&GLOBAL_KEYS).copied().collect::<Vec<_>>().join(", ")
            )))
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.values).expect("toml values convert to json")
    }
}

fn as_f64(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

pub fn to_param(v: &Value) -> Option<Param> {
    match v {
        Value::String(s) => Some(Param::Text(s.clone())),
        Value::Array(a) => a.iter().map(as_f64).collect::<Option<Vec<_>>>().map(Param::List),
        other => as_f64(other).map(Param::Number),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_documents_only() {
        let c = RunConfig::from_toml("seed = 3\nwindow = 50.5\ntimes = [1, 2.5]\ntail = \"truncated\"").unwrap();
        assert_eq!(c.u64_or("seed", 0).unwrap(), 3);
        assert_eq!(c.f64_or("window", 0.0).unwrap(), 50.5);
        assert_eq!(c.list_or("times", vec![]).unwrap(), vec![1.0, 2.5]);
        assert_eq!(c.str_or("tail", "x").unwrap(), "truncated");
        assert!(RunConfig::from_toml("[section]\na = 1").is_err());
        assert!(RunConfig::from_toml("a = ").is_err());
    }

    #[test]
    fn assignments_override() {
        let mut c = RunConfig::from_toml("seed = 3").unwrap();
        c.set_assignment("seed=9").unwrap();
        c.set_assignment("times = [4, 16]").unwrap();
        c.set_assignment("tail=compensated").unwrap();
        assert_eq!(c.u64_or("seed", 0).unwrap(), 9);
        assert_eq!(c.list_or("times", vec![]).unwrap(), vec![4.0, 16.0]);
        assert_eq!(c.str_or("tail", "").unwrap(), "compensated");
        assert!(c.set_assignment("novalue").is_err());
        assert!(c.reject_unknown(&["seed", "times"]).is_err());
        assert!(c.reject_unknown(&["seed", "times", "tail"]).is_ok());
    }

    #[test]
    fn wrong_types_are_usage_errors() {
        let c = RunConfig::from_toml("seed = -1\nwindow = \"big\"").unwrap();
        assert!(c.u64_or("seed", 0).is_err());
        assert!(c.f64_or("window", 0.0).is_err());
    }
}
