//! Flat `key = value` configuration with per-scenario schemas.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{GeoError, Result};

/// One accepted key with its default.
#[derive(Clone, Copy, Debug)]
pub struct Key {
    pub name: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

pub const fn key(name: &'static str, default: &'static str, help: &'static str) -> Key {
    Key { name, default, help }
}

/// Keys every scenario accepts.
pub const COMMON_KEYS: &[Key] = &[
    key("seed", "42", "seed of the deterministic RNG"),
    key("rel_tol", "1e-12", "relative tolerance of the geodesic integrator"),
    key("max_param", "50", "largest affine parameter span of a single trace"),
    key("boundary_margin", "1e-3", "distance from the chart boundary that stops a trace"),
];

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| GeoError::Config(format!("line {}: expected `key = value`, got `{raw}`", i + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(GeoError::Config(format!("line {}: empty key", i + 1)));
        }
        out.insert(k.to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn read_pairs(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| GeoError::Config(format!("{}: {e}", path.display())))?;
    parse_pairs(&text)
}

/// Validated parameter map of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    /// Applies `overrides` on top of the schema defaults, rejecting unknown keys.
    pub fn resolve(schema: &[Key], overrides: &BTreeMap<String, String>) -> Result<Self> {
        let mut values: BTreeMap<String, String> =
            COMMON_KEYS.iter().chain(schema).map(|k| (k.name.to_string(), k.default.to_string())).collect();
        for (k, v) in overrides {
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => {
                    let known: Vec<&str> = COMMON_KEYS.iter().chain(schema).map(|k| k.name).collect();
                    return Err(GeoError::Config(format!("unknown key `{k}` (accepted: {})", known.join(", "))));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, name: &str) -> &str {
        self.values.get(name).map(String::as_str).unwrap_or("")
    }

    fn parsed<T: std::str::FromStr>(&self, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.values.get(name).ok_or_else(|| GeoError::Config(format!("missing key `{name}`")))?;
        raw.parse::<T>().map_err(|e| GeoError::Config(format!("`{name} = {raw}`: {e}")))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        let v: f64 = self.parsed(name)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(GeoError::Config(format!("`{name}` must be finite")))
        }
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        self.parsed(name)
    }

    pub fn u64(&self, name: &str) -> Result<u64> {
        self.parsed(name)
    }

    /// Empty string maps to `None`.
    pub fn path(&self, name: &str) -> Option<&Path> {
        let s = self.str(name);
        (!s.is_empty()).then(|| Path::new(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &[Key] = &[key("n", "8", ""), key("cache", "", "")];

    #[test]
    fn parse_and_override() {
        let pairs = parse_pairs("# comment\n n = 12 \n\nseed=7 # trailing\n").unwrap();
        let c = Config::resolve(SCHEMA, &pairs).unwrap();
        assert_eq!(c.usize("n").unwrap(), 12);
        assert_eq!(c.u64("seed").unwrap(), 7);
        assert_eq!(c.f64("rel_tol").unwrap(), 1e-12);
        assert!(c.path("cache").is_none());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_pairs("novalue").is_err());
        assert!(parse_pairs(" = 3").is_err());
        let unknown = parse_pairs("m = 1").unwrap();
        assert!(matches!(Config::resolve(SCHEMA, &unknown), Err(GeoError::Config(_))));
        let bad = parse_pairs("n = x").unwrap();
        assert!(Config::resolve(SCHEMA, &bad).unwrap().usize("n").is_err());
    }
}
