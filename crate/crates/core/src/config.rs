//! Flat key-value run configuration with dotted section prefixes
//! (`model.lambda = 1.0`). Raw value text is preserved verbatim so numeric
//! fields round-trip through reports exactly as written.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    /// Where the text came from (path or label), for error messages.
    pub source: String,
    /// Raw `(key, value)` pairs in file order.
    entries: Vec<(String, String)>,
    map: HashMap<String, String>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, source: &str) -> Result<RunConfig> {
        let mut entries = Vec::new();
        let mut map = HashMap::new();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(format!(
                    "{source}:{}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(Error::config(format!("{source}:{}: empty key", lineno + 1)));
            }
            if map.insert(key.clone(), value.clone()).is_some() {
                return Err(Error::config(format!(
                    "{source}:{}: duplicate config field '{key}'",
                    lineno + 1
                )));
            }
            entries.push((key, value));
        }
        Ok(RunConfig { source: source.to_string(), entries, map })
    }

    /// Raw pairs in file order (for embedding into reports).
    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Set (or override) a field, e.g. from a command-line flag.
    pub fn set(&mut self, key: &str, value: &str) {
        if self.map.insert(key.to_string(), value.to_string()).is_some() {
            if let Some(e) = self.entries.iter_mut().find(|(k, _)| k == key) {
                e.1 = value.to_string();
            }
        } else {
            self.entries.push((key.to_string(), value.to_string()));
        }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.raw(key)
            .ok_or_else(|| Error::config(format!("missing config field '{key}'")))
    }

    fn parse_f64(&self, key: &str, text: &str) -> Result<f64> {
        text.parse::<f64>()
            .map_err(|_| Error::config(format!("config field '{key}': '{text}' is not a number")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let text = self.require(key)?;
        self.parse_f64(key, text)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            Some(text) => self.parse_f64(key, text),
            None => Ok(default),
        }
    }

    pub fn usize_field(&self, key: &str) -> Result<usize> {
        let text = self.require(key)?;
        text.parse::<usize>().map_err(|_| {
            Error::config(format!("config field '{key}': '{text}' is not a non-negative integer"))
        })
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            Some(text) => text.parse::<usize>().map_err(|_| {
                Error::config(format!(
                    "config field '{key}': '{text}' is not a non-negative integer"
                ))
            }),
            None => Ok(default),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            Some(text) => text.parse::<u64>().map_err(|_| {
                Error::config(format!(
                    "config field '{key}': '{text}' is not a non-negative integer"
                ))
            }),
            None => Ok(default),
        }
    }

    pub fn i64_or(&self, key: &str, default: i64) -> Result<i64> {
        match self.raw(key) {
            Some(text) => text.parse::<i64>().map_err(|_| {
                Error::config(format!("config field '{key}': '{text}' is not an integer"))
            }),
            None => Ok(default),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> &'a str {
        self.raw(key).unwrap_or(default)
    }

    /// Comma-separated decimals, e.g. `run.lambdas = -1, -0.5, 0`.
    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>> {
        let text = self.require(key)?;
        text.split(',')
            .map(|p| self.parse_f64(key, p.trim()))
            .collect()
    }

    /// Comma-separated non-negative integers.
    pub fn list_usize_or(&self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.raw(key) {
            Some(text) => text
                .split(',')
                .map(|p| {
                    p.trim().parse::<usize>().map_err(|_| {
                        Error::config(format!(
                            "config field '{key}': '{}' is not a non-negative integer",
                            p.trim()
                        ))
                    })
                })
                .collect(),
            None => Ok(default.to_vec()),
        }
    }

    /// `lo,hi` pair of decimals (used by `grid.window`).
    pub fn pair_f64(&self, key: &str) -> Result<(f64, f64)> {
        let text = self.require(key)?;
        let parts: Vec<&str> = text.split(',').map(|p| p.trim()).collect();
        if parts.len() != 2 {
            return Err(Error::config(format!(
                "config field '{key}': expected 'lo,hi', got '{text}'"
            )));
        }
        Ok((self.parse_f64(key, parts[0])?, self.parse_f64(key, parts[1])?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# model under test
model.lambda = 1.0
model.K = 0.1
model.family = periodic
grid.window = -4, 4
grid.step = 0.00390625
run.seed = 7
run.sizes = 8, 12, 16
";

    #[test]
    fn parses_and_reads_back_raw_text() {
        let c = RunConfig::parse(SAMPLE, "sample").unwrap();
        assert_eq!(c.raw("model.lambda"), Some("1.0"));
        assert_eq!(c.f64("model.K").unwrap(), 0.1);
        assert_eq!(c.pair_f64("grid.window").unwrap(), (-4.0, 4.0));
        assert_eq!(c.list_usize_or("run.sizes", &[]).unwrap(), vec![8, 12, 16]);
        assert_eq!(c.u64_or("run.seed", 0).unwrap(), 7);
        assert_eq!(c.str_or("model.family", "periodic"), "periodic");
        // raw text survives untouched for exact round-trips
        let entries = c.entries();
        assert!(entries.iter().any(|(k, v)| k == "grid.step" && v == "0.00390625"));
    }

    #[test]
    fn missing_field_is_named() {
        let c = RunConfig::parse(SAMPLE, "sample").unwrap();
        let err = c.f64("model.rho").unwrap_err();
        assert!(err.to_string().contains("model.rho"), "{err}");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(RunConfig::parse("just words\n", "t").is_err());
        assert!(RunConfig::parse("a = 1\na = 2\n", "t").is_err());
        let c = RunConfig::parse("x = notanumber\n", "t").unwrap();
        let err = c.f64("x").unwrap_err();
        assert!(err.to_string().contains("notanumber"), "{err}");
    }

    #[test]
    fn overrides_update_entries() {
        let mut c = RunConfig::parse("run.seed = 1\n", "t").unwrap();
        c.set("run.seed", "9");
        c.set("run.out_dir", "artifacts");
        assert_eq!(c.raw("run.seed"), Some("9"));
        assert_eq!(c.entries().len(), 2);
    }
}
