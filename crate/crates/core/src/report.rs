//! Report writers: CSV with pinned numeric formatting and JSON with sorted
//! keys, both written atomically (temp file + rename).

use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{Error, Result};

/// Decimal text with 12 significant digits. Deterministic across platforms;
/// parses back to within half an ulp of the 12-digit rounding.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.11e}")
}

/// Write `bytes` to `path` atomically: same-directory temp file, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| Error::io(dir.display().to_string(), e))?;
        }
    }
    let tmp: PathBuf = {
        let mut name = path.as_os_str().to_os_string();
        name.push(format!(".tmp-{}", std::process::id()));
        PathBuf::from(name)
    };
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path.display().to_string(), e)
    })
}

/// Comma-separated file with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())
}

/// Pretty JSON, UTF-8, keys sorted (map values are ordered trees), trailing
/// newline.
pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::config(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// The resolved configuration as a JSON object with the raw value text
/// verbatim, so every numeric field round-trips exactly as written.
pub fn config_object(config: &RunConfig) -> Value {
    let mut obj = serde_json::Map::new();
    for (k, v) in config.entries() {
        obj.insert(k.clone(), Value::String(v.clone()));
    }
    let mut outer = serde_json::Map::new();
    outer.insert("source".to_string(), Value::String(config.source.clone()));
    outer.insert("fields".to_string(), Value::Object(obj));
    Value::Object(outer)
}

/// Serialize any report type to a JSON value (sorted keys by construction).
pub fn to_value<T: serde::Serialize>(x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::config(format!("cannot serialize report: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(1.0), "1.00000000000e0");
        assert_eq!(fmt_sig(-0.125), "-1.25000000000e-1");
        assert_eq!(fmt_sig(2e-4), "2.00000000000e-4");
        // 12 significant digits: round-trips to the displayed precision
        let x = std::f64::consts::PI;
        let s = fmt_sig(x);
        let back: f64 = s.parse().unwrap();
        assert!((back - x).abs() < 1e-11);
    }

    #[test]
    fn csv_and_json_written_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("t.csv");
        write_csv(&csv, &["a", "b"], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(std::fs::read_to_string(&csv).unwrap(), "a,b\n1,2\n");

        let json = dir.path().join("t.json");
        let v = serde_json::json!({"zeta": 1, "alpha": {"y": 2, "x": 3}});
        write_json(&json, &v).unwrap();
        let text = std::fs::read_to_string(&json).unwrap();
        // keys sorted at every level
        assert!(text.find("alpha").unwrap() < text.find("zeta").unwrap());
        assert!(text.find("\"x\"").unwrap() < text.find("\"y\"").unwrap());
        assert!(text.ends_with('\n'));
        // no stray temp files
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }

    #[test]
    fn config_embedding_preserves_raw_text() {
        let c = RunConfig::parse("model.lambda = 1.50\n", "t").unwrap();
        let v = config_object(&c);
        assert_eq!(v["fields"]["model.lambda"], "1.50");
    }
}
