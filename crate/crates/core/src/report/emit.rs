use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Json,
    /// Two columns, `path,value`; every leaf is one row and values are JSON literals.
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Config(format!(
                "unknown report format `{other}`, expected json or csv"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Csv => "csv",
        })
    }
}

pub fn render_report<T: Serialize>(value: &T, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(value).expect("reports serialize") + "\n",
        ReportFormat::Csv => json_to_csv(&serde_json::to_value(value).expect("reports serialize")),
    }
}

pub fn emit_report<T: Serialize>(value: &T, format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, render_report(value, format)).map_err(|e| Error::io(path, e))
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) if !m.is_empty() => {
            for (k, child) in m {
                debug_assert!(!k.contains(['.', '[', ']']), "report key {k:?}");
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&p, child, out);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            for (i, child) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, out);
            }
        }
        leaf => out.push((prefix.to_string(), leaf.to_string())),
    }
}

/// Flattens a JSON tree into `path,value` rows, e.g. `memory.levels[3].read_words,1024`.
pub fn json_to_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["path", "value"]).expect("in-memory write");
    for (p, v) in rows {
        w.write_record([p, v]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv is utf-8")
}

enum Seg {
    Key(String),
    Index(usize),
}

fn parse_path(p: &str) -> Option<Vec<Seg>> {
    let mut segs = Vec::new();
    let mut rest = p;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('[') {
            let end = r.find(']')?;
            segs.push(Seg::Index(r[..end].parse().ok()?));
            rest = &r[end + 1..];
        } else {
            let r = rest.strip_prefix('.').unwrap_or(rest);
            let end = r.find(['.', '[']).unwrap_or(r.len());
            if end == 0 {
                return None;
            }
            segs.push(Seg::Key(r[..end].to_string()));
            rest = &r[end..];
        }
    }
    Some(segs)
}

fn insert(slot: &mut Value, segs: &[Seg], leaf: Value) -> bool {
    let Some((head, tail)) = segs.split_first() else {
        if !slot.is_null() {
            return false;
        }
        *slot = leaf;
        return true;
    };
    match head {
        Seg::Key(k) => {
            if slot.is_null() {
                *slot = Value::Object(Map::new());
            }
            let Value::Object(m) = slot else { return false };
            insert(m.entry(k.clone()).or_insert(Value::Null), tail, leaf)
        }
        Seg::Index(i) => {
            if slot.is_null() {
                *slot = Value::Array(Vec::new());
            }
            let Value::Array(a) = slot else { return false };
            if *i == a.len() {
                a.push(Value::Null);
            }
            match a.get_mut(*i) {
                Some(child) => insert(child, tail, leaf),
                None => false,
            }
        }
    }
}

/// Rebuilds the JSON tree written by [`json_to_csv`].
pub fn csv_to_json(text: &str) -> Result<Value> {
    let bad = |line: usize, msg: String| Error::Decode(format!("report csv line {line}: {msg}"));
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| bad(1, e.to_string()))?;
    if headers != vec!["path", "value"] {
        return Err(bad(1, "expected header `path,value`".into()));
    }
    let mut root = Value::Null;
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let segs = parse_path(&rec[0]).ok_or_else(|| bad(line, format!("bad path `{}`", &rec[0])))?;
        let leaf: Value = serde_json::from_str(&rec[1]).map_err(|e| bad(line, e.to_string()))?;
        if !insert(&mut root, &segs, leaf) {
            return Err(bad(line, format!("path `{}` conflicts with an earlier row", &rec[0])));
        }
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn round_trip_is_exact() {
        let v = json!({
            "schema": "x/1",
            "a": {"b": [1, 2.5, {"c": 0.1}], "empty": [], "none": {}},
            "f": 1e-300,
            "g": 0.30000000000000004,
            "s": "quote \" and, comma",
            "n": null
        });
        let back = csv_to_json(&json_to_csv(&v)).unwrap();
        assert_eq!(back, v);
        assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&v).unwrap());
    }

    #[test]
    fn rows_per_leaf() {
        let csv = json_to_csv(&json!({"levels": [{"level": "act_lb", "words": 3}]}));
        assert_eq!(csv, "path,value\nlevels[0].level,\"\"\"act_lb\"\"\"\nlevels[0].words,3\n");
    }

    #[test]
    fn rejects_garbage() {
        assert!(csv_to_json("a,b\n").is_err());
        assert!(csv_to_json("path,value\nx,1\nx,2\n").is_err());
        assert!(csv_to_json("path,value\nx[2],1\n").is_err());
        assert!(csv_to_json("path,value\nx,nope\n").is_err());
    }

    #[test]
    fn format_names() {
        assert_eq!("CSV".parse::<ReportFormat>().unwrap(), ReportFormat::Csv);
        assert!("xml".parse::<ReportFormat>().is_err());
    }
}
