//! JSON run reports: fixed float formatting and input digests.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::datum::{DimensionCheck, Subset};
use crate::pd::{PdMatrix, SymMatrix};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A finite float as a JSON number; `inf`, `-inf` and `nan` as strings.
pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::String("nan".into())
    } else if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        json!(x)
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

pub fn opt_num(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

/// `{"rows", "cols", "entries"}` with row-major entries.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    let entries: Vec<f64> = (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| m[(r, c)])
        .collect();
    json!({"rows": m.nrows(), "cols": m.ncols(), "entries": nums(&entries)})
}

pub fn sym(m: &SymMatrix) -> Value {
    matrix(m.as_matrix())
}

pub fn pd(m: &PdMatrix) -> Value {
    matrix(m.as_matrix())
}

/// Block indices as they appear in files (1-based).
pub fn subset(s: &Subset) -> Value {
    json!(s.one_based())
}

pub fn dimension_check(check: &DimensionCheck) -> Value {
    let witness = check.witness.as_ref().map(|tuple| {
        Value::Array(
            tuple
                .iter()
                .map(|t| {
                    json!({
                        "block": t.block_index + 1,
                        "dim": t.dim(),
                        "basis": matrix(&t.basis),
                    })
                })
                .collect(),
        )
    });
    json!({
        "verdict": check.verdict,
        "witness": witness,
        "witness_kind": check.witness_kind,
        "violation": num(check.violation),
        "coordinate_tuples": check.coordinate_tuples,
        "structured_tuples": check.structured_tuples,
        "random_tuples": check.random_tuples,
    })
}

/// Hex SHA-256 of the compact serialization with object keys sorted, so the
/// digest ignores field order and whitespace.
pub fn digest(input: &Value) -> String {
    let mut out = String::new();
    write_canonical(&mut out, input);
    hex::encode(Sha256::digest(out.as_bytes()))
}

fn write_canonical(out: &mut String, v: &Value) {
    match v {
        Value::Object(map) => {
            out.push('{');
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, k);
                out.push(':');
                write_canonical(out, &map[k]);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(out, item);
            }
            out.push(']');
        }
        other => write_scalar(out, other),
    }
}

fn write_string(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("strings serialize"));
}

fn write_scalar(out: &mut String, v: &Value) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::String(s) => write_string(out, s),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN));
            }
        }
        Value::Array(_) | Value::Object(_) => unreachable!("containers handled by the caller"),
    }
}

/// Pretty printer: two-space indent, keys sorted, floats with 17 significant
/// digits.
pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write_pretty(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_pretty(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match v {
        Value::Object(map) if !map.is_empty() => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let n = keys.len();
            for (i, k) in keys.into_iter().enumerate() {
                pad(out, depth + 1);
                write_string(out, k);
                out.push_str(": ");
                write_pretty(out, &map[k], depth + 1);
                if i + 1 < n {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push('}');
        }
        Value::Array(items) if !items.is_empty() => {
            // short numeric rows stay on one line
            if items.iter().all(|x| !x.is_object() && !x.is_array()) {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_scalar(out, item);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            let n = items.len();
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_pretty(out, item, depth + 1);
                if i + 1 < n {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(_) => out.push_str("{}"),
        Value::Array(_) => out.push_str("[]"),
        other => write_scalar(out, other),
    }
}

/// The envelope every subcommand prints.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: String,
    pub input_digest: String,
    pub result: Value,
    pub diagnostics: Value,
    pub version: String,
}

impl RunReport {
    pub fn new(command: &str, input: &Value, result: Value, diagnostics: Value) -> Self {
        Self {
            command: command.to_string(),
            input_digest: digest(input),
            result,
            diagnostics,
            version: VERSION.to_string(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut map = Map::new();
        map.insert("command".into(), Value::String(self.command.clone()));
        map.insert("input_digest".into(), Value::String(self.input_digest.clone()));
        map.insert("result".into(), self.result.clone());
        map.insert("diagnostics".into(), self.diagnostics.clone());
        map.insert("version".into(), Value::String(self.version.clone()));
        Value::Object(map)
    }

    pub fn render(&self) -> String {
        render(&self.to_value())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": [1, 2.5], "a": {"y": null, "x": "inf"}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": {"x": "inf", "y": null}, "b": [1, 2.5]}"#).unwrap();
        assert_eq!(digest(&a), digest(&b));
        let c: Value = serde_json::from_str(r#"{"a": {"x": "inf", "y": null}, "b": [1, 2.25]}"#).unwrap();
        assert_ne!(digest(&a), digest(&c));
    }

    #[test]
    fn floats_keep_seventeen_digits() {
        let v = json!({"x": num(0.1), "n": 3, "big": num(f64::INFINITY)});
        let text = render(&v);
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"big\": \"inf\""));
        assert!(text.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }
}
