//! File formats: matrix JSON, grid-function CSV, torus-function JSON, and a
//! canonical JSON writer with sorted keys and fixed float formatting.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::multiplier::{GridFunction, TorusFunction};
use crate::operator_core::Generator;

/// `{"n": int, "re": [[...]], "im": [[...]]}`, row-major, `im` optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = |f: fn(&crate::C64) -> f64| (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect();
        Self {
            n: m.nrows(),
            re: rows(|z| z.re),
            im: Some(rows(|z| z.im)),
        }
    }

    pub fn to_generator(&self) -> Result<Generator> {
        if self.re.len() != self.n {
            return Err(Error::Dimension {
                rows: self.re.len(),
                cols: self.re.first().map_or(0, Vec::len),
            });
        }
        Generator::from_rows(&self.re, self.im.as_deref())
    }
}

pub fn parse_generator(text: &str) -> Result<Generator> {
    let m: MatrixJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("matrix JSON: {e}")))?;
    m.to_generator()
}

/// CSV with header `t,re1,im1,...,ren,imn` and one row per sample.
pub fn grid_to_csv(f: &GridFunction) -> String {
    let mut out = String::from("t");
    for i in 1..=f.dim() {
        let _ = write!(out, ",re{i},im{i}");
    }
    out.push('\n');
    for (j, v) in f.samples.iter().enumerate() {
        let _ = write!(out, "{:e}", f.time(j));
        for z in v.iter() {
            let _ = write!(out, ",{:e},{:e}", z.re, z.im);
        }
        out.push('\n');
    }
    out
}

/// Reads the CSV written by [`grid_to_csv`]; a header row is optional. The
/// times must be uniformly spaced.
pub fn grid_from_csv(text: &str) -> Result<GridFunction> {
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> = fields.iter().map(|s| s.parse::<f64>()).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if times.is_empty() && samples.is_empty() && line_no == 0 => continue,
            Err(e) => return Err(Error::Parse(format!("CSV line {}: {e}", line_no + 1))),
        };
        if values.len() < 3 || values.len() % 2 == 0 {
            return Err(Error::Parse(format!(
                "CSV line {}: expected t followed by re/im pairs, got {} fields",
                line_no + 1,
                values.len()
            )));
        }
        times.push(values[0]);
        samples.push(CVector::from_iterator(
            (values.len() - 1) / 2,
            values[1..].chunks(2).map(|p| c(p[0], p[1])),
        ));
    }
    if times.len() < 2 {
        return Err(Error::Parse("CSV grid needs at least two rows".into()));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    for (j, &t) in times.iter().enumerate() {
        if (t - (times[0] + j as f64 * h)).abs() > 1e-6 * h.abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Parse(format!("CSV times are not uniformly spaced at row {}", j + 1)));
        }
    }
    GridFunction::new(times[0], h, samples)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TorusJson {
    #[serde(rename = "M")]
    m: usize,
    coeffs: BTreeMap<String, Vec<f64>>,
}

/// `{"M": int, "coeffs": {"k": [re..., im...]}}`; absent frequencies are zero.
pub fn torus_from_json(text: &str) -> Result<TorusFunction> {
    let raw: TorusJson = serde_json::from_str(text).map_err(|e| Error::Parse(format!("torus JSON: {e}")))?;
    let mut map = BTreeMap::new();
    let mut dim = None;
    for (key, values) in &raw.coeffs {
        let k: i64 = key
            .parse()
            .map_err(|_| Error::Parse(format!("torus JSON: frequency key {key:?} is not an integer")))?;
        if values.is_empty() || values.len() % 2 != 0 {
            return Err(Error::Parse(format!("torus JSON: coefficient {k} needs n real parts then n imaginary parts")));
        }
        let n = values.len() / 2;
        if *dim.get_or_insert(n) != n {
            return Err(Error::DimensionMismatch {
                expected: format!("coefficients of length {}", dim.unwrap()),
                found: format!("length {n} at k = {k}"),
            });
        }
        map.insert(k, CVector::from_iterator(n, (0..n).map(|i| c(values[i], values[n + i]))));
    }
    let dim = dim.ok_or_else(|| Error::Parse("torus JSON: no coefficients".into()))?;
    TorusFunction::from_map(raw.m, dim, &map)
}

pub fn torus_to_json(f: &TorusFunction) -> Value {
    let coeffs: serde_json::Map<String, Value> = f
        .iter()
        .map(|(k, v)| {
            let mut parts: Vec<f64> = v.iter().map(|z| z.re).collect();
            parts.extend(v.iter().map(|z| z.im));
            (k.to_string(), Value::from(parts))
        })
        .collect();
    serde_json::json!({ "M": f.truncation(), "coeffs": coeffs })
}

/// Serialises with sorted keys, two-space indentation and every non-integer
/// number printed with 17 significant digits, so equal inputs give
/// byte-identical output.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize| "  ".repeat(d);
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_i64() || n.is_u64() {
                out.push_str(&n.to_string());
            } else {
                let _ = write!(out, "{:.16e}", n.as_f64().unwrap_or(f64::NAN));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(depth + 1));
                write_value(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            for (i, (k, v)) in sorted.iter().enumerate() {
                let _ = write!(out, "{}{}: ", pad(depth + 1), Value::String((*k).clone()));
                write_value(v, depth + 1, out);
                out.push_str(if i + 1 < sorted.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(depth));
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip_and_strictness() {
        let g = parse_generator(r#"{"n": 2, "re": [[-1, 0], [0, 2]]}"#).unwrap();
        assert_eq!(g.matrix()[(1, 1)], c(2.0, 0.0));
        assert!(matches!(parse_generator(r#"{"n": 2, "re": [[1]], "extra": 1}"#), Err(Error::Parse(_))));
        assert!(matches!(parse_generator(r#"{"n": 3, "re": [[1, 2], [3, 4]]}"#), Err(Error::Dimension { .. })));
        let json = serde_json::to_string(&MatrixJson::from_matrix(g.matrix())).unwrap();
        assert_eq!(parse_generator(&json).unwrap().matrix(), g.matrix());
    }

    #[test]
    fn grid_csv_round_trip() {
        let f = GridFunction::from_fn(-1.0, 0.1, 21, |t| CVector::from_column_slice(&[c(t.sin(), 1.0 / 3.0), c(t, -t)])).unwrap();
        let back = grid_from_csv(&grid_to_csv(&f)).unwrap();
        assert_eq!(back.samples, f.samples);
        assert!((back.h - f.h).abs() < 1e-15 && back.start == f.start);
        assert!(grid_from_csv("0,1,0\n0.1,1\n").is_err());
    }

    #[test]
    fn torus_json_round_trip() {
        let text = r#"{"M": 2, "coeffs": {"0": [1, 0, 0.5, 0], "-2": [0, 1, 0, 0]}}"#;
        let f = torus_from_json(text).unwrap();
        assert_eq!(f.coeff(0)[0], c(1.0, 0.5));
        assert_eq!(f.coeff(-2)[0], c(0.0, 0.0));
        assert_eq!(f.coeff(-2)[1], c(1.0, 0.0));
        let again = torus_from_json(&torus_to_json(&f).to_string()).unwrap();
        assert_eq!(again, f);
        assert!(torus_from_json(r#"{"M": 1, "coeffs": {"3": [1, 0]}}"#).is_err());
    }

    #[test]
    fn canonical_is_sorted_and_fixed_width() {
        let v = serde_json::json!({"b": 0.1, "a": [1, 2.5], "c": {"z": true, "y": null}});
        let s = canonical_json(&v);
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("2.5000000000000000e0"));
        assert_eq!(s, canonical_json(&v));
    }
}
