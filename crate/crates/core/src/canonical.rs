//! Canonical JSON encoding.
//!
//! Objects are written with keys in sorted order, no insignificant
//! whitespace, and every floating-point number in scientific notation with
//! 17 significant digits (`{:.16e}`), which round-trips any `f64` exactly.
//! Integers are written as plain integers. Output ends with a newline.

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::{Error, Result};

/// Formats a float the way every canonical document does.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    }
}

fn write_number(out: &mut String, n: &Number) {
    if let Some(u) = n.as_u64() {
        out.push_str(&u.to_string());
    } else if let Some(i) = n.as_i64() {
        out.push_str(&i.to_string());
    } else {
        out.push_str(&format_f64(n.as_f64().unwrap_or(f64::NAN)));
    }
}

fn write_string(out: &mut String, s: &str) {
    // serde_json's string escaping is already canonical
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

pub fn write_value(out: &mut String, value: &Value) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(out, n),
        Value::String(s) => write_string(out, s),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, item);
            }
            out.push(']');
        }
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_string(out, key);
                out.push(':');
                write_value(out, &map[key]);
            }
            out.push('}');
        }
    }
}

/// Serializes any value into canonical bytes.
pub fn to_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let value = serde_json::to_value(value).expect("canonical documents serialize to JSON");
    let mut out = String::new();
    write_value(&mut out, &value);
    out.push('\n');
    out.into_bytes()
}

pub fn from_slice<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    serde_json::from_slice(bytes).map_err(|e| Error::Parse {
        location: crate::error::Location {
            line: e.line() as u64,
            column: None,
        },
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Doc {
        zeta: f64,
        alpha: Vec<f64>,
        count: usize,
        name: String,
    }

    #[test]
    fn keys_sorted_and_floats_fixed() {
        let doc = Doc {
            zeta: 1.7,
            alpha: vec![-0.001, 0.0],
            count: 3,
            name: "a\"b".into(),
        };
        let text = String::from_utf8(to_bytes(&doc)).unwrap();
        assert_eq!(
            text,
            "{\"alpha\":[-1.0000000000000000e-3,0.0000000000000000e0],\"count\":3,\"name\":\"a\\\"b\",\"zeta\":1.7000000000000000e0}\n"
        );
        let back: Doc = from_slice(text.as_bytes()).unwrap();
        assert_eq!(back, doc);
    }

    proptest! {
        #[test]
        fn floats_round_trip_exactly(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let text = format_f64(v);
            let back: f64 = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
