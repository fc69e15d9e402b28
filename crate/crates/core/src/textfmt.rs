//! Line-oriented `key value...` documents used for model and volume files.
//!
//! Floats are written with 17 significant digits so that reading a file back
//! reproduces every value bit for bit.

use std::collections::HashMap;

use crate::field::{FieldKind, FieldName};
use crate::{Error, Result};

/// `v` with 17 significant digits in scientific notation.
pub fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_exact_list(values: &[f64]) -> String {
    values.iter().map(|v| fmt_exact(*v)).collect::<Vec<_>>().join(" ")
}

/// Field kind as the three lines `field`, `unit`, `compound` (`-` when absent).
pub fn write_field(out: &mut String, field: &FieldKind) {
    out.push_str(&format!("field {}\n", field.name().as_str()));
    out.push_str(&format!("unit {}\n", field.unit()));
    out.push_str(&format!("compound {}\n", field.compound_label().unwrap_or("-")));
}

/// Parsed header lines of a document.
#[derive(Debug)]
pub struct KeyValues {
    what: &'static str,
    entries: HashMap<String, String>,
}

impl KeyValues {
    /// Parses every non-empty line as `key rest-of-line`. Duplicate keys are
    /// rejected.
    pub fn parse<'a>(what: &'static str, lines: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        let mut entries = HashMap::new();
        for (no, line) in lines.into_iter().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
            if entries.insert(key.to_string(), rest.to_string()).is_some() {
                return Err(Error::Format { what, detail: format!("line {}: duplicate key {key}", no + 1) });
            }
        }
        Ok(Self { what, entries })
    }

    pub fn raw(&self, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format { what: self.what, detail: format!("missing key {key}") })
    }

    pub fn parse_value<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key)?;
        raw.trim()
            .parse()
            .map_err(|_| Error::Format { what: self.what, detail: format!("bad value for {key}: {raw:?}") })
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let v: f64 = self.parse_value(key)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(key))
        }
    }

    pub fn f64_list(&self, key: &str, expected_len: usize) -> Result<Vec<f64>> {
        let values = self
            .raw(key)?
            .split_ascii_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| self.bad(key))?;
        if values.len() != expected_len {
            return Err(Error::Format {
                what: self.what,
                detail: format!("{key}: expected {expected_len} values, got {}", values.len()),
            });
        }
        Ok(values)
    }

    pub fn field(&self) -> Result<FieldKind> {
        let name = FieldName::parse(self.raw("field")?.trim()).ok_or_else(|| self.bad("field"))?;
        let compound = self.raw("compound")?.trim();
        let compound = (compound != "-").then_some(compound);
        FieldKind::new(name, self.raw("unit")?, compound)
    }

    fn bad(&self, key: &str) -> Error {
        Error::Format { what: self.what, detail: format!("bad value for {key}") }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_roundtrip() {
        for field in [FieldKind::temperature(), FieldKind::nitrogen("NH3").unwrap()] {
            let mut s = String::new();
            write_field(&mut s, &field);
            let kv = KeyValues::parse("test", s.lines()).unwrap();
            assert_eq!(kv.field().unwrap(), field);
        }
    }

    #[test]
    fn errors() {
        let kv = KeyValues::parse("test", ["a 1", "b x", "c 1 2"]).unwrap();
        assert!(kv.f64("a").is_ok());
        assert!(kv.f64("b").is_err());
        assert!(kv.f64("zz").is_err());
        assert!(kv.f64_list("c", 3).is_err());
        assert!(KeyValues::parse("test", ["a 1", "a 2"]).is_err());
    }

    proptest! {
        #[test]
        fn exact_roundtrip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = fmt_exact(v).parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
        }
    }
}
