//! Line-oriented `key value...` text used by every model file.
//!
//! The first line is `<tag> v<version>`. Each following line is a key and a
//! space-separated payload. Reals are written with 17 significant digits
//! (`{:.16e}`), which round-trips every `f64` exactly.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn fmt_real<T: Real>(v: T) -> String {
    format!("{:.16e}", v.to_f64_lossy())
}

pub(crate) fn write_values<T: Real>(out: &mut String, key: &str, values: &[T]) {
    out.push_str(key);
    for &v in values {
        out.push(' ');
        out.push_str(&fmt_real(v));
    }
    out.push('\n');
}

/// Writes `key rows cols v...`.
pub(crate) fn write_tensor<T: Real>(out: &mut String, key: &str, rows: usize, cols: usize, values: &[T]) {
    let _ = write!(out, "{key} {rows} {cols}");
    for &v in values {
        out.push(' ');
        out.push_str(&fmt_real(v));
    }
    out.push('\n');
}

pub(crate) fn parse_values<T: Real>(payload: &str) -> Result<Vec<T>> {
    payload
        .split_whitespace()
        .map(|tok| tok.parse::<f64>().map(T::of).map_err(|_| Error::parse("model file", format!("bad number {tok:?}"))))
        .collect()
}

pub(crate) fn parse_tensor<T: Real>(payload: &str) -> Result<(usize, usize, Vec<T>)> {
    let mut it = payload.splitn(3, ' ');
    let rows: usize = parse_one(it.next().unwrap_or(""), "tensor rows")?;
    let cols: usize = parse_one(it.next().unwrap_or(""), "tensor cols")?;
    let values = parse_values(it.next().unwrap_or(""))?;
    if values.len() != rows * cols {
        return Err(Error::parse("model file", format!("tensor {rows}x{cols} has {} values", values.len())));
    }
    Ok((rows, cols, values))
}

pub(crate) fn parse_one<F: FromStr>(s: &str, what: &str) -> Result<F> {
    s.trim().parse().map_err(|_| Error::parse("model file", format!("bad {what}: {s:?}")))
}

pub(crate) struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    pub(crate) fn parse(text: &str, tag: &str, version: u32) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("").trim();
        let expected = format!("{tag} v{version}");
        if header != expected {
            return Err(Error::parse("model file", format!("expected header {expected:?}, found {header:?}")));
        }
        let mut map = BTreeMap::new();
        for line in lines {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once(' ').unwrap_or((line, ""));
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(Error::parse("model file", format!("duplicate key {k}")));
            }
        }
        Ok(Fields { map })
    }

    pub(crate) fn take_scalar(&mut self, key: &str) -> Result<String> {
        self.map.remove(key).ok_or_else(|| Error::parse("model file", format!("missing key {key}")))
    }

    pub(crate) fn take<F: FromStr>(&mut self, key: &str) -> Result<F> {
        let v = self.take_scalar(key)?;
        parse_one(&v, key)
    }

    pub(crate) fn take_tensor<T: Real>(&mut self, key: &str) -> Result<(usize, usize, Vec<T>)> {
        parse_tensor(&self.take_scalar(key)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        let vals = [0.1_f64, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE];
        let mut s = String::new();
        write_values(&mut s, "x", &vals);
        let back: Vec<f64> = parse_values(s.trim_start_matches("x ")).unwrap();
        assert_eq!(back, vals);
    }

    #[test]
    fn header_is_checked() {
        assert!(Fields::parse("other v1\n", "tag", 1).is_err());
        assert!(Fields::parse("tag v2\n", "tag", 1).is_err());
        let mut f = Fields::parse("tag v1\na 1\nb 2 3\n", "tag", 1).unwrap();
        assert_eq!(f.take::<u32>("a").unwrap(), 1);
        assert_eq!(f.take_scalar("b").unwrap(), "2 3");
        assert!(f.take_scalar("c").is_err());
    }
}
