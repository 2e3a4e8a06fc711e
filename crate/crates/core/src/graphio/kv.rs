//! Flat `key = value` text records, one pair per line, `#` comments.

use std::path::Path;

use crate::{Error, Result};

pub fn parse(text: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut offset = 0;
    for (i, raw) in text.split_inclusive('\n').enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if !line.is_empty() {
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    offset,
                    message: format!("expected `key = value`, found {line:?}"),
                });
            };
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        offset += raw.len();
    }
    Ok(out)
}

pub fn render(pairs: &[(String, String)]) -> String {
    let mut s = String::new();
    for (k, v) in pairs {
        s.push_str(k);
        s.push_str(" = ");
        s.push_str(v);
        s.push('\n');
    }
    s
}

/// Looks up `key`, failing with a message naming the record.
pub fn require<'a>(pairs: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    get(pairs, key).ok_or_else(|| Error::corrupt(path, format!("missing key `{key}`")))
}

pub fn get<'a>(pairs: &'a [(String, String)], key: &str) -> Option<&'a str> {
    pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub fn parse_value<T: std::str::FromStr>(value: &str, key: &str, path: &Path) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::corrupt(path, format!("bad value for `{key}`: {value:?} ({e})")))
}
