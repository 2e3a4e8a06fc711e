//! Whitespace-delimited text matrices, edge lists and label files.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! write/read cycle reproduces every value bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::diffmath::Tensor2;
use crate::{Error, Result};

fn parse_err(path: &Path, line: usize, offset: usize, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        offset,
        message,
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `text`, creating missing parent directories.
pub fn write_string(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Iterates non-blank lines as `(line_no, byte_offset, content)`.
fn lines(text: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    let mut offset = 0;
    text.split_inclusive('\n').enumerate().filter_map(move |(i, raw)| {
        let at = offset;
        offset += raw.len();
        let t = raw.trim();
        (!t.is_empty()).then_some((i + 1, at, t))
    })
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<Tensor2> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (line, offset, content) in lines(text) {
        let before = values.len();
        for tok in content.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, line, offset, format!("not a number: {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, line, offset, format!("non-finite value {tok:?}")));
            }
            values.push(v);
        }
        let width = values.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(path, line, offset, format!("row has {width} values, expected {c}")));
            }
            _ => {}
        }
        rows += 1;
    }
    Array2::from_shape_vec((rows, cols.unwrap_or(0)), values).map_err(|e| Error::Shape(e.to_string()))
}

pub fn render_matrix(m: &Tensor2) -> String {
    let mut s = String::with_capacity(m.len() * 8);
    for row in m.rows() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                s.push(' ');
            }
            write!(s, "{v}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn parse_edges(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::new();
    for (line, offset, content) in lines(text) {
        let toks: Vec<_> = content.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(path, line, offset, format!("expected `u v`, found {content:?}")));
        }
        let parse = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_err(path, line, offset, format!("bad node index {t:?}")))
        };
        out.push((parse(toks[0])?, parse(toks[1])?));
    }
    Ok(out)
}

pub fn render_edges(edges: &[(usize, usize)]) -> String {
    let mut s = String::with_capacity(edges.len() * 10);
    for (u, v) in edges {
        writeln!(s, "{u} {v}").unwrap();
    }
    s
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<u8>> {
    lines(text)
        .map(|(line, offset, content)| match content {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(parse_err(path, line, offset, format!("label must be 0 or 1, found {other:?}"))),
        })
        .collect()
}

pub fn render_labels(labels: &[u8]) -> String {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels {
        writeln!(s, "{l}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn matrix_roundtrip_is_bit_exact() {
        let m = array![[0.1, -0.0, 1e-310], [std::f64::consts::PI, -2.5e17, 3.0]];
        let back = parse_matrix(&render_matrix(&m), Path::new("m")).unwrap();
        for (a, b) in m.iter().zip(back.iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn ragged_rows_report_offset() {
        let err = parse_matrix("1 2\n3\n", Path::new("f.txt")).unwrap_err().to_string();
        assert!(err.contains("f.txt:2 (byte offset 4)"), "{err}");
        assert!(parse_labels("0\n2\n", Path::new("l")).is_err());
        assert!(parse_edges("0 1 2\n", Path::new("e")).is_err());
    }
}
