//! Plain-text file formats.
//!
//! Array files start with a header `q n r t M` followed by `M` lines of `n·r`
//! space-separated symbols. Lines starting with `#` are comments. Blank lines
//! are data (zero-width rows), so a file round-trips exactly.
//!
//! Point files hold one point per line as space-separated rationals `num/den`
//! (or integers); `#` lines and blank lines are ignored.

use std::fmt::Write as _;

use num::rational::BigRational;

use crate::construct::PointSet;
use crate::design::SymbolArray;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrayFile {
    pub t: usize,
    pub array: SymbolArray,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_fields<T: std::str::FromStr>(line_no: usize, text: &str, what: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| parse_err(line_no, format!("bad {what} {tok:?}"))))
        .collect()
}

pub fn parse_array(text: &str) -> Result<ArrayFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.starts_with('#'));
    let (header_line, header) =
        lines.find(|(_, l)| !l.trim().is_empty()).ok_or_else(|| parse_err(1, "missing header"))?;
    let header: Vec<u64> = parse_fields(header_line, header, "header field")?;
    let [q, n, r, t, m] = header[..] else {
        return Err(parse_err(header_line, format!("header needs 5 fields \"q n r t M\", found {}", header.len())));
    };
    if q < 2 || q > u32::MAX as u64 {
        return Err(parse_err(header_line, format!("alphabet size q = {q} must be at least 2")));
    }
    let (q, n, r, t, m) = (q as u32, n as usize, r as usize, t as usize, m as usize);
    if t > n * r {
        return Err(parse_err(header_line, format!("strength {t} exceeds the {} columns", n * r)));
    }
    let width = n * r;
    let mut data = Vec::with_capacity(m.saturating_mul(width).min(1 << 24));
    let mut seen = 0usize;
    let mut last_line = header_line;
    for (line_no, line) in lines {
        last_line = line_no;
        if seen == m {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(line_no, format!("more than the {m} rows declared in the header")));
        }
        let row: Vec<u32> = parse_fields(line_no, line, "symbol")?;
        if row.len() != width {
            return Err(parse_err(line_no, format!("row has {} entries, expected {width}", row.len())));
        }
        if let Some(&s) = row.iter().find(|&&s| s >= q) {
            return Err(parse_err(line_no, format!("symbol {s} is outside 0..{q}")));
        }
        data.extend(row);
        seen += 1;
    }
    if seen != m {
        return Err(parse_err(last_line, format!("header declares {m} rows, found {seen}")));
    }
    let array = if width == 0 { SymbolArray::zero_width(q, n, m) } else { SymbolArray::from_flat(q, n, r, data)? };
    Ok(ArrayFile { t, array })
}

/// Canonical text: single spaces, LF line endings, no comments.
pub fn format_array(array: &SymbolArray, t: usize) -> String {
    let mut out = String::with_capacity(array.as_flat().len() * 2 + 32);
    let _ = writeln!(out, "{} {} {} {} {}", array.q(), array.blocks(), array.depth(), t, array.num_rows());
    for row in array.rows() {
        let mut first = true;
        for s in row {
            if !first {
                out.push(' ');
            }
            first = false;
            let _ = write!(out, "{s}");
        }
        out.push('\n');
    }
    out
}

impl ArrayFile {
    pub fn to_text(&self) -> String {
        format_array(&self.array, self.t)
    }
}

/// Reads a point file; every coordinate must have an exact `m`-digit base-`q` expansion.
pub fn parse_points(text: &str, q: u32, m: usize) -> Result<PointSet> {
    let mut points: Vec<Vec<BigRational>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let coords: Vec<BigRational> = parse_fields(line_no, line, "rational")?;
        if let Some(first) = points.first() {
            if first.len() != coords.len() {
                return Err(parse_err(line_no, format!("{} coordinates, expected {}", coords.len(), first.len())));
            }
        }
        points.push(coords);
    }
    PointSet::new(q, m, points)
}
