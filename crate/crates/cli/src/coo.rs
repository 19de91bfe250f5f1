//! Coordinate-list text format: a header `n nnz`, then one `i j v` line per
//! entry with 1-based indices. `#` starts a comment.

use std::fmt::Write as _;
use std::path::Path;

use relusolve_core::{SparseMatrix, SparsityPattern};
use thiserror::Error;

use crate::error::{CliError, Result};
use crate::output::write_atomic;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct CooError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> CooError {
    CooError {
        line,
        message: message.into(),
    }
}

fn parse_field<T: std::str::FromStr>(line: usize, what: &str, tok: Option<&str>) -> std::result::Result<T, CooError> {
    let tok = tok.ok_or_else(|| err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| err(line, format!("cannot parse {what} from {tok:?}")))
}

pub fn parse_coo(text: &str) -> std::result::Result<SparseMatrix, CooError> {
    let mut header: Option<(usize, usize)> = None;
    let mut entries: Vec<(usize, usize, f64, usize)> = Vec::new();
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut toks = content.split_whitespace();
        match header {
            None => {
                let n: usize = parse_field(line, "n", toks.next())?;
                let nnz: usize = parse_field(line, "nnz", toks.next())?;
                if toks.next().is_some() {
                    return Err(err(line, "header must be `n nnz`"));
                }
                if n == 0 {
                    return Err(err(line, "matrix dimension must be positive"));
                }
                header = Some((n, nnz));
            }
            Some((n, _)) => {
                let i: usize = parse_field(line, "row index", toks.next())?;
                let j: usize = parse_field(line, "column index", toks.next())?;
                let v: f64 = parse_field(line, "value", toks.next())?;
                if toks.next().is_some() {
                    return Err(err(line, "expected `i j v`"));
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(err(line, format!("index ({i}, {j}) outside 1..={n}")));
                }
                if !v.is_finite() {
                    return Err(err(line, "non-finite value"));
                }
                entries.push((i - 1, j - 1, v, line));
            }
        }
    }
    let (n, nnz) = header.ok_or_else(|| err(last_line.max(1), "missing header `n nnz`"))?;
    if entries.len() != nnz {
        return Err(err(
            last_line,
            format!("header announces {nnz} entries, found {}", entries.len()),
        ));
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by_key(|&k| (entries[k].0, entries[k].1, entries[k].3));
    for w in order.windows(2) {
        let (a, b) = (&entries[w[0]], &entries[w[1]]);
        if a.0 == b.0 && a.1 == b.1 {
            return Err(err(
                b.3,
                format!("duplicate entry ({}, {}), first given on line {}", a.0 + 1, a.1 + 1, a.3),
            ));
        }
    }
    let mut rows = vec![Vec::new(); n];
    let mut values = Vec::with_capacity(nnz);
    for &k in &order {
        rows[entries[k].0].push(entries[k].1);
        values.push(entries[k].2);
    }
    if let Some(i) = rows.iter().position(Vec::is_empty) {
        return Err(err(last_line, format!("row {} has no entries", i + 1)));
    }
    let pattern = SparsityPattern::new(rows).map_err(|e| err(last_line, e.to_string()))?;
    SparseMatrix::new(pattern, values).map_err(|e| err(last_line, e.to_string()))
}

pub fn format_coo(a: &SparseMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", a.n(), a.pattern().eta());
    for ((i, j), v) in a.pattern().entries().zip(a.values()) {
        let _ = writeln!(out, "{} {} {v:?}", i + 1, j + 1);
    }
    out
}

pub fn read_coo(path: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_coo(&text).map_err(|source| CliError::Coo {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_coo(path: &Path, a: &SparseMatrix) -> Result<()> {
    write_atomic(path, |w| w.write_all(format_coo(a).as_bytes()))
}
