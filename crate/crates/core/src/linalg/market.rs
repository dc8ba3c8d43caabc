//! Matrix Market coordinate format (`real general`).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::sparse::{SparseMatrix, TripletBuilder};
use crate::error::{Error, Result};

pub fn to_matrix_market(a: &SparseMatrix) -> String {
    let mut out = String::with_capacity(32 * (a.nnz() + 2));
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, v) in a.triplets() {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

pub fn from_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market input".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse(format!("bad Matrix Market banner: {header}")));
    }
    if tokens[2] != "coordinate" || tokens[3] != "real" {
        return Err(Error::Parse(format!(
            "unsupported Matrix Market variant {} {}",
            tokens[2], tokens[3]
        )));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry '{other}'"))),
    };
    let mut body = lines.filter(|l| !l.trim_start().starts_with('%') && !l.trim().is_empty());
    let size = body
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size line: {size}"))))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(Error::Parse(format!("bad size line: {size}")));
    };
    let mut b = TripletBuilder::with_capacity(nrows, ncols, nnz);
    let mut count = 0;
    for line in body {
        let mut it = line.split_whitespace();
        let parse_idx = |t: Option<&str>, bound: usize| -> Result<usize> {
            let k: usize = t
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse(format!("bad entry line: {line}")))?;
            if k == 0 || k > bound {
                return Err(Error::Parse(format!("index out of range in line: {line}")));
            }
            Ok(k - 1)
        };
        let i = parse_idx(it.next(), nrows)?;
        let j = parse_idx(it.next(), ncols)?;
        let v: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad value in line: {line}")))?;
        b.push(i, j, v);
        if symmetric && i != j {
            b.push(j, i, v);
        }
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {count}")));
    }
    Ok(b.build())
}

pub fn write_matrix_market(a: &SparseMatrix, path: &Path) -> Result<()> {
    fs::write(path, to_matrix_market(a)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_matrix_market(&text)
}
