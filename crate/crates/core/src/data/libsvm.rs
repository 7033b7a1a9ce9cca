//! LIBSVM text format: one example per line, `label index:value ...`, with
//! 1-based strictly increasing feature indices. `#` starts a comment that
//! runs to the end of the line.

use std::fmt::Write as _;
use std::io::BufRead;

use super::{Dataset, SparseMatrix, StorageOrder};
use crate::{Error, Real, Result};

/// Parses a LIBSVM stream into a CSR dataset.
///
/// The column count is the largest index seen, or `expected_cols` when that
/// is larger.
pub fn parse_libsvm<T: Real, R: BufRead>(reader: R, expected_cols: Option<usize>) -> Result<Dataset<T>> {
    let mut offsets = vec![0usize];
    let mut indices = Vec::new();
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: T =
            label_tok.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad label {label_tok:?}") })?;
        labels.push(label);

        let mut prev: Option<usize> = None;
        for tok in tokens {
            let (idx_str, val_str) = tok
                .split_once(':')
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected index:value, got {tok:?}") })?;
            let idx: i64 =
                idx_str.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad index {idx_str:?}") })?;
            let val: T =
                val_str.parse().map_err(|_| Error::Parse { line: lineno, msg: format!("bad value {val_str:?}") })?;
            if idx <= 0 {
                return Err(Error::Structure { line: lineno, msg: format!("index {idx} is not positive") });
            }
            let col = (idx - 1) as usize;
            if prev.is_some_and(|p| col <= p) {
                return Err(Error::Structure { line: lineno, msg: format!("index {idx} does not increase") });
            }
            prev = Some(col);
            max_index = max_index.max(col + 1);
            indices.push(col);
            values.push(val);
        }
        offsets.push(indices.len());
    }

    let n_cols = max_index.max(expected_cols.unwrap_or(0));
    let n_rows = labels.len();
    let matrix = SparseMatrix::new(n_rows, n_cols, StorageOrder::Csr, offsets, indices, values)?;
    Dataset::new(matrix, labels)
}

/// Parses LIBSVM text held in memory.
pub fn parse_libsvm_str<T: Real>(text: &str, expected_cols: Option<usize>) -> Result<Dataset<T>> {
    parse_libsvm(text.as_bytes(), expected_cols)
}

/// Serializes a dataset in LIBSVM format. Values use the shortest
/// representation that parses back to the same number.
pub fn to_libsvm_string<T: Real>(data: &Dataset<T>) -> String {
    let csr = data.matrix.to_order(StorageOrder::Csr);
    let mut out = String::new();
    for (row, label) in data.labels.iter().enumerate() {
        write!(out, "{label}").unwrap();
        let (idx, vals) = csr.outer(row);
        for (&c, v) in idx.iter().zip(vals) {
            write!(out, " {}:{}", c + 1, v).unwrap();
        }
        out.push('\n');
    }
    out
}
