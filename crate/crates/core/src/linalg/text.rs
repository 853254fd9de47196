//! Plain-text matrix fixtures: a first line with `dim`, followed by `dim` lines of
//! `dim` whitespace-separated decimals.

use std::fmt::Write as _;

use super::SymMatrix;
use crate::error::{input, Result};
use crate::scalar::Real;

pub fn parse_matrix_text<T: Real>(text: &str) -> Result<SymMatrix<T>> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let dim: usize = match lines.next().map(str::parse) {
        Some(Ok(d)) => d,
        _ => return input("matrix text: first line must be the dimension"),
    };
    let mut entries = Vec::with_capacity(dim * dim);
    for row in 0..dim {
        let Some(line) = lines.next() else {
            return input(format!("matrix text: expected {dim} rows, found {row}"));
        };
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| crate::Error::Input(format!("matrix text: bad number {tok:?} in row {row}")))?;
            entries.push(T::of(v));
        }
        if entries.len() - before != dim {
            return input(format!("matrix text: row {row} has {} entries, expected {dim}", entries.len() - before));
        }
    }
    if lines.next().is_some() {
        return input("matrix text: trailing rows after the matrix");
    }
    SymMatrix::from_row_major(dim, entries)
}

pub fn format_matrix_text<T: Real>(m: &SymMatrix<T>) -> String {
    let mut out = format!("{}\n", m.dim());
    for i in 0..m.dim() {
        let row: Vec<String> = m.row(i).iter().map(|x| x.to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}
