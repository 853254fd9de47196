use std::io::Read;

use crate::error::{input, Result};

/// Dense row-major `rows × cols` data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return input(format!("data of length {} does not form a {rows} x {cols} matrix", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return input("data entries must be finite");
        }
        Ok(DataMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Reads `N` rows of `n` numeric columns. A first line that does not parse as
/// numbers is taken as a header.
pub fn read_samples_csv<R: Read>(reader: R) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut data = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| crate::Error::Input(format!("csv: {e}")))?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if line == 0 => continue,
            Err(e) => return input(format!("csv line {}: {e}", line + 1)),
        };
        if rows == 0 {
            cols = values.len();
        } else if values.len() != cols {
            return input(format!("csv line {} has {} columns, expected {cols}", line + 1, values.len()));
        }
        data.extend(values);
        rows += 1;
    }
    DataMatrix::new(rows, cols, data)
}
