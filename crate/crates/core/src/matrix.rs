use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Dense observations × proteins abundance matrix.
///
/// Values are log- or arcsinh-scale abundances. Construction enforces the
/// shape and finiteness invariants every downstream statistic relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionMatrix {
    values: Vec<f64>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
}

impl ExpressionMatrix {
    /// Builds a matrix from row-major values, validating every invariant:
    /// nonempty shape, unique ids, finite values.
    pub fn new(
        values: Vec<f64>,
        row_ids: Vec<String>,
        col_ids: Vec<String>,
    ) -> Result<Self, DataError> {
        if row_ids.is_empty() {
            return Err(DataError::EmptyMatrix("rows"));
        }
        if col_ids.is_empty() {
            return Err(DataError::EmptyMatrix("columns"));
        }
        if values.len() != row_ids.len() * col_ids.len() {
            return Err(DataError::DimensionMismatch(format!(
                "{} values for {}x{} matrix",
                values.len(),
                row_ids.len(),
                col_ids.len()
            )));
        }
        check_unique(&row_ids)?;
        check_unique(&col_ids)?;
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row: row_ids[i / col_ids.len()].clone(),
                    col: col_ids[i % col_ids.len()].clone(),
                });
            }
        }
        Ok(Self {
            values,
            row_ids,
            col_ids,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_ids.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.col_ids.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.col_ids.len();
        &self.values[row * w..(row + 1) * w]
    }

    /// Column values as an owned vector (the layout is row-major).
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn col_index(&self, id: &str) -> Option<usize> {
        self.col_ids.iter().position(|c| c == id)
    }

    pub fn row_index(&self, id: &str) -> Option<usize> {
        self.row_ids.iter().position(|r| r == id)
    }

    /// New matrix keeping only the given row indices, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        let values = rows
            .iter()
            .flat_map(|&r| self.row(r).iter().copied())
            .collect();
        let row_ids = rows.iter().map(|&r| self.row_ids[r].clone()).collect();
        Self::new(values, row_ids, self.col_ids.clone())
    }

    /// Applies `arcsinh(x / cofactor)` in place, the CyTOF convention.
    pub fn arcsinh_transform(&mut self, cofactor: f64) {
        for v in &mut self.values {
            *v = (*v / cofactor).asinh();
        }
    }

    /// Parses an expression CSV: header `id,<protein>...`, one observation
    /// per row, every cell numeric.
    pub fn from_csv_path(path: &Path) -> Result<Self, DataError> {
        if !path.exists() {
            return Err(DataError::MissingFile(path.to_path_buf()));
        }
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() < 2 {
            return Err(DataError::EmptyMatrix("columns"));
        }
        let col_ids: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
        let mut row_ids = Vec::new();
        let mut values = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let id = record.get(0).unwrap_or("").to_string();
            for (j, cell) in record.iter().skip(1).enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| DataError::NonNumericCell {
                    row: id.clone(),
                    col: col_ids.get(j).cloned().unwrap_or_default(),
                    value: cell.to_string(),
                })?;
                values.push(v);
            }
            row_ids.push(id);
        }
        if row_ids.is_empty() {
            return Err(DataError::EmptyMatrix("rows"));
        }
        Self::new(values, row_ids, col_ids)
    }

    /// Writes the matrix back out in the same CSV layout. The `{}` float
    /// formatting is shortest-round-trip, so save/load reproduces values
    /// exactly.
    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.col_ids.iter().cloned());
        wtr.write_record(&header)?;
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|v| format!("{v}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_unique(ids: &[String]) -> Result<(), DataError> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(DataError::DuplicateId(id.clone()));
        }
    }
    Ok(())
}
