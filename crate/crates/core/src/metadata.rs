use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;

/// Declared type of a metadata column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FieldType {
    Categorical,
    Numeric,
}

/// One metadata column. Numeric columns keep per-row `Option<f64>` so that
/// missing clinical measurements survive type inference; categorical columns
/// keep the raw strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Categorical(Vec<String>),
    Numeric(Vec<Option<f64>>),
}

impl Column {
    pub fn field_type(&self) -> FieldType {
        match self {
            Column::Categorical(_) => FieldType::Categorical,
            Column::Numeric(_) => FieldType::Numeric,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Column::Categorical(v) => v.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row values rendered as display strings ("" for missing numerics).
    pub fn display_values(&self) -> Vec<String> {
        match self {
            Column::Categorical(v) => v.clone(),
            Column::Numeric(v) => v
                .iter()
                .map(|x| x.map(|f| format!("{f}")).unwrap_or_default())
                .collect(),
        }
    }
}

/// Observation metadata keyed on the paired matrix's row ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataTable {
    keys: Vec<String>,
    names: Vec<String>,
    columns: Vec<Column>,
}

/// Tokens treated as missing values (case-insensitive for "NA").
pub fn is_missing_token(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na")
}

impl MetadataTable {
    pub fn new(
        keys: Vec<String>,
        names: Vec<String>,
        columns: Vec<Column>,
    ) -> Result<Self, DataError> {
        let mut seen = HashSet::with_capacity(keys.len());
        for k in &keys {
            if !seen.insert(k.as_str()) {
                return Err(DataError::DuplicateId(k.clone()));
            }
        }
        for (name, col) in names.iter().zip(&columns) {
            if col.len() != keys.len() {
                return Err(DataError::DimensionMismatch(format!(
                    "column {name:?} has {} values for {} keys",
                    col.len(),
                    keys.len()
                )));
            }
        }
        if names.len() != columns.len() {
            return Err(DataError::DimensionMismatch(
                "column names and columns differ in count".into(),
            ));
        }
        Ok(Self {
            keys,
            names,
            columns,
        })
    }

    pub fn keys(&self) -> &[String] {
        &self.keys
    }

    pub fn field_names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
    }

    pub fn n_rows(&self) -> usize {
        self.keys.len()
    }

    /// Distinct values of a categorical column, in first-appearance order.
    pub fn levels(&self, name: &str) -> Option<Vec<String>> {
        match self.column(name)? {
            Column::Categorical(values) => {
                let mut seen = HashSet::new();
                let mut out = Vec::new();
                for v in values {
                    if seen.insert(v.as_str()) {
                        out.push(v.clone());
                    }
                }
                Some(out)
            }
            Column::Numeric(_) => None,
        }
    }

    /// Checks that keys exactly cover `row_ids` (same set). Order may differ;
    /// use [`MetadataTable::reordered`] to align.
    pub fn covers(&self, row_ids: &[String]) -> Result<(), DataError> {
        let keys: HashSet<&str> = self.keys.iter().map(|s| s.as_str()).collect();
        let rows: HashSet<&str> = row_ids.iter().map(|s| s.as_str()).collect();
        if keys == rows {
            return Ok(());
        }
        let missing: Vec<&&str> = rows.difference(&keys).take(3).collect();
        let extra: Vec<&&str> = keys.difference(&rows).take(3).collect();
        Err(DataError::DimensionMismatch(format!(
            "metadata missing {missing:?}, extra {extra:?}"
        )))
    }

    /// Returns a copy with rows rearranged to match `row_ids` exactly.
    pub fn reordered(&self, row_ids: &[String]) -> Result<Self, DataError> {
        self.covers(row_ids)?;
        let index: std::collections::HashMap<&str, usize> = self
            .keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.as_str(), i))
            .collect();
        let order: Vec<usize> = row_ids.iter().map(|id| index[id.as_str()]).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Categorical(v) => {
                    Column::Categorical(order.iter().map(|&i| v[i].clone()).collect())
                }
                Column::Numeric(v) => Column::Numeric(order.iter().map(|&i| v[i]).collect()),
            })
            .collect();
        Self::new(row_ids.to_vec(), self.names.clone(), columns)
    }

    /// Keeps only the rows at `indices` (by position), in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self, DataError> {
        let keys = indices.iter().map(|&i| self.keys[i].clone()).collect();
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                Column::Categorical(v) => {
                    Column::Categorical(indices.iter().map(|&i| v[i].clone()).collect())
                }
                Column::Numeric(v) => Column::Numeric(indices.iter().map(|&i| v[i]).collect()),
            })
            .collect();
        Self::new(keys, self.names.clone(), columns)
    }

    /// Appends a categorical column.
    pub fn add_categorical(&mut self, name: &str, values: Vec<String>) -> Result<(), DataError> {
        if values.len() != self.keys.len() {
            return Err(DataError::DimensionMismatch(format!(
                "column {name:?} has {} values for {} keys",
                values.len(),
                self.keys.len()
            )));
        }
        if self.names.iter().any(|n| n == name) {
            return Err(DataError::DuplicateId(name.to_string()));
        }
        self.names.push(name.to_string());
        self.columns.push(Column::Categorical(values));
        Ok(())
    }

    /// Parses a metadata CSV: header `id,<field>...`. A column is numeric
    /// when every non-missing cell parses as a number and at least one cell
    /// is non-missing; otherwise categorical.
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
        let names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
        let mut keys = Vec::new();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); names.len()];
        for record in rdr.records() {
            let record = record?;
            keys.push(record.get(0).unwrap_or("").to_string());
            for (j, cell) in record.iter().skip(1).enumerate() {
                if j < raw.len() {
                    raw[j].push(cell.to_string());
                }
            }
        }
        let columns = raw.into_iter().map(infer_column).collect();
        Self::new(keys, names, columns)
    }

    pub fn to_csv_writer<W: std::io::Write>(&self, writer: W) -> Result<(), DataError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["id".to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header)?;
        let rendered: Vec<Vec<String>> = self.columns.iter().map(|c| c.display_values()).collect();
        for (i, key) in self.keys.iter().enumerate() {
            let mut rec = vec![key.clone()];
            for col in &rendered {
                rec.push(col[i].clone());
            }
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn infer_column(raw: Vec<String>) -> Column {
    let mut any_value = false;
    let mut all_numeric = true;
    for cell in &raw {
        if is_missing_token(cell) {
            continue;
        }
        any_value = true;
        if cell.trim().parse::<f64>().is_err() {
            all_numeric = false;
            break;
        }
    }
    if any_value && all_numeric {
        Column::Numeric(
            raw.iter()
                .map(|c| {
                    if is_missing_token(c) {
                        None
                    } else {
                        c.trim().parse().ok()
                    }
                })
                .collect(),
        )
    } else {
        Column::Categorical(raw)
    }
}
