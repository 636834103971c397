use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::matrix::ExpressionMatrix;
use crate::metadata::{is_missing_token, Column, MetadataTable};

/// Samples × proteins cohort with clinical metadata. Construction filters
/// out protein columns with more than 25% missing values, then kNN-imputes
/// whatever is left, so the stored matrix is always complete.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClinicalCohort {
    pub matrix: ExpressionMatrix,
    pub clinical: MetadataTable,
    pub survival_time_field: Option<String>,
    pub event_field: Option<String>,
    /// Protein columns dropped by the missing-value filter.
    pub dropped_proteins: Vec<String>,
    /// Number of cells filled in by imputation.
    pub imputed_count: usize,
}

/// Fraction of missing values above which a protein column is dropped.
pub const MISSING_DROP_THRESHOLD: f64 = 0.25;

/// Loads a samples × proteins expression CSV (missing cells encoded as ""
/// or "NA") plus a clinical metadata CSV, dropping >25%-missing protein
/// columns and imputing the rest with k-nearest-neighbor means.
pub fn load_clinical(
    expression_path: &Path,
    metadata_path: &Path,
    knn_k: usize,
) -> Result<ClinicalCohort, DataError> {
    if !expression_path.exists() {
        return Err(DataError::MissingFile(expression_path.to_path_buf()));
    }
    let file = std::fs::File::open(expression_path)?;
    let (values, row_ids, col_ids) = read_sparse_csv(file)?;
    let clinical = MetadataTable::from_csv_path(metadata_path)?;
    build_cohort(values, row_ids, col_ids, clinical, knn_k)
}

/// Same as [`load_clinical`] but over in-memory readers; used by tests.
pub fn load_clinical_readers<R1: std::io::Read, R2: std::io::Read>(
    expression: R1,
    metadata: R2,
    knn_k: usize,
) -> Result<ClinicalCohort, DataError> {
    let (values, row_ids, col_ids) = read_sparse_csv(expression)?;
    let clinical = MetadataTable::from_csv_reader(metadata)?;
    build_cohort(values, row_ids, col_ids, clinical, knn_k)
}

fn read_sparse_csv<R: std::io::Read>(
    reader: R,
) -> Result<(Vec<Vec<Option<f64>>>, Vec<String>, Vec<String>), DataError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(DataError::EmptyMatrix("columns"));
    }
    let col_ids: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    let mut row_ids = Vec::new();
    let mut values: Vec<Vec<Option<f64>>> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let id = record.get(0).unwrap_or("").to_string();
        let mut row = Vec::with_capacity(col_ids.len());
        for (j, cell) in record.iter().skip(1).enumerate() {
            if is_missing_token(cell) {
                row.push(None);
            } else {
                let v: f64 = cell.trim().parse().map_err(|_| DataError::NonNumericCell {
                    row: id.clone(),
                    col: col_ids.get(j).cloned().unwrap_or_default(),
                    value: cell.to_string(),
                })?;
                row.push(Some(v));
            }
        }
        row_ids.push(id);
        values.push(row);
    }
    if row_ids.is_empty() {
        return Err(DataError::EmptyMatrix("rows"));
    }
    Ok((values, row_ids, col_ids))
}

fn build_cohort(
    values: Vec<Vec<Option<f64>>>,
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    clinical: MetadataTable,
    knn_k: usize,
) -> Result<ClinicalCohort, DataError> {
    let n = row_ids.len();

    // Filtering precedes imputation: no value is ever imputed into a
    // column that the threshold drops.
    let mut kept = Vec::new();
    let mut dropped_proteins = Vec::new();
    for (j, col) in col_ids.iter().enumerate() {
        let missing = values.iter().filter(|row| row[j].is_none()).count();
        if missing as f64 / n as f64 > MISSING_DROP_THRESHOLD {
            dropped_proteins.push(col.clone());
        } else {
            kept.push(j);
        }
    }
    if kept.is_empty() {
        return Err(DataError::AllColumnsDropped);
    }

    let mut grid: Vec<Vec<Option<f64>>> = values
        .iter()
        .map(|row| kept.iter().map(|&j| row[j]).collect())
        .collect();
    let kept_ids: Vec<String> = kept.iter().map(|&j| col_ids[j].clone()).collect();

    let imputed_count = impute_knn(&mut grid, &row_ids, knn_k)?;

    let flat: Vec<f64> = grid
        .iter()
        .flat_map(|row| row.iter().map(|v| v.expect("imputation fills all cells")))
        .collect();
    let matrix = ExpressionMatrix::new(flat, row_ids, kept_ids)?;
    let clinical = clinical.reordered(matrix.row_ids())?;

    Ok(ClinicalCohort {
        matrix,
        clinical,
        survival_time_field: None,
        event_field: None,
        dropped_proteins,
        imputed_count,
    })
}

/// Fills every `None` cell with the mean of that column over the k nearest
/// samples (Euclidean distance on columns observed in both samples), among
/// samples that observed the column. Returns the number of imputed cells.
fn impute_knn(
    grid: &mut [Vec<Option<f64>>],
    row_ids: &[String],
    k: usize,
) -> Result<usize, DataError> {
    let n = grid.len();
    let snapshot: Vec<Vec<Option<f64>>> = grid.to_vec();
    let mut imputed = 0;
    for i in 0..n {
        let holes: Vec<usize> = (0..snapshot[i].len())
            .filter(|&j| snapshot[i][j].is_none())
            .collect();
        if holes.is_empty() {
            continue;
        }
        // Distances are computed once per sample against the pre-imputation
        // snapshot, so fill-ins never feed back into neighbor choice.
        let mut dists: Vec<(usize, f64)> = Vec::new();
        for t in 0..n {
            if t == i {
                continue;
            }
            let mut sum = 0.0;
            let mut shared = 0usize;
            for j in 0..snapshot[i].len() {
                if let (Some(a), Some(b)) = (snapshot[i][j], snapshot[t][j]) {
                    sum += (a - b) * (a - b);
                    shared += 1;
                }
            }
            if shared > 0 {
                dists.push((t, sum.sqrt()));
            }
        }
        dists.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
        for j in holes {
            let neighbors: Vec<usize> = dists
                .iter()
                .map(|&(t, _)| t)
                .filter(|&t| snapshot[t][j].is_some())
                .take(k)
                .collect();
            if neighbors.len() < k {
                return Err(DataError::InsufficientNeighbors {
                    sample: row_ids[i].clone(),
                    k,
                });
            }
            let mean = neighbors
                .iter()
                .map(|&t| snapshot[t][j].unwrap())
                .sum::<f64>()
                / neighbors.len() as f64;
            grid[i][j] = Some(mean);
            imputed += 1;
        }
    }
    Ok(imputed)
}

impl ClinicalCohort {
    pub fn n_samples(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_proteins(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Declares which clinical columns hold survival time and event status,
    /// validating time ≥ 0 and events ⊆ {0, 1} on non-missing entries.
    pub fn set_survival_fields(&mut self, time: &str, event: &str) -> Result<(), DataError> {
        let time_col = self
            .clinical
            .column(time)
            .ok_or_else(|| DataError::UnknownField(time.to_string()))?;
        match time_col {
            Column::Numeric(v) => {
                if v.iter().flatten().any(|&x| x < 0.0) {
                    return Err(DataError::BadSurvivalField {
                        field: time.to_string(),
                        reason: "negative survival time".into(),
                    });
                }
            }
            Column::Categorical(_) => {
                return Err(DataError::BadSurvivalField {
                    field: time.to_string(),
                    reason: "survival time must be numeric".into(),
                })
            }
        }
        let event_col = self
            .clinical
            .column(event)
            .ok_or_else(|| DataError::UnknownField(event.to_string()))?;
        match event_col {
            Column::Numeric(v) => {
                if v.iter().flatten().any(|&x| x != 0.0 && x != 1.0) {
                    return Err(DataError::BadSurvivalField {
                        field: event.to_string(),
                        reason: "event status must be 0 or 1".into(),
                    });
                }
            }
            Column::Categorical(_) => {
                return Err(DataError::BadSurvivalField {
                    field: event.to_string(),
                    reason: "event status must be numeric 0/1".into(),
                })
            }
        }
        self.survival_time_field = Some(time.to_string());
        self.event_field = Some(event.to_string());
        Ok(())
    }

    /// (time, event) pairs for the samples where both are observed, in
    /// matrix row order, restricted to `rows` when given.
    pub fn survival_data(&self) -> Result<(Vec<f64>, Vec<u8>), DataError> {
        let time = self
            .survival_time_field
            .as_deref()
            .ok_or_else(|| DataError::UnknownField("survival time".into()))?;
        let event = self
            .event_field
            .as_deref()
            .ok_or_else(|| DataError::UnknownField("event status".into()))?;
        let (Some(Column::Numeric(t)), Some(Column::Numeric(e))) =
            (self.clinical.column(time), self.clinical.column(event))
        else {
            return Err(DataError::UnknownField(time.to_string()));
        };
        let mut times = Vec::new();
        let mut events = Vec::new();
        for i in 0..self.n_samples() {
            match (t[i], e[i]) {
                (Some(ti), Some(ei)) => {
                    times.push(ti);
                    events.push(ei as u8);
                }
                _ => {
                    times.push(f64::NAN);
                    events.push(u8::MAX);
                }
            }
        }
        Ok((times, events))
    }
}
