//! Dataset persistence: a directory holding the expression and metadata
//! CSVs plus a JSON manifest for clusterings, cell-type maps, and survival
//! field declarations.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clinical::ClinicalCohort;
use crate::error::DataError;
use crate::matrix::ExpressionMatrix;
use crate::metadata::MetadataTable;
use crate::single_cell::SingleCellDataset;

const EXPRESSION_FILE: &str = "expression.csv";
const METADATA_FILE: &str = "metadata.csv";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    kind: String,
    #[serde(default)]
    tissue: Option<String>,
    #[serde(default)]
    clusterings: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    cell_types: BTreeMap<String, BTreeMap<usize, String>>,
    #[serde(default)]
    survival_time_field: Option<String>,
    #[serde(default)]
    event_field: Option<String>,
    #[serde(default)]
    dropped_proteins: Vec<String>,
    #[serde(default)]
    imputed_count: usize,
}

pub fn save_single_cell(dataset: &SingleCellDataset, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    dataset
        .matrix
        .to_csv_writer(std::fs::File::create(dir.join(EXPRESSION_FILE))?)?;
    dataset
        .meta
        .to_csv_writer(std::fs::File::create(dir.join(METADATA_FILE))?)?;
    let manifest = Manifest {
        kind: "single_cell".into(),
        tissue: dataset.tissue.clone(),
        clusterings: dataset.clusterings.clone(),
        cell_types: dataset.cell_types.clone(),
        survival_time_field: None,
        event_field: None,
        dropped_proteins: vec![],
        imputed_count: 0,
    };
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn load_single_cell_dir(dir: &Path) -> Result<SingleCellDataset, DataError> {
    let manifest = read_manifest(dir)?;
    if manifest.kind != "single_cell" {
        return Err(DataError::BadManifest(format!(
            "expected single_cell, found {}",
            manifest.kind
        )));
    }
    let matrix = ExpressionMatrix::from_csv_path(&dir.join(EXPRESSION_FILE))?;
    let meta = MetadataTable::from_csv_path(&dir.join(METADATA_FILE))?.reordered(matrix.row_ids())?;
    let mut ds = SingleCellDataset {
        matrix,
        meta,
        clusterings: BTreeMap::new(),
        cell_types: BTreeMap::new(),
        tissue: manifest.tissue,
    };
    for (name, labels) in manifest.clusterings {
        ds.add_clustering(&name, labels)?;
    }
    for (name, map) in manifest.cell_types {
        ds.set_cell_types(&name, map)?;
    }
    Ok(ds)
}

/// Saves a cohort whose matrix is already filtered and imputed; loading it
/// back must not re-impute, so the manifest records that state.
pub fn save_clinical(cohort: &ClinicalCohort, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    cohort
        .matrix
        .to_csv_writer(std::fs::File::create(dir.join(EXPRESSION_FILE))?)?;
    cohort
        .clinical
        .to_csv_writer(std::fs::File::create(dir.join(METADATA_FILE))?)?;
    let manifest = Manifest {
        kind: "clinical".into(),
        tissue: None,
        clusterings: BTreeMap::new(),
        cell_types: BTreeMap::new(),
        survival_time_field: cohort.survival_time_field.clone(),
        event_field: cohort.event_field.clone(),
        dropped_proteins: cohort.dropped_proteins.clone(),
        imputed_count: cohort.imputed_count,
    };
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(())
}

pub fn load_clinical_dir(dir: &Path) -> Result<ClinicalCohort, DataError> {
    let manifest = read_manifest(dir)?;
    if manifest.kind != "clinical" {
        return Err(DataError::BadManifest(format!(
            "expected clinical, found {}",
            manifest.kind
        )));
    }
    let matrix = ExpressionMatrix::from_csv_path(&dir.join(EXPRESSION_FILE))?;
    let clinical =
        MetadataTable::from_csv_path(&dir.join(METADATA_FILE))?.reordered(matrix.row_ids())?;
    let mut cohort = ClinicalCohort {
        matrix,
        clinical,
        survival_time_field: None,
        event_field: None,
        dropped_proteins: manifest.dropped_proteins,
        imputed_count: manifest.imputed_count,
    };
    if let (Some(t), Some(e)) = (manifest.survival_time_field, manifest.event_field) {
        cohort.set_survival_fields(&t, &e)?;
    }
    Ok(cohort)
}

fn read_manifest(dir: &Path) -> Result<Manifest, DataError> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(DataError::MissingFile(path));
    }
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
