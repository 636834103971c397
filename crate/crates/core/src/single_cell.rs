use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::DataError;
use crate::matrix::ExpressionMatrix;
use crate::metadata::MetadataTable;

/// Cells × proteins dataset with per-cell metadata, named clusterings, and
/// cell-type maps keyed by clustering name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingleCellDataset {
    pub matrix: ExpressionMatrix,
    pub meta: MetadataTable,
    /// name → per-cell labels, contiguous from 0.
    pub clusterings: BTreeMap<String, Vec<usize>>,
    /// clustering name → (label → cell-type name).
    pub cell_types: BTreeMap<String, BTreeMap<usize, String>>,
    /// Tissue of origin, used when annotating cell types.
    pub tissue: Option<String>,
}

/// Options for [`load_single_cell`].
#[derive(Debug, Clone, Copy, Default)]
pub struct SingleCellLoadOptions {
    /// Apply `arcsinh(x / 5)` at load. Off by default; inputs are usually
    /// already transformed.
    pub arcsinh: bool,
}

/// Loads a cells × proteins expression CSV plus a per-cell metadata CSV.
pub fn load_single_cell(
    expression_path: &Path,
    metadata_path: &Path,
) -> Result<SingleCellDataset, DataError> {
    load_single_cell_with(expression_path, metadata_path, SingleCellLoadOptions::default())
}

pub fn load_single_cell_with(
    expression_path: &Path,
    metadata_path: &Path,
    options: SingleCellLoadOptions,
) -> Result<SingleCellDataset, DataError> {
    let mut matrix = ExpressionMatrix::from_csv_path(expression_path)?;
    if options.arcsinh {
        matrix.arcsinh_transform(5.0);
    }
    let meta = MetadataTable::from_csv_path(metadata_path)?.reordered(matrix.row_ids())?;
    Ok(SingleCellDataset {
        matrix,
        meta,
        clusterings: BTreeMap::new(),
        cell_types: BTreeMap::new(),
        tissue: None,
    })
}

impl SingleCellDataset {
    pub fn n_cells(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_proteins(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Registers a clustering, validating length and label contiguity.
    pub fn add_clustering(&mut self, name: &str, labels: Vec<usize>) -> Result<(), DataError> {
        if labels.len() != self.n_cells() {
            return Err(DataError::DimensionMismatch(format!(
                "clustering {name:?} has {} labels for {} cells",
                labels.len(),
                self.n_cells()
            )));
        }
        let distinct: HashSet<usize> = labels.iter().copied().collect();
        let max = distinct.iter().max().copied().unwrap_or(0);
        if distinct.len() != max + 1 {
            return Err(DataError::BadManifest(format!(
                "clustering {name:?} labels are not contiguous from 0"
            )));
        }
        self.clusterings.insert(name.to_string(), labels);
        Ok(())
    }

    /// Attaches a cell-type map for an existing clustering. The map must
    /// cover exactly the clustering's labels.
    pub fn set_cell_types(
        &mut self,
        clustering: &str,
        map: BTreeMap<usize, String>,
    ) -> Result<(), DataError> {
        let labels = self
            .clusterings
            .get(clustering)
            .ok_or_else(|| DataError::UnknownClustering(clustering.to_string()))?;
        let present: HashSet<usize> = labels.iter().copied().collect();
        let mapped: HashSet<usize> = map.keys().copied().collect();
        if present != mapped {
            return Err(DataError::BadManifest(format!(
                "cell-type map for {clustering:?} covers labels {mapped:?}, clustering has {present:?}"
            )));
        }
        self.cell_types.insert(clustering.to_string(), map);
        Ok(())
    }

    /// Cell-type name of each cell under the named clustering.
    pub fn cell_type_of_cells(&self, clustering: &str) -> Result<Vec<&str>, DataError> {
        let labels = self
            .clusterings
            .get(clustering)
            .ok_or_else(|| DataError::UnknownClustering(clustering.to_string()))?;
        let map = self
            .cell_types
            .get(clustering)
            .ok_or_else(|| DataError::UnknownClustering(clustering.to_string()))?;
        Ok(labels.iter().map(|l| map[l].as_str()).collect())
    }

    /// New dataset containing exactly the cells annotated with `cell_type`
    /// under `clustering`. The parent is left unmodified; clusterings are
    /// dropped from the subset (labels would no longer be contiguous).
    pub fn subset_by_cell_type(
        &self,
        clustering: &str,
        cell_type: &str,
    ) -> Result<SingleCellDataset, DataError> {
        let labels = self
            .clusterings
            .get(clustering)
            .ok_or_else(|| DataError::UnknownClustering(clustering.to_string()))?;
        let map = self
            .cell_types
            .get(clustering)
            .ok_or_else(|| DataError::UnknownClustering(clustering.to_string()))?;
        if !map.values().any(|t| t == cell_type) {
            return Err(DataError::UnknownCellType(
                cell_type.to_string(),
                clustering.to_string(),
            ));
        }
        let keep: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|(_, l)| map[l] == cell_type)
            .map(|(i, _)| i)
            .collect();
        Ok(SingleCellDataset {
            matrix: self.matrix.select_rows(&keep)?,
            meta: self.meta.select_rows(&keep)?,
            clusterings: BTreeMap::new(),
            cell_types: BTreeMap::new(),
            tissue: self.tissue.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn toy_fixture_has_expected_shape() {
        let ds = fixtures::toy_pbmc();
        assert_eq!(ds.n_cells(), 300);
        assert_eq!(ds.n_proteins(), 10);
        let levels = ds.meta.levels("condition").unwrap();
        assert_eq!(levels.len(), 2);
        assert!(levels.contains(&"Disease".to_string()));
        assert!(levels.contains(&"Healthy".to_string()));
        assert_eq!(ds.meta.levels("sample").unwrap().len(), 6);
    }

    #[test]
    fn subset_keeps_matching_cells_only() {
        let mut ds = fixtures::toy_pbmc();
        let labels: Vec<usize> = (0..ds.n_cells()).map(|i| usize::from(i >= 120)).collect();
        ds.add_clustering("c", labels).unwrap();
        let map = BTreeMap::from([(0, "T Cells".to_string()), (1, "B Cells".to_string())]);
        ds.set_cell_types("c", map).unwrap();

        let sub = ds.subset_by_cell_type("c", "T Cells").unwrap();
        assert_eq!(sub.n_cells(), 120);
        assert_eq!(ds.n_cells(), 300);

        let err = ds.subset_by_cell_type("c", "NK Cells").unwrap_err();
        assert!(matches!(err, DataError::UnknownCellType(..)));
        let err = ds.subset_by_cell_type("missing", "T Cells").unwrap_err();
        assert!(matches!(err, DataError::UnknownClustering(_)));
    }

    #[test]
    fn single_cell_type_subset_is_identity() {
        let mut ds = fixtures::toy_pbmc();
        ds.add_clustering("c", vec![0; ds.n_cells()]).unwrap();
        ds.set_cell_types("c", BTreeMap::from([(0, "T Cells".to_string())]))
            .unwrap();
        let sub = ds.subset_by_cell_type("c", "T Cells").unwrap();
        assert_eq!(sub.n_cells(), ds.n_cells());
        assert_eq!(sub.matrix, ds.matrix);
    }

    #[test]
    fn cell_type_map_must_cover_labels() {
        let mut ds = fixtures::toy_pbmc();
        ds.add_clustering("c", vec![0; ds.n_cells()]).unwrap();
        let err = ds
            .set_cell_types(
                "c",
                BTreeMap::from([(0, "A".to_string()), (1, "B".to_string())]),
            )
            .unwrap_err();
        assert!(matches!(err, DataError::BadManifest(_)));
    }
}
