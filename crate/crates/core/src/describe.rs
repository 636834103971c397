use serde::{Deserialize, Serialize};

use crate::clinical::ClinicalCohort;
use crate::metadata::{Column, FieldType, MetadataTable};
use crate::single_cell::SingleCellDataset;

/// Maximum number of example values listed per metadata field.
pub const MAX_EXAMPLE_VALUES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub name: String,
    pub field_type: FieldType,
    pub examples: Vec<String>,
    pub distinct_count: usize,
    pub truncated: bool,
}

/// Structured description of a dataset: shape counts plus a catalog of every
/// metadata field. The narrative half is filled in later by the orchestrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDescription {
    pub n_observations: usize,
    pub n_proteins: usize,
    pub field_catalog: Vec<FieldSummary>,
    pub narrative: String,
}

/// Either dataset kind, for operations that only need shape and metadata.
pub enum DatasetRef<'a> {
    SingleCell(&'a SingleCellDataset),
    Clinical(&'a ClinicalCohort),
}

impl<'a> From<&'a SingleCellDataset> for DatasetRef<'a> {
    fn from(d: &'a SingleCellDataset) -> Self {
        DatasetRef::SingleCell(d)
    }
}

impl<'a> From<&'a ClinicalCohort> for DatasetRef<'a> {
    fn from(d: &'a ClinicalCohort) -> Self {
        DatasetRef::Clinical(d)
    }
}

/// Deterministic structured summary: counts and field catalog, empty
/// narrative.
pub fn structured_summary<'a, D: Into<DatasetRef<'a>>>(dataset: D) -> DataDescription {
    let (n_observations, n_proteins, meta) = match dataset.into() {
        DatasetRef::SingleCell(d) => (d.n_cells(), d.n_proteins(), &d.meta),
        DatasetRef::Clinical(d) => (d.n_samples(), d.n_proteins(), &d.clinical),
    };
    DataDescription {
        n_observations,
        n_proteins,
        field_catalog: catalog(meta),
        narrative: String::new(),
    }
}

fn catalog(meta: &MetadataTable) -> Vec<FieldSummary> {
    meta.field_names()
        .iter()
        .map(|name| {
            let col = meta.column(name).expect("field name from table");
            let mut distinct: Vec<String> = match col {
                Column::Categorical(v) => {
                    let mut seen = std::collections::HashSet::new();
                    v.iter()
                        .filter(|s| seen.insert(s.as_str()))
                        .cloned()
                        .collect()
                }
                Column::Numeric(v) => {
                    let mut vals: Vec<f64> = v.iter().flatten().copied().collect();
                    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
                    vals.dedup();
                    vals.iter().map(|f| format!("{f}")).collect()
                }
            };
            if matches!(col.field_type(), FieldType::Categorical) {
                distinct.sort();
            }
            let distinct_count = distinct.len();
            let truncated = distinct_count > MAX_EXAMPLE_VALUES;
            distinct.truncate(MAX_EXAMPLE_VALUES);
            FieldSummary {
                name: name.clone(),
                field_type: col.field_type(),
                examples: distinct,
                distinct_count,
                truncated,
            }
        })
        .collect()
}

impl DataDescription {
    /// Plain-text rendering of the structured half, used in prompts and
    /// reports. Deterministic for a given dataset.
    pub fn structured_text(&self) -> String {
        let mut out = format!(
            "Observations: {}\nProteins: {}\nMetadata fields:\n",
            self.n_observations, self.n_proteins
        );
        if self.field_catalog.is_empty() {
            out.push_str("  (none)\n");
        }
        for f in &self.field_catalog {
            let kind = match f.field_type {
                FieldType::Categorical => "categorical",
                FieldType::Numeric => "numeric",
            };
            let suffix = if f.truncated { ", ..." } else { "" };
            out.push_str(&format!(
                "  - {} ({kind}, {} distinct): {}{}\n",
                f.name,
                f.distinct_count,
                f.examples.join(", "),
                suffix
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::metadata::MetadataTable;

    #[test]
    fn toy_pbmc_summary() {
        let ds = fixtures::toy_pbmc();
        let desc = structured_summary(&ds);
        assert_eq!(desc.n_observations, 300);
        assert_eq!(desc.n_proteins, 10);
        let cond = desc
            .field_catalog
            .iter()
            .find(|f| f.name == "condition")
            .unwrap();
        assert_eq!(cond.examples, vec!["Disease".to_string(), "Healthy".to_string()]);
        assert!(!cond.truncated);
        assert!(desc.narrative.is_empty());
        // Deterministic.
        assert_eq!(desc, structured_summary(&ds));
    }

    #[test]
    fn zero_field_metadata_gives_empty_catalog() {
        let mut ds = fixtures::toy_pbmc();
        ds.meta = MetadataTable::new(ds.meta.keys().to_vec(), vec![], vec![]).unwrap();
        let desc = structured_summary(&ds);
        assert!(desc.field_catalog.is_empty());
        assert!(desc.structured_text().contains("(none)"));
    }

    #[test]
    fn truncates_at_eight_examples() {
        let ds = fixtures::toy_pbmc();
        // cell_id-like field: use the numeric "size" column with 20 distinct
        // values from the wide fixture below instead; simplest is a bespoke table.
        let keys: Vec<String> = (0..20).map(|i| format!("c{i}")).collect();
        let values: Vec<String> = (0..20).map(|i| format!("v{i:02}")).collect();
        let meta = MetadataTable::new(
            keys,
            vec!["tag".into()],
            vec![crate::metadata::Column::Categorical(values)],
        )
        .unwrap();
        let mut ds2 = ds;
        ds2.matrix = crate::matrix::ExpressionMatrix::new(
            vec![0.0; 20],
            (0..20).map(|i| format!("c{i}")).collect(),
            vec!["P".into()],
        )
        .unwrap();
        ds2.meta = meta;
        let desc = structured_summary(&ds2);
        let f = &desc.field_catalog[0];
        assert_eq!(f.examples.len(), 8);
        assert!(f.truncated);
        assert_eq!(f.distinct_count, 20);
    }
}
