//! Proteomics dataset handling and the statistics kit behind the analysis
//! workflows: ingestion with filtering and kNN imputation, SOM and NMF
//! clustering, differential abundance/expression, survival analysis,
//! enrichment, and the supporting fixtures.

pub mod clinical;
pub mod describe;
pub mod error;
pub mod fixtures;
pub mod matrix;
pub mod metadata;
pub mod persist;
pub mod single_cell;
pub mod stats;

pub use clinical::{load_clinical, ClinicalCohort};
pub use describe::{structured_summary, DataDescription, FieldSummary};
pub use error::{DataError, StatError};
pub use matrix::ExpressionMatrix;
pub use metadata::{Column, FieldType, MetadataTable};
pub use single_cell::{load_single_cell, SingleCellDataset};
