//! Native statistical procedures behind the analysis workflows. Every
//! operation is a pure function of its inputs plus an explicit seed, so all
//! of them are reentrant and reproducible; parallel execution (the default
//! `parallel` feature) never changes results.

pub mod bh;
pub mod diff;
pub mod enrich;
pub mod exec;
pub mod genesets;
pub mod markers;
pub mod nmf;
pub mod pearson;
pub mod som;
pub mod survival;
pub mod ttest;

pub use bh::bh_adjust;
pub use diff::{diff_abundance, diff_expression, Contrast, DAResultRow, DEResultRow, REST};
pub use enrich::{gsea, ora, Direction, EnrichmentResultRow};
pub use genesets::{load_gmt, parse_gmt, GeneSetMap};
pub use markers::{top_markers, MarkerRow};
pub use nmf::{nmf_consensus, ConsensusClusteringResult, KMetrics};
pub use pearson::pearson;
pub use som::{som_cluster, SomClustering};
pub use survival::{
    cox_univariate, logrank, logrank_threshold_sweep, SurvivalMethod, SurvivalResult,
    SWEEP_PERCENTILES,
};
