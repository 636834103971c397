//! Deterministic synthetic datasets used by tests, benches, and the CLI's
//! built-in `toy-pbmc` / `toy-cohort` dataset names.
//!
//! Everything here is a pure function of hard-coded seeds, so any artifact
//! derived from these fixtures (replay corpora, journal digests) is stable.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clinical::{load_clinical_readers, ClinicalCohort};
use crate::error::DataError;
use crate::matrix::ExpressionMatrix;
use crate::metadata::{Column, MetadataTable};
use crate::single_cell::SingleCellDataset;

const PBMC_PROTEINS: [&str; 10] = [
    "CD3", "CD4", "CD8", "CD19", "CD20", "CD45RO", "CD56", "CD14", "CD16", "HLA-DR",
];

/// 300 cells × 10 proteins across 6 samples, condition Disease/Healthy.
///
/// Three planted populations (T / B / NK-like) separated by >10 noise SDs on
/// their marker channels, T-cell abundance higher in Disease, and CD45RO
/// shifted upward in Disease T cells. Exactly 120 cells are T-like.
pub fn toy_pbmc() -> SingleCellDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sigma = 0.3;

    // type, marker means: (CD3, CD4, CD8, CD19, CD20, CD45RO, CD56, CD14, CD16, HLA-DR)
    let profiles: [(&str, [f64; 10]); 3] = [
        ("T", [5.0, 4.0, 3.5, 1.0, 1.0, 2.5, 1.0, 1.0, 1.0, 1.5]),
        ("B", [1.0, 1.0, 1.0, 5.0, 4.5, 1.0, 1.0, 1.0, 1.0, 4.0]),
        ("NK", [1.0, 1.0, 1.5, 1.0, 1.0, 1.0, 5.0, 1.0, 4.0, 1.0]),
    ];
    // Per-sample population counts; Disease samples carry more T cells.
    let disease_counts = [26usize, 14, 10];
    let healthy_counts = [14usize, 22, 14];

    let mut values = Vec::new();
    let mut cell_ids = Vec::new();
    let mut sample_col = Vec::new();
    let mut condition_col = Vec::new();
    let mut cell = 0usize;
    for s in 0..6 {
        let (condition, counts) = if s < 3 {
            ("Disease", disease_counts)
        } else {
            ("Healthy", healthy_counts)
        };
        let sample = format!("s{}", s + 1);
        for (p, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                let (_, means) = profiles[p];
                for (j, &m) in means.iter().enumerate() {
                    let mut v = m + gaussian(&mut rng) * sigma;
                    // Planted differential expression: CD45RO up in Disease T cells.
                    if condition == "Disease" && p == 0 && PBMC_PROTEINS[j] == "CD45RO" {
                        v += 1.2;
                    }
                    values.push(v);
                }
                cell_ids.push(format!("cell{cell:04}"));
                sample_col.push(sample.clone());
                condition_col.push(condition.to_string());
                cell += 1;
            }
        }
    }

    let matrix = ExpressionMatrix::new(
        values,
        cell_ids.clone(),
        PBMC_PROTEINS.iter().map(|s| s.to_string()).collect(),
    )
    .expect("fixture matrix is valid");
    let meta = MetadataTable::new(
        cell_ids,
        vec!["sample".into(), "condition".into()],
        vec![
            Column::Categorical(sample_col),
            Column::Categorical(condition_col),
        ],
    )
    .expect("fixture metadata is valid");

    SingleCellDataset {
        matrix,
        meta,
        clusterings: BTreeMap::new(),
        cell_types: BTreeMap::new(),
        tissue: Some("Blood".to_string()),
    }
}

/// 40 samples × 21 surviving proteins (22 raw, one planted >25%-missing
/// column is dropped at load), condition Tumor/Normal, survival fields.
///
/// Planted effects: P01 up in Tumor (+1.5), P02 down in Tumor (−1.2), and
/// high P05 associated with shorter survival.
pub fn toy_cohort() -> ClinicalCohort {
    let (expr, meta) = toy_cohort_csv();
    let mut cohort =
        load_clinical_readers(expr.as_bytes(), meta.as_bytes(), 5).expect("fixture cohort loads");
    cohort
        .set_survival_fields("os_months", "os_event")
        .expect("fixture survival fields are valid");
    cohort
}

/// Raw CSV text of the cohort fixture (pre-filter, pre-imputation).
pub fn toy_cohort_csv() -> (String, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 40usize;
    let n_proteins = 22usize;
    let proteins: Vec<String> = (1..=n_proteins).map(|i| format!("P{i:02}")).collect();

    let mut expr = format!("id,{}\n", proteins.join(","));
    let mut meta = String::from("id,condition,age,os_months,os_event\n");
    for i in 0..n {
        let id = format!("pt{i:02}");
        let tumor = i < 20;
        let condition = if tumor { "Tumor" } else { "Normal" };
        let mut cells = Vec::with_capacity(n_proteins);
        let mut p05 = 0.0;
        for (j, _p) in proteins.iter().enumerate() {
            let mut v = 8.0 + gaussian(&mut rng) * 0.8;
            if j == 0 && tumor {
                v += 1.5;
            }
            if j == 1 && tumor {
                v -= 1.2;
            }
            if j == 4 {
                p05 = v;
            }
            // P22 planted with 13/40 missing (32.5%): dropped at load.
            if j == 21 && i % 3 == 0 {
                cells.push("NA".to_string());
                continue;
            }
            // Sparse scattered missingness elsewhere (well under 25%).
            if j >= 6 && (i * 7 + j) % 29 == 0 {
                cells.push(String::new());
                continue;
            }
            cells.push(format!("{v:.4}"));
        }
        expr.push_str(&format!("{id},{}\n", cells.join(",")));

        let age = 45 + ((i * 13) % 30);
        // Higher P05 shortens survival; Tumor shortens it further.
        let hazard = 0.55 * (p05 - 8.0) + if tumor { 0.5 } else { 0.0 };
        let u: f64 = rng.gen_range(0.05..1.0);
        let time = (-u.ln() / (0.02 * hazard.exp())).clamp(1.0, 120.0);
        let event = u8::from(time < 120.0 && (i % 5) != 4);
        meta.push_str(&format!("{id},{condition},{age},{time:.1},{event}\n"));
    }
    (expr, meta)
}

/// Two Gaussian blobs separated by `sep` noise SDs on every dimension,
/// `n_per` rows each. Returns the matrix and the planted labels.
pub fn two_blobs(n_per: usize, dims: usize, sep: f64, seed: u64) -> (ExpressionMatrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = 1.0;
    let mut values = Vec::new();
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for i in 0..2 * n_per {
        let blob = usize::from(i >= n_per);
        for _ in 0..dims {
            let center = blob as f64 * sep * sigma;
            values.push(center + gaussian(&mut rng) * sigma);
        }
        ids.push(format!("r{i:03}"));
        labels.push(blob);
    }
    let matrix = ExpressionMatrix::new(
        values,
        ids,
        (0..dims).map(|d| format!("D{d}")).collect(),
    )
    .expect("blob matrix is valid");
    (matrix, labels)
}

/// Null single-cell dataset for calibration tests: `n_samples` samples of
/// `cells_per` cells, 3 populations with identical expression distribution,
/// condition labels exchangeable across samples.
pub fn null_single_cell(n_samples: usize, cells_per: usize, seed: u64) -> SingleCellDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_proteins = 8usize;
    let mut values = Vec::new();
    let mut ids = Vec::new();
    let mut sample_col = Vec::new();
    let mut condition_col = Vec::new();
    let mut type_labels = Vec::new();
    let mut cell = 0usize;
    for s in 0..n_samples {
        let condition = if s < n_samples / 2 { "A" } else { "B" };
        for c in 0..cells_per {
            for _ in 0..n_proteins {
                values.push(gaussian(&mut rng));
            }
            // Population proportions vary by sample but not by condition.
            type_labels.push((c + s) % 3);
            ids.push(format!("n{cell:05}"));
            sample_col.push(format!("smp{s:02}"));
            condition_col.push(condition.to_string());
            cell += 1;
        }
    }
    let matrix = ExpressionMatrix::new(
        values,
        ids.clone(),
        (0..n_proteins).map(|j| format!("P{j}")).collect(),
    )
    .expect("null matrix is valid");
    let meta = MetadataTable::new(
        ids,
        vec!["sample".into(), "condition".into()],
        vec![
            Column::Categorical(sample_col),
            Column::Categorical(condition_col),
        ],
    )
    .expect("null metadata is valid");
    let mut ds = SingleCellDataset {
        matrix,
        meta,
        clusterings: BTreeMap::new(),
        cell_types: BTreeMap::new(),
        tissue: None,
    };
    ds.add_clustering("types", type_labels).expect("contiguous labels");
    let map = BTreeMap::from([
        (0, "Alpha".to_string()),
        (1, "Beta".to_string()),
        (2, "Gamma".to_string()),
    ]);
    ds.set_cell_types("types", map).expect("map covers labels");
    ds
}

/// Writes the toy-pbmc CSV pair into `dir` as expression.csv / metadata.csv.
pub fn write_toy_pbmc(dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    let ds = toy_pbmc();
    let f = std::fs::File::create(dir.join("expression.csv"))?;
    ds.matrix.to_csv_writer(f)?;
    let f = std::fs::File::create(dir.join("metadata.csv"))?;
    ds.meta.to_csv_writer(f)?;
    Ok(())
}

/// Writes the raw toy-cohort CSV pair (including planted missing values).
pub fn write_toy_cohort(dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir)?;
    let (expr, meta) = toy_cohort_csv();
    std::fs::write(dir.join("expression.csv"), expr)?;
    std::fs::write(dir.join("metadata.csv"), meta)?;
    Ok(())
}

/// Standard normal via Box-Muller, so fixtures depend only on the rand
/// core API and stay stable across rand_distr versions.
fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_deterministic() {
        let a = toy_pbmc();
        let b = toy_pbmc();
        assert_eq!(a.matrix, b.matrix);
        let (e1, m1) = toy_cohort_csv();
        let (e2, m2) = toy_cohort_csv();
        assert_eq!(e1, e2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn cohort_fixture_drops_planted_column() {
        let c = toy_cohort();
        assert_eq!(c.dropped_proteins, vec!["P22".to_string()]);
        assert_eq!(c.n_samples(), 40);
        assert_eq!(c.n_proteins(), 21);
        assert!(c.imputed_count > 0);
    }

    #[test]
    fn blobs_are_separated() {
        let (m, labels) = two_blobs(20, 5, 10.0, 3);
        assert_eq!(m.n_rows(), 40);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 20);
        // Means of the two blobs differ by about sep on every dim.
        let mean0: f64 = (0..20).map(|r| m.get(r, 0)).sum::<f64>() / 20.0;
        let mean1: f64 = (20..40).map(|r| m.get(r, 0)).sum::<f64>() / 20.0;
        assert!((mean1 - mean0) > 8.0);
    }
}
