//! Differential abundance (cell-type proportions) and differential
//! expression (per-sample medians), both tested with Welch t-tests between
//! sample groups and BH-adjusted within each contrast.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::StatError;
use crate::metadata::Column;
use crate::single_cell::SingleCellDataset;
use crate::stats::bh::bh_adjust;
use crate::stats::exec::indexed_map;
use crate::stats::ttest::{mean, median, welch};

/// Reserved contrast token meaning "all remaining samples".
pub const REST: &str = "REST";

/// A contrast between two groups of a categorical metadata field. Either
/// side is a field level or [`REST`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contrast {
    pub group_a: String,
    pub group_b: String,
}

impl Contrast {
    pub fn new(a: &str, b: &str) -> Self {
        Self {
            group_a: a.to_string(),
            group_b: b.to_string(),
        }
    }

    pub fn label(&self) -> String {
        format!("{} vs {}", self.group_a, self.group_b)
    }
}

/// One differential-abundance row: a cell type's proportion change between
/// the contrast groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DAResultRow {
    pub contrast: String,
    pub cell_type: String,
    pub log_fc: f64,
    pub p: f64,
    pub p_adj: f64,
}

/// One differential-expression row. `cluster` is present when the analysis
/// was stratified by cell type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DEResultRow {
    pub contrast: String,
    pub cluster: Option<String>,
    pub protein: String,
    pub log_fc: f64,
    pub p: f64,
    pub p_adj: f64,
}

/// Per-sample grouping: sample ids in metadata column `sample` mapped to
/// their value of `field` (all cells of a sample must agree).
fn sample_groups(
    dataset: &SingleCellDataset,
    field: &str,
) -> Result<BTreeMap<String, String>, StatError> {
    let samples = match dataset.meta.column("sample") {
        Some(Column::Categorical(v)) => v,
        _ => return Err(StatError::UnknownField("sample".into())),
    };
    let values = match dataset.meta.column(field) {
        Some(Column::Categorical(v)) => v,
        Some(Column::Numeric(_)) => return Err(StatError::UnknownField(field.to_string())),
        None => return Err(StatError::UnknownField(field.to_string())),
    };
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (s, v) in samples.iter().zip(values) {
        map.entry(s.clone()).or_insert_with(|| v.clone());
    }
    Ok(map)
}

fn split_samples(
    groups: &BTreeMap<String, String>,
    contrast: &Contrast,
) -> Result<(Vec<String>, Vec<String>), StatError> {
    let side = |sel: &str, other: &str| -> Vec<String> {
        groups
            .iter()
            .filter(|(_, v)| {
                if sel == REST {
                    v.as_str() != other
                } else {
                    v.as_str() == sel
                }
            })
            .map(|(s, _)| s.clone())
            .collect()
    };
    let a = side(&contrast.group_a, &contrast.group_b);
    let b = side(&contrast.group_b, &contrast.group_a);
    if a.is_empty() {
        return Err(StatError::EmptyGroup(contrast.group_a.clone()));
    }
    if b.is_empty() {
        return Err(StatError::EmptyGroup(contrast.group_b.clone()));
    }
    if a.len() < 2 {
        return Err(StatError::TooFewSamples {
            side: contrast.group_a.clone(),
            n: a.len(),
        });
    }
    if b.len() < 2 {
        return Err(StatError::TooFewSamples {
            side: contrast.group_b.clone(),
            n: b.len(),
        });
    }
    Ok((a, b))
}

/// Pseudo-count added to every (sample, cell-type) count before computing
/// proportions, keeping log fold changes finite.
pub const ABUNDANCE_PSEUDO_COUNT: f64 = 0.5;

/// Differential abundance of cell types between contrast groups.
///
/// Per sample, cell-type proportions use a 0.5 pseudo-count on every count;
/// the test is Welch's t on logit proportions across samples, and
/// `log_fc = log2(mean prop A / mean prop B)`.
pub fn diff_abundance(
    dataset: &SingleCellDataset,
    clustering: &str,
    field: &str,
    contrasts: &[Contrast],
) -> Result<Vec<DAResultRow>, StatError> {
    let type_of_cell: Vec<&str> = dataset
        .cell_type_of_cells(clustering)
        .map_err(|_| StatError::UnknownClustering(clustering.to_string()))?;
    let mut cell_types: Vec<&str> = {
        let mut v = type_of_cell.clone();
        v.sort();
        v.dedup();
        v
    };
    cell_types.sort();

    let samples_of_cells = match dataset.meta.column("sample") {
        Some(Column::Categorical(v)) => v,
        _ => return Err(StatError::UnknownField("sample".into())),
    };
    let groups = sample_groups(dataset, field)?;

    // proportions[sample][cell_type], pseudo-counted.
    let mut counts: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for (cell, sample) in samples_of_cells.iter().enumerate() {
        *counts
            .entry(sample.as_str())
            .or_default()
            .entry(type_of_cell[cell])
            .or_insert(0.0) += 1.0;
    }
    let mut prop: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for (&sample, per_type) in &counts {
        let total: f64 = cell_types
            .iter()
            .map(|t| per_type.get(t).copied().unwrap_or(0.0) + ABUNDANCE_PSEUDO_COUNT)
            .sum();
        for &t in &cell_types {
            let c = per_type.get(t).copied().unwrap_or(0.0) + ABUNDANCE_PSEUDO_COUNT;
            prop.entry(sample).or_default().insert(t, c / total);
        }
    }

    let mut out = Vec::new();
    for contrast in contrasts {
        let (sa, sb) = split_samples(&groups, contrast)?;
        let mut rows = Vec::new();
        let mut ps = Vec::new();
        for &t in &cell_types {
            let props_a: Vec<f64> = sa.iter().map(|s| prop[s.as_str()][t]).collect();
            let props_b: Vec<f64> = sb.iter().map(|s| prop[s.as_str()][t]).collect();
            let logit = |p: f64| (p / (1.0 - p)).ln();
            let la: Vec<f64> = props_a.iter().map(|&p| logit(p)).collect();
            let lb: Vec<f64> = props_b.iter().map(|&p| logit(p)).collect();
            let test = welch(&la, &lb)?;
            let log_fc = (mean(&props_a) / mean(&props_b)).log2();
            rows.push((t.to_string(), log_fc, test.p));
            ps.push(test.p);
        }
        let adj = bh_adjust(&ps)?;
        for ((cell_type, log_fc, p), p_adj) in rows.into_iter().zip(adj) {
            out.push(DAResultRow {
                contrast: contrast.label(),
                cell_type,
                log_fc,
                p,
                p_adj,
            });
        }
    }
    Ok(out)
}

/// Differential expression of proteins between contrast groups.
///
/// Stratified mode tests each (cell type × protein) on per-sample medians;
/// unstratified mode (no clustering) treats all cells as one cluster.
/// `focus_cell_types` restricts the output and requires stratified mode.
pub fn diff_expression(
    dataset: &SingleCellDataset,
    clustering: Option<&str>,
    field: &str,
    contrasts: &[Contrast],
    focus_cell_types: Option<&[String]>,
) -> Result<Vec<DEResultRow>, StatError> {
    if focus_cell_types.is_some() && clustering.is_none() {
        return Err(StatError::FocusWithoutStratification);
    }
    let type_of_cell: Vec<String> = match clustering {
        Some(name) => dataset
            .cell_type_of_cells(name)
            .map_err(|_| StatError::UnknownClustering(name.to_string()))?
            .into_iter()
            .map(|s| s.to_string())
            .collect(),
        None => vec!["all".to_string(); dataset.n_cells()],
    };
    let mut cell_types: Vec<String> = {
        let mut v = type_of_cell.clone();
        v.sort();
        v.dedup();
        v
    };
    if let Some(focus) = focus_cell_types {
        cell_types.retain(|t| focus.contains(t));
    }

    let samples_of_cells = match dataset.meta.column("sample") {
        Some(Column::Categorical(v)) => v.clone(),
        _ => return Err(StatError::UnknownField("sample".into())),
    };
    let groups = sample_groups(dataset, field)?;

    // Index cells by (cell type, sample) once; every unit below reuses it.
    let mut cells_by: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for i in 0..dataset.n_cells() {
        cells_by
            .entry((type_of_cell[i].as_str(), samples_of_cells[i].as_str()))
            .or_default()
            .push(i);
    }

    let mut out = Vec::new();
    for contrast in contrasts {
        let (sa, sb) = split_samples(&groups, contrast)?;
        // (cell type, protein) units run in parallel; each unit collects
        // per-sample medians and runs one Welch test.
        let units: Vec<(usize, usize)> = (0..cell_types.len())
            .flat_map(|t| (0..dataset.n_proteins()).map(move |j| (t, j)))
            .collect();
        let computed: Vec<Option<(String, String, f64, f64)>> =
            indexed_map(units.len(), |u| {
                let (t, j) = units[u];
                let ct = &cell_types[t];
                let medians = |samples: &[String]| -> Vec<f64> {
                    samples
                        .iter()
                        .filter_map(|s| {
                            let cells = cells_by.get(&(ct.as_str(), s.as_str()))?;
                            let values: Vec<f64> =
                                cells.iter().map(|&i| dataset.matrix.get(i, j)).collect();
                            Some(median(&values))
                        })
                        .collect()
                };
                let ma = medians(&sa);
                let mb = medians(&sb);
                if ma.len() < 2 || mb.len() < 2 {
                    return None;
                }
                let test = welch(&ma, &mb).ok()?;
                let log_fc = test.mean_a - test.mean_b;
                Some((
                    ct.clone(),
                    dataset.matrix.col_ids()[j].clone(),
                    log_fc,
                    test.p,
                ))
            });
        let rows: Vec<(String, String, f64, f64)> = computed.into_iter().flatten().collect();
        let ps: Vec<f64> = rows.iter().map(|r| r.3).collect();
        let adj = bh_adjust(&ps)?;
        for ((ct, protein, log_fc, p), p_adj) in rows.into_iter().zip(adj) {
            out.push(DEResultRow {
                contrast: contrast.label(),
                cluster: clustering.map(|_| ct),
                protein,
                log_fc,
                p,
                p_adj,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::collections::BTreeMap as Map;

    fn annotated_pbmc() -> SingleCellDataset {
        let mut ds = fixtures::toy_pbmc();
        // Ground-truth populations by construction: per sample the first
        // block is T, then B, then NK (see fixtures::toy_pbmc).
        let mut labels = Vec::with_capacity(ds.n_cells());
        for s in 0..6 {
            let counts: [usize; 3] = if s < 3 { [26, 14, 10] } else { [14, 22, 14] };
            for (t, &c) in counts.iter().enumerate() {
                labels.extend(std::iter::repeat(t).take(c));
            }
        }
        ds.add_clustering("truth", labels).unwrap();
        ds.set_cell_types(
            "truth",
            Map::from([
                (0, "T Cells".to_string()),
                (1, "B Cells".to_string()),
                (2, "NK Cells".to_string()),
            ]),
        )
        .unwrap();
        ds
    }

    #[test]
    fn planted_abundance_shift_detected() {
        let ds = annotated_pbmc();
        let rows = diff_abundance(
            &ds,
            "truth",
            "condition",
            &[Contrast::new("Disease", "Healthy")],
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        let t = rows.iter().find(|r| r.cell_type == "T Cells").unwrap();
        assert!(t.log_fc > 0.5, "T cells more abundant in Disease");
        assert!(t.p < 0.01);
        for r in &rows {
            assert!(r.p_adj >= r.p);
            assert!((0.0..=1.0).contains(&r.p));
        }
    }

    #[test]
    fn identical_proportions_give_zero_logfc_p_one() {
        let ds = fixtures::null_single_cell(6, 30, 5);
        // null fixture assigns populations by (cell + sample) % 3: every
        // sample has identical type proportions.
        let rows = diff_abundance(&ds, "types", "condition", &[Contrast::new("A", "B")]).unwrap();
        for r in &rows {
            assert_eq!(r.log_fc, 0.0);
            assert_eq!(r.p, 1.0);
        }
    }

    #[test]
    fn absent_cell_type_stays_finite_via_pseudo_count() {
        let mut ds = fixtures::toy_pbmc();
        // Label every Disease cell type 0/1 by half, all Healthy cells type 0:
        // type 1 is absent from group B entirely.
        let cond = match ds.meta.column("condition").unwrap() {
            Column::Categorical(v) => v.clone(),
            _ => unreachable!(),
        };
        let labels: Vec<usize> = cond
            .iter()
            .enumerate()
            .map(|(i, c)| usize::from(c == "Disease" && i % 2 == 0))
            .collect();
        ds.add_clustering("c", labels).unwrap();
        ds.set_cell_types(
            "c",
            Map::from([(0, "Common".to_string()), (1, "DiseaseOnly".to_string())]),
        )
        .unwrap();
        let rows =
            diff_abundance(&ds, "c", "condition", &[Contrast::new("Disease", "Healthy")]).unwrap();
        let row = rows.iter().find(|r| r.cell_type == "DiseaseOnly").unwrap();
        assert!(row.log_fc.is_finite());
        assert!(row.log_fc > 0.0);
    }

    #[test]
    fn rest_token_compares_against_remaining() {
        let ds = annotated_pbmc();
        let rows = diff_abundance(
            &ds,
            "truth",
            "condition",
            &[Contrast::new("Disease", REST)],
        )
        .unwrap();
        let direct = diff_abundance(
            &ds,
            "truth",
            "condition",
            &[Contrast::new("Disease", "Healthy")],
        )
        .unwrap();
        // Only two levels exist, so REST == Healthy here.
        for (a, b) in rows.iter().zip(&direct) {
            assert_eq!(a.cell_type, b.cell_type);
            assert!((a.log_fc - b.log_fc).abs() < 1e-12);
        }
    }

    #[test]
    fn planted_expression_shift_matches_welch_oracle() {
        let ds = annotated_pbmc();
        let rows = diff_expression(
            &ds,
            Some("truth"),
            "condition",
            &[Contrast::new("Disease", "Healthy")],
            None,
        )
        .unwrap();
        // CD45RO was shifted +1.2 in Disease T cells.
        let hit = rows
            .iter()
            .find(|r| r.cluster.as_deref() == Some("T Cells") && r.protein == "CD45RO")
            .unwrap();
        assert!(hit.p < 0.01, "p = {}", hit.p);
        assert!(hit.log_fc > 0.8);

        // Oracle: recompute the same Welch test from per-sample medians.
        let samples = match ds.meta.column("sample").unwrap() {
            Column::Categorical(v) => v.clone(),
            _ => unreachable!(),
        };
        let cond = match ds.meta.column("condition").unwrap() {
            Column::Categorical(v) => v.clone(),
            _ => unreachable!(),
        };
        let types = ds.cell_type_of_cells("truth").unwrap();
        let j = ds.matrix.col_index("CD45RO").unwrap();
        let mut per_sample: Map<String, Vec<f64>> = Map::new();
        for i in 0..ds.n_cells() {
            if types[i] == "T Cells" {
                per_sample
                    .entry(samples[i].clone())
                    .or_default()
                    .push(ds.matrix.get(i, j));
            }
        }
        let med = |v: &Vec<f64>| {
            let mut s = v.clone();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if s.len() % 2 == 1 { s[s.len() / 2] } else { (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0 }
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (s, v) in &per_sample {
            let c = cond[samples.iter().position(|x| x == s).unwrap()].clone();
            if c == "Disease" { a.push(med(v)) } else { b.push(med(v)) }
        }
        let oracle = welch(&a, &b).unwrap();
        assert!((hit.p - oracle.p).abs() < 1e-10);
        assert!((hit.log_fc - (oracle.mean_a - oracle.mean_b)).abs() < 1e-10);
    }

    #[test]
    fn focus_filter_restricts_output() {
        let ds = annotated_pbmc();
        let focus = vec!["T Cells".to_string()];
        let rows = diff_expression(
            &ds,
            Some("truth"),
            "condition",
            &[Contrast::new("Disease", "Healthy")],
            Some(&focus),
        )
        .unwrap();
        assert!(!rows.is_empty());
        assert!(rows.iter().all(|r| r.cluster.as_deref() == Some("T Cells")));
    }

    #[test]
    fn focus_without_stratification_rejected() {
        let ds = annotated_pbmc();
        let focus = vec!["T Cells".to_string()];
        let err = diff_expression(
            &ds,
            None,
            "condition",
            &[Contrast::new("Disease", "Healthy")],
            Some(&focus),
        )
        .unwrap_err();
        assert!(matches!(err, StatError::FocusWithoutStratification));
    }

    #[test]
    fn unstratified_mode_uses_single_cluster() {
        let ds = annotated_pbmc();
        let rows = diff_expression(
            &ds,
            None,
            "condition",
            &[Contrast::new("Disease", "Healthy")],
            None,
        )
        .unwrap();
        assert_eq!(rows.len(), ds.n_proteins());
        assert!(rows.iter().all(|r| r.cluster.is_none()));
    }

    #[test]
    fn unknown_field_and_numeric_field_rejected() {
        let ds = annotated_pbmc();
        let err = diff_abundance(&ds, "truth", "nope", &[Contrast::new("a", "b")]).unwrap_err();
        assert!(matches!(err, StatError::UnknownField(_)));
    }

    #[test]
    fn empty_group_rejected() {
        let ds = annotated_pbmc();
        let err = diff_abundance(
            &ds,
            "truth",
            "condition",
            &[Contrast::new("Disease", "Missing")],
        )
        .unwrap_err();
        assert!(matches!(err, StatError::EmptyGroup(_)));
    }
}
