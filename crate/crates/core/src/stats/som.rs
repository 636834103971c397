//! Self-organizing-map clustering in the FlowSOM style: train a rectangular
//! batch SOM on the expression rows, then metacluster the learned code
//! vectors with Ward-linkage agglomeration and label each row by its best
//! matching unit's metacluster.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::StatError;
use crate::matrix::ExpressionMatrix;
use crate::stats::exec::indexed_map;

/// Passes over the data during SOM training.
const SOM_EPOCHS: usize = 10;
/// Neighborhood radius at the final epoch.
const SOM_FINAL_RADIUS: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct SomClustering {
    /// Per-row metacluster labels, contiguous from 0.
    pub labels: Vec<usize>,
    /// Set when the input had zero variance across all columns; the labels
    /// are still returned (everything lands in one cluster).
    pub degenerate: bool,
    /// Side length of the trained grid.
    pub grid_side: usize,
}

/// Clusters matrix rows into at most `k` groups. Deterministic for a given
/// seed. The SOM grid is ⌈√(4k)⌉ × ⌈√(4k)⌉ with batch updates and a
/// linearly decaying Gaussian neighborhood.
pub fn som_cluster(matrix: &ExpressionMatrix, k: usize, seed: u64) -> Result<SomClustering, StatError> {
    let n = matrix.n_rows();
    let d = matrix.n_cols();
    if k == 0 || k > n {
        return Err(StatError::KTooLarge { k, rows: n });
    }
    let degenerate = (0..d).all(|j| {
        let col = matrix.column(j);
        col.windows(2).all(|w| w[0] == w[1])
    });
    if k == 1 || degenerate {
        return Ok(SomClustering {
            labels: vec![0; n],
            degenerate,
            grid_side: 1,
        });
    }

    let side = ((4 * k) as f64).sqrt().ceil() as usize;
    let n_nodes = side * side;

    // Initialize codes uniformly inside each column's observed range.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            let col = matrix.column(j);
            let min = col.iter().copied().fold(f64::INFINITY, f64::min);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (min, max)
        })
        .collect();
    let mut codes: Vec<Vec<f64>> = (0..n_nodes)
        .map(|_| {
            ranges
                .iter()
                .map(|&(lo, hi)| {
                    if hi > lo {
                        rng.gen_range(lo..hi)
                    } else {
                        lo
                    }
                })
                .collect()
        })
        .collect();

    let grid_pos = |node: usize| ((node / side) as f64, (node % side) as f64);
    // Half the grid diagonal.
    let initial_radius = (2.0f64).sqrt() * (side as f64 - 1.0) / 2.0;

    for epoch in 0..SOM_EPOCHS {
        let frac = if SOM_EPOCHS > 1 {
            epoch as f64 / (SOM_EPOCHS as f64 - 1.0)
        } else {
            0.0
        };
        let radius = initial_radius + (SOM_FINAL_RADIUS - initial_radius) * frac;
        let two_r2 = 2.0 * radius * radius;

        let bmus: Vec<usize> = indexed_map(n, |i| best_matching_unit(matrix.row(i), &codes));

        // Batch update: every node moves to the neighborhood-weighted mean
        // of all rows. Summation order over rows is fixed, so results do not
        // depend on thread count.
        let new_codes: Vec<Vec<f64>> = indexed_map(n_nodes, |node| {
            let (nr, nc) = grid_pos(node);
            let mut weight_sum = 0.0;
            let mut acc = vec![0.0; d];
            for (i, &bmu) in bmus.iter().enumerate() {
                let (br, bc) = grid_pos(bmu);
                let dist2 = (nr - br).powi(2) + (nc - bc).powi(2);
                let w = (-dist2 / two_r2).exp();
                if w > 1e-12 {
                    weight_sum += w;
                    for (a, &x) in acc.iter_mut().zip(matrix.row(i)) {
                        *a += w * x;
                    }
                }
            }
            if weight_sum > 0.0 {
                acc.iter().map(|a| a / weight_sum).collect()
            } else {
                codes[node].clone()
            }
        });
        codes = new_codes;
    }

    // Ward metaclustering of the code vectors down to k clusters.
    let code_cluster = ward_cluster(&codes, k);

    let bmus: Vec<usize> = indexed_map(n, |i| best_matching_unit(matrix.row(i), &codes));
    let raw: Vec<usize> = bmus.iter().map(|&b| code_cluster[b]).collect();

    // Relabel by first appearance so labels are contiguous from 0 even when
    // some metacluster captured no rows.
    let mut remap: Vec<Option<usize>> = vec![None; k];
    let mut next = 0usize;
    let labels = raw
        .iter()
        .map(|&r| {
            *remap[r].get_or_insert_with(|| {
                let l = next;
                next += 1;
                l
            })
        })
        .collect();

    Ok(SomClustering {
        labels,
        degenerate: false,
        grid_side: side,
    })
}

fn best_matching_unit(row: &[f64], codes: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (node, code) in codes.iter().enumerate() {
        let mut dist = 0.0;
        for (x, c) in row.iter().zip(code) {
            dist += (x - c) * (x - c);
        }
        if dist < best_d {
            best_d = dist;
            best = node;
        }
    }
    best
}

/// Ward-linkage agglomerative clustering of points down to `k` clusters.
/// Ties merge the lowest index pair, keeping results deterministic.
pub fn ward_cluster(points: &[Vec<f64>], k: usize) -> Vec<usize> {
    let n = points.len();
    if k >= n {
        return (0..n).collect();
    }
    #[derive(Clone)]
    struct Node {
        centroid: Vec<f64>,
        size: f64,
        members: Vec<usize>,
    }
    let mut nodes: Vec<Option<Node>> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Some(Node {
                centroid: p.clone(),
                size: 1.0,
                members: vec![i],
            })
        })
        .collect();
    let ward = |a: &Node, b: &Node| -> f64 {
        let mut d2 = 0.0;
        for (x, y) in a.centroid.iter().zip(&b.centroid) {
            d2 += (x - y) * (x - y);
        }
        a.size * b.size / (a.size + b.size) * d2
    };
    let mut active = n;
    while active > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..nodes.len() {
            let Some(a) = &nodes[i] else { continue };
            for j in (i + 1)..nodes.len() {
                let Some(b) = &nodes[j] else { continue };
                let d = ward(a, b);
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two active nodes");
        let b = nodes[j].take().expect("active");
        let a = nodes[i].as_mut().expect("active");
        let total = a.size + b.size;
        for (c, bc) in a.centroid.iter_mut().zip(&b.centroid) {
            *c = (*c * a.size + bc * b.size) / total;
        }
        a.size = total;
        a.members.extend(b.members);
        active -= 1;
    }
    let mut labels = vec![0usize; n];
    let mut next = 0;
    for node in nodes.iter().flatten() {
        for &m in &node.members {
            labels[m] = next;
        }
        next += 1;
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    /// Adjusted Rand index, implemented directly from the contingency-table
    /// definition as an independent check of clustering recovery.
    pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
        let ka = a.iter().max().unwrap() + 1;
        let kb = b.iter().max().unwrap() + 1;
        let mut table = vec![vec![0usize; kb]; ka];
        for (&x, &y) in a.iter().zip(b) {
            table[x][y] += 1;
        }
        let comb2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
        let sum_ij: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
        let sum_a: f64 = table.iter().map(|row| comb2(row.iter().sum())).sum();
        let sum_b: f64 = (0..kb)
            .map(|j| comb2(table.iter().map(|row| row[j]).sum()))
            .sum();
        let total = comb2(a.len());
        let expected = sum_a * sum_b / total;
        let max = (sum_a + sum_b) / 2.0;
        (sum_ij - expected) / (max - expected)
    }

    #[test]
    fn k_one_labels_everything_zero() {
        let (m, _) = fixtures::two_blobs(10, 4, 10.0, 1);
        let r = som_cluster(&m, 1, 42).unwrap();
        assert!(r.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn recovers_two_separated_blobs_exactly() {
        let (m, truth) = fixtures::two_blobs(30, 5, 10.0, 2);
        let r = som_cluster(&m, 2, 42).unwrap();
        assert!(!r.degenerate);
        let ari = adjusted_rand_index(&r.labels, &truth);
        assert_eq!(ari, 1.0, "ARI = {ari}");
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let (m, _) = fixtures::two_blobs(25, 6, 8.0, 9);
        let a = som_cluster(&m, 4, 123).unwrap();
        let b = som_cluster(&m, 4, 123).unwrap();
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn k_too_large_rejected() {
        let (m, _) = fixtures::two_blobs(5, 3, 5.0, 4);
        assert!(matches!(
            som_cluster(&m, 11, 1).unwrap_err(),
            StatError::KTooLarge { k: 11, rows: 10 }
        ));
    }

    #[test]
    fn degenerate_matrix_flagged_with_labels() {
        let m = crate::matrix::ExpressionMatrix::new(
            vec![2.0; 12],
            (0..4).map(|i| format!("r{i}")).collect(),
            vec!["A".into(), "B".into(), "C".into()],
        )
        .unwrap();
        let r = som_cluster(&m, 2, 7).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.labels, vec![0, 0, 0, 0]);
    }

    #[test]
    fn labels_are_contiguous() {
        let (m, _) = fixtures::two_blobs(40, 8, 6.0, 11);
        let r = som_cluster(&m, 6, 99).unwrap();
        let max = *r.labels.iter().max().unwrap();
        for l in 0..=max {
            assert!(r.labels.contains(&l), "label {l} missing");
        }
    }

    #[test]
    fn ward_merges_obvious_pairs() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
        ];
        let labels = ward_cluster(&pts, 2);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[2], labels[3]);
        assert_ne!(labels[0], labels[2]);
    }
}
