//! Consensus clustering of cohort samples: multiplicative-update NMF with
//! seeded restarts per candidate k, a consensus matrix with PAC, and
//! Calinski-Harabasz / Davies-Bouldin indices; the chosen k minimizes the
//! summed per-metric rank.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::StatError;
use crate::matrix::ExpressionMatrix;
use crate::stats::exec::indexed_map;

/// Per-k quality metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMetrics {
    pub k: usize,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
    pub pac: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusClusteringResult {
    pub chosen_k: usize,
    /// Per-sample labels for the chosen k, contiguous from 0.
    pub assignments: Vec<usize>,
    pub metric_table: Vec<KMetrics>,
    /// True when a column had negative values and was shifted by its minimum.
    pub shifted: bool,
}

/// PAC thresholds: consensus entries strictly between these are "ambiguous".
const PAC_LOWER: f64 = 0.1;
const PAC_UPPER: f64 = 0.9;
const NMF_ITERATIONS: usize = 200;
const NMF_EPS: f64 = 1e-12;

/// One NMF run: factors `V ≈ W·H` where V is proteins × samples, returning
/// per-sample assignments (argmax over H rows) and the per-iteration
/// Frobenius loss trace.
fn nmf_run(
    v: &[Vec<f64>],
    k: usize,
    seed: u64,
) -> (Vec<usize>, Vec<f64>) {
    let rows = v.len();
    let cols = v[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = {
        let mut max = 0.0f64;
        for row in v {
            for &x in row {
                max = max.max(x);
            }
        }
        (max / k as f64).sqrt().max(NMF_EPS)
    };
    let mut w: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..k).map(|_| rng.gen_range(NMF_EPS..scale)).collect())
        .collect();
    let mut h: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..cols).map(|_| rng.gen_range(NMF_EPS..scale)).collect())
        .collect();

    let mut losses = Vec::with_capacity(NMF_ITERATIONS);
    for _ in 0..NMF_ITERATIONS {
        // H update: H ∘ (WᵀV) / (WᵀWH)
        let wt_v = matmul_t_left(&w, v, k, cols);
        let wt_w = gram(&w, k);
        let wt_w_h = matmul(&wt_w, &h, k, cols);
        for i in 0..k {
            for j in 0..cols {
                h[i][j] *= wt_v[i][j] / (wt_w_h[i][j] + NMF_EPS);
            }
        }
        // W update: W ∘ (VHᵀ) / (WHHᵀ)
        let v_ht = matmul_t_right(v, &h, rows, k);
        let h_ht = gram_rows(&h, k);
        let w_h_ht = matmul(&w, &h_ht, rows, k);
        for i in 0..rows {
            for j in 0..k {
                w[i][j] *= v_ht[i][j] / (w_h_ht[i][j] + NMF_EPS);
            }
        }
        debug_assert!(w.iter().flatten().all(|&x| x >= 0.0));
        debug_assert!(h.iter().flatten().all(|&x| x >= 0.0));
        losses.push(frobenius_loss(v, &w, &h));
    }

    let assignments = (0..cols)
        .map(|j| {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (i, row) in h.iter().enumerate() {
                if row[j] > best_v {
                    best_v = row[j];
                    best = i;
                }
            }
            best
        })
        .collect();
    (assignments, losses)
}

/// Consensus clustering over `k_range` (the 2..=4 subtype search by
/// default). `matrix` is samples × proteins; columns with negative values
/// are shifted up by their minimum before factoring.
pub fn nmf_consensus(
    matrix: &ExpressionMatrix,
    k_range: &[usize],
    restarts: usize,
    seed: u64,
) -> Result<ConsensusClusteringResult, StatError> {
    let n = matrix.n_rows();
    let k_max = k_range.iter().copied().max().unwrap_or(2);
    if n < k_max {
        return Err(StatError::TooFewSamplesNmf { n, min: k_max });
    }

    // proteins × samples, shifted nonnegative per protein column.
    let mut shifted = false;
    let mut v: Vec<Vec<f64>> = vec![vec![0.0; n]; matrix.n_cols()];
    for j in 0..matrix.n_cols() {
        let col = matrix.column(j);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min);
        let shift = if min < 0.0 {
            shifted = true;
            -min
        } else {
            0.0
        };
        for (s, &x) in col.iter().enumerate() {
            let val = x + shift;
            debug_assert!(val >= 0.0, "shift by column minimum keeps values nonnegative");
            v[j][s] = val;
        }
    }

    let sample_rows: Vec<&[f64]> = (0..n).map(|i| matrix.row(i)).collect();
    let mut metric_table = Vec::new();
    let mut assignments_per_k = Vec::new();
    for (ki, &k) in k_range.iter().enumerate() {
        // Restarts are independent; seeds derive from (seed, k, restart).
        let runs: Vec<(Vec<usize>, Vec<f64>)> = indexed_map(restarts, |r| {
            nmf_run(&v, k, seed ^ ((ki as u64 + 1) << 32) ^ r as u64)
        });
        for (_, losses) in &runs {
            for w in losses.windows(2) {
                // Multiplicative updates cannot increase the Frobenius loss;
                // allow strictly tiny float slack at the convergence plateau.
                debug_assert!(
                    w[1] <= w[0] * (1.0 + 1e-9) + 1e-9,
                    "loss increased: {} -> {}",
                    w[0],
                    w[1]
                );
            }
        }

        // Consensus matrix: fraction of restarts co-clustering each pair.
        let mut ambiguous = 0usize;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                let co = runs
                    .iter()
                    .filter(|(a, _)| a[i] == a[j])
                    .count() as f64
                    / restarts as f64;
                pairs += 1;
                if co > PAC_LOWER && co < PAC_UPPER {
                    ambiguous += 1;
                }
            }
        }
        let pac = ambiguous as f64 / pairs.max(1) as f64;

        // Final assignment: the restart with the lowest final loss.
        let best = runs
            .iter()
            .enumerate()
            .min_by(|(_, (_, la)), (_, (_, lb))| {
                la.last().unwrap().partial_cmp(lb.last().unwrap()).unwrap()
            })
            .map(|(i, _)| i)
            .unwrap_or(0);
        let labels = relabel_contiguous(&runs[best].0);

        let ch = calinski_harabasz(&sample_rows, &labels);
        let db = davies_bouldin(&sample_rows, &labels);
        metric_table.push(KMetrics {
            k,
            calinski_harabasz: ch,
            davies_bouldin: db,
            pac,
        });
        assignments_per_k.push(labels);
    }

    // Rank each metric (1 = best); chosen k minimizes the rank sum, ties to
    // the smaller k.
    let rank_of = |scores: Vec<f64>, higher_better: bool| -> Vec<usize> {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            let cmp = scores[a].partial_cmp(&scores[b]).unwrap();
            if higher_better {
                cmp.reverse()
            } else {
                cmp
            }
            .then(a.cmp(&b))
        });
        let mut ranks = vec![0usize; scores.len()];
        for (rank, &idx) in order.iter().enumerate() {
            ranks[idx] = rank + 1;
        }
        ranks
    };
    let ch_ranks = rank_of(metric_table.iter().map(|m| m.calinski_harabasz).collect(), true);
    let db_ranks = rank_of(metric_table.iter().map(|m| m.davies_bouldin).collect(), false);
    let pac_ranks = rank_of(metric_table.iter().map(|m| m.pac).collect(), false);

    let mut best_i = 0;
    let mut best_sum = usize::MAX;
    for i in 0..metric_table.len() {
        let sum = ch_ranks[i] + db_ranks[i] + pac_ranks[i];
        if sum < best_sum {
            best_sum = sum;
            best_i = i;
        }
    }

    Ok(ConsensusClusteringResult {
        chosen_k: metric_table[best_i].k,
        assignments: assignments_per_k[best_i].clone(),
        metric_table,
        shifted,
    })
}

/// Exposes the loss trace of a single run so tests can assert monotone
/// descent without digging into internals.
pub fn nmf_loss_trace(matrix: &ExpressionMatrix, k: usize, seed: u64) -> Vec<f64> {
    let n = matrix.n_rows();
    let mut v: Vec<Vec<f64>> = vec![vec![0.0; n]; matrix.n_cols()];
    for j in 0..matrix.n_cols() {
        let col = matrix.column(j);
        let min = col.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
        for (s, &x) in col.iter().enumerate() {
            v[j][s] = x - min;
        }
    }
    nmf_run(&v, k, seed).1
}

fn relabel_contiguous(raw: &[usize]) -> Vec<usize> {
    let mut remap: Vec<Option<usize>> = vec![None; raw.iter().max().unwrap() + 1];
    let mut next = 0usize;
    raw.iter()
        .map(|&r| {
            *remap[r].get_or_insert_with(|| {
                let l = next;
                next += 1;
                l
            })
        })
        .collect()
}

fn frobenius_loss(v: &[Vec<f64>], w: &[Vec<f64>], h: &[Vec<f64>]) -> f64 {
    let k = h.len();
    let mut loss = 0.0;
    for (i, vrow) in v.iter().enumerate() {
        for (j, &vij) in vrow.iter().enumerate() {
            let mut pred = 0.0;
            for t in 0..k {
                pred += w[i][t] * h[t][j];
            }
            loss += (vij - pred) * (vij - pred);
        }
    }
    loss
}

// Small dense helpers. Loop order is fixed so every run is bit-identical.
fn matmul(a: &[Vec<f64>], b: &[Vec<f64>], rows: usize, cols: usize) -> Vec<Vec<f64>> {
    let inner = b.len();
    let mut out = vec![vec![0.0; cols]; rows];
    for i in 0..rows {
        for t in 0..inner {
            let a_it = a[i][t];
            for j in 0..cols {
                out[i][j] += a_it * b[t][j];
            }
        }
    }
    out
}

/// AᵀB where A is (rows_a × k): returns k × cols of B.
fn matmul_t_left(a: &[Vec<f64>], b: &[Vec<f64>], k: usize, cols: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; cols]; k];
    for (arow, brow) in a.iter().zip(b.iter()) {
        for t in 0..k {
            let a_it = arow[t];
            for j in 0..cols {
                out[t][j] += a_it * brow[j];
            }
        }
    }
    out
}

/// ABᵀ where B is (k × cols): returns rows × k.
fn matmul_t_right(a: &[Vec<f64>], b: &[Vec<f64>], rows: usize, k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; k]; rows];
    for i in 0..rows {
        for (t, brow) in b.iter().enumerate().take(k) {
            let mut s = 0.0;
            for (x, y) in a[i].iter().zip(brow) {
                s += x * y;
            }
            out[i][t] = s;
        }
    }
    out
}

/// AᵀA for A (n × k).
fn gram(a: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; k]; k];
    for row in a {
        for i in 0..k {
            for j in 0..k {
                out[i][j] += row[i] * row[j];
            }
        }
    }
    out
}

/// AAᵀ for A (k × n).
fn gram_rows(a: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for (x, y) in a[i].iter().zip(&a[j]) {
                s += x * y;
            }
            out[i][j] = s;
        }
    }
    out
}

fn centroid(rows: &[&[f64]], members: &[usize]) -> Vec<f64> {
    let d = rows[0].len();
    let mut c = vec![0.0; d];
    for &m in members {
        for (ci, &x) in c.iter_mut().zip(rows[m]) {
            *ci += x;
        }
    }
    for ci in &mut c {
        *ci /= members.len() as f64;
    }
    c
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Calinski-Harabasz index (higher is better).
pub fn calinski_harabasz(rows: &[&[f64]], labels: &[usize]) -> f64 {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    if k < 2 || k >= n {
        return 0.0;
    }
    let all: Vec<usize> = (0..n).collect();
    let global = centroid(rows, &all);
    let mut between = 0.0;
    let mut within = 0.0;
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        let cent = centroid(rows, &members);
        between += members.len() as f64 * dist(&cent, &global).powi(2);
        for &m in &members {
            within += dist(rows[m], &cent).powi(2);
        }
    }
    if within == 0.0 {
        return f64::INFINITY;
    }
    (between / (k as f64 - 1.0)) / (within / (n as f64 - k as f64))
}

/// Davies-Bouldin index (lower is better).
pub fn davies_bouldin(rows: &[&[f64]], labels: &[usize]) -> f64 {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    if k < 2 {
        return f64::INFINITY;
    }
    let mut cents = Vec::with_capacity(k);
    let mut scatter = Vec::with_capacity(k);
    for c in 0..k {
        let members: Vec<usize> = (0..n).filter(|&i| labels[i] == c).collect();
        if members.is_empty() {
            cents.push(vec![f64::NAN; rows[0].len()]);
            scatter.push(f64::NAN);
            continue;
        }
        let cent = centroid(rows, &members);
        let s = members.iter().map(|&m| dist(rows[m], &cent)).sum::<f64>()
            / members.len() as f64;
        cents.push(cent);
        scatter.push(s);
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    for i in 0..k {
        if scatter[i].is_nan() {
            continue;
        }
        let mut worst = 0.0f64;
        for j in 0..k {
            if i == j || scatter[j].is_nan() {
                continue;
            }
            let d = dist(&cents[i], &cents[j]);
            if d > 0.0 {
                worst = worst.max((scatter[i] + scatter[j]) / d);
            }
        }
        total += worst;
        counted += 1;
    }
    total / counted.max(1) as f64
}
