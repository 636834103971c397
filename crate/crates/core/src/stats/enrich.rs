//! Set enrichment: hypergeometric over-representation analysis and a
//! permutation-tested weighted running-sum GSEA.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::StatError;
use crate::stats::bh::bh_adjust;
use crate::stats::exec::indexed_map;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Up,
    Down,
    TwoSided,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentResultRow {
    pub set_id: String,
    pub source: String,
    pub direction: Direction,
    /// Odds ratio for ORA; ES for GSEA (NES reported separately).
    pub statistic: f64,
    pub nes: Option<f64>,
    pub overlap: usize,
    pub set_size: usize,
    pub p: f64,
    pub p_adj: f64,
    /// Set had no members inside the universe / ranked list and was skipped.
    pub skipped: bool,
}

fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Upper-tail hypergeometric probability P(X ≥ observed) for drawing
/// `draws` items from a universe of `total` containing `marked` marked ones.
pub fn hypergeom_upper_tail(total: u64, marked: u64, draws: u64, observed: u64) -> f64 {
    let denom = ln_choose(total, draws);
    let hi = marked.min(draws);
    let mut p = 0.0;
    for k in observed..=hi {
        if draws - k > total - marked {
            continue;
        }
        let ln_p = ln_choose(marked, k) + ln_choose(total - marked, draws - k) - denom;
        p += ln_p.exp();
    }
    p.clamp(0.0, 1.0)
}

/// Over-representation analysis: for each gene set, the hypergeometric
/// upper-tail p of the query/set overlap within the universe, BH-adjusted
/// across sets. Sets with no member in the universe are flagged `skipped`
/// and excluded from the adjustment.
pub fn ora(
    query: &BTreeSet<String>,
    universe: &BTreeSet<String>,
    gene_sets: &BTreeMap<String, (String, BTreeSet<String>)>,
) -> Result<Vec<EnrichmentResultRow>, StatError> {
    if query.is_empty() {
        return Err(StatError::EmptyQuery);
    }
    let outside: Vec<String> = query.difference(universe).cloned().collect();
    if !outside.is_empty() {
        return Err(StatError::QueryOutsideUniverse(outside));
    }

    let n = universe.len() as u64;
    let q = query.len() as u64;
    let mut rows = Vec::new();
    let mut ps = Vec::new();
    for (set_id, (source, members)) in gene_sets {
        let inside: BTreeSet<&String> = members.intersection(universe).collect();
        if inside.is_empty() {
            rows.push(EnrichmentResultRow {
                set_id: set_id.clone(),
                source: source.clone(),
                direction: Direction::TwoSided,
                statistic: f64::NAN,
                nes: None,
                overlap: 0,
                set_size: 0,
                p: f64::NAN,
                p_adj: f64::NAN,
                skipped: true,
            });
            continue;
        }
        let m = inside.len() as u64;
        let overlap = inside.iter().filter(|g| query.contains(g.as_str())).count() as u64;
        let p = hypergeom_upper_tail(n, m, q, overlap);
        // Haldane-corrected odds ratio of the 2x2 overlap table.
        let a = overlap as f64;
        let b = (q - overlap) as f64;
        let c = (m - overlap) as f64;
        let d = (n - m - (q - overlap)) as f64;
        let statistic = if a == 0.0 || b == 0.0 || c == 0.0 || d == 0.0 {
            ((a + 0.5) * (d + 0.5)) / ((b + 0.5) * (c + 0.5))
        } else {
            (a * d) / (b * c)
        };
        ps.push(p);
        rows.push(EnrichmentResultRow {
            set_id: set_id.clone(),
            source: source.clone(),
            direction: Direction::TwoSided,
            statistic,
            nes: None,
            overlap: overlap as usize,
            set_size: m as usize,
            p,
            p_adj: 0.0,
            skipped: false,
        });
    }
    let adj = bh_adjust(&ps)?;
    let mut it = adj.into_iter();
    for row in rows.iter_mut().filter(|r| !r.skipped) {
        row.p_adj = it.next().expect("one adjusted p per tested set");
    }
    Ok(rows)
}

/// Weighted Kolmogorov-Smirnov running-sum enrichment score with weight
/// exponent 1: hits advance by |score| / Σ|score in set|, misses by
/// 1 / (N − set size). Returns the signed maximum deviation.
pub fn enrichment_score(scores: &[f64], in_set: &[bool]) -> f64 {
    let n = scores.len();
    let hits: f64 = scores
        .iter()
        .zip(in_set)
        .filter(|(_, &m)| m)
        .map(|(s, _)| s.abs())
        .sum();
    let n_in = in_set.iter().filter(|&&m| m).count();
    let miss_step = 1.0 / (n - n_in) as f64;
    let mut running = 0.0;
    let mut best = 0.0f64;
    for i in 0..n {
        if in_set[i] {
            // All-zero hit weights degrade to equal steps.
            running += if hits > 0.0 {
                scores[i].abs() / hits
            } else {
                1.0 / n_in as f64
            };
        } else {
            running -= miss_step;
        }
        if running.abs() > best.abs() {
            best = running;
        }
    }
    best
}

/// Gene-set enrichment analysis over a descending-ranked (protein, score)
/// list. The null is `n_perm` seeded gene-label permutations; NES divides
/// ES by the mean |null ES| of matching sign and the two-sided empirical p
/// uses +1 smoothing. BH adjustment across sets.
pub fn gsea(
    ranked: &[(String, f64)],
    gene_sets: &BTreeMap<String, (String, BTreeSet<String>)>,
    n_perm: usize,
    seed: u64,
) -> Result<Vec<EnrichmentResultRow>, StatError> {
    let n = ranked.len();
    {
        let mut seen = BTreeSet::new();
        for (g, _) in ranked {
            if !seen.insert(g.as_str()) {
                return Err(StatError::LengthMismatch(n, seen.len()));
            }
        }
    }
    let scores: Vec<f64> = ranked.iter().map(|(_, s)| *s).collect();

    let mut rows = Vec::new();
    let mut ps = Vec::new();
    for (si, (set_id, (source, members))) in gene_sets.iter().enumerate() {
        let in_set: Vec<bool> = ranked.iter().map(|(g, _)| members.contains(g)).collect();
        let size = in_set.iter().filter(|&&m| m).count();
        if size == 0 {
            return Err(StatError::EmptyIntersection(set_id.clone()));
        }
        if size == n {
            return Err(StatError::SetCoversWholeList(set_id.clone()));
        }
        let es = enrichment_score(&scores, &in_set);

        // Permutation null: reshuffle which positions are in-set.
        let null_es: Vec<f64> = indexed_map(n_perm, |p| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed ^ ((si as u64) << 40) ^ (p as u64 + 1));
            let mut positions: Vec<usize> = (0..n).collect();
            positions.shuffle(&mut rng);
            let mut perm_set = vec![false; n];
            for &pos in positions.iter().take(size) {
                perm_set[pos] = true;
            }
            enrichment_score(&scores, &perm_set)
        });

        let same_sign: Vec<f64> = null_es
            .iter()
            .copied()
            .filter(|&x| x.signum() == es.signum() && x != 0.0)
            .collect();
        let nes = if same_sign.is_empty() {
            f64::NAN
        } else {
            let mean_abs =
                same_sign.iter().map(|x| x.abs()).sum::<f64>() / same_sign.len() as f64;
            es / mean_abs
        };
        let extreme = null_es.iter().filter(|x| x.abs() >= es.abs()).count();
        let p = (extreme + 1) as f64 / (n_perm + 1) as f64;

        ps.push(p);
        rows.push(EnrichmentResultRow {
            set_id: set_id.clone(),
            source: source.clone(),
            direction: if es >= 0.0 { Direction::Up } else { Direction::Down },
            statistic: es,
            nes: Some(nes),
            overlap: size,
            set_size: members.len(),
            p,
            p_adj: 0.0,
            skipped: false,
        });
    }
    let adj = bh_adjust(&ps)?;
    for (row, padj) in rows.iter_mut().zip(adj) {
        row.p_adj = padj;
    }
    Ok(rows)
}
