use crate::error::StatError;

/// Benjamini-Hochberg step-up adjustment. Output is in the input's order,
/// element-wise ≥ the raw p-values, each in [0, 1].
pub fn bh_adjust(p: &[f64]) -> Result<Vec<f64>, StatError> {
    for &v in p {
        if !(0.0..=1.0).contains(&v) || v.is_nan() {
            return Err(StatError::OutOfRange(v));
        }
    }
    let n = p.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap().then(a.cmp(&b)));
    let mut adjusted = vec![0.0; n];
    let mut running_min = 1.0f64;
    for rank in (0..n).rev() {
        let idx = order[rank];
        let q = (p[idx] * n as f64 / (rank + 1) as f64).min(1.0);
        running_min = running_min.min(q);
        adjusted[idx] = running_min;
    }
    Ok(adjusted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }

    /// Oracle: literal hand application of the step-up rule, written
    /// independently of the implementation above.
    fn step_up_oracle(p: &[f64]) -> Vec<f64> {
        let n = p.len();
        let mut pairs: Vec<(usize, f64)> = p.iter().copied().enumerate().collect();
        pairs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let mut out = vec![0.0; n];
        for (rank, &(idx, _)) in pairs.iter().enumerate() {
            // q_i = min over j >= i of p_(j) * n / (j+1), capped at 1
            let mut q = f64::INFINITY;
            for (j, &(_, vj)) in pairs.iter().enumerate().skip(rank) {
                q = q.min(vj * n as f64 / (j + 1) as f64);
            }
            out[idx] = q.min(1.0);
        }
        out
    }

    #[test]
    fn matches_hand_applied_step_up() {
        let p = [0.01, 0.02, 0.03];
        assert_close(&bh_adjust(&p).unwrap(), &[0.03, 0.03, 0.03]);
        assert_close(&bh_adjust(&p).unwrap(), &step_up_oracle(&p));

        let p = [0.05, 0.01, 0.1, 0.04, 0.02];
        assert_close(&bh_adjust(&p).unwrap(), &[0.0625, 0.05, 0.1, 0.0625, 0.05]);
        assert_close(&bh_adjust(&p).unwrap(), &step_up_oracle(&p));
    }

    #[test]
    fn single_value_is_fixed_point() {
        assert_close(&bh_adjust(&[0.05]).unwrap(), &[0.05]);
    }

    #[test]
    fn all_equal_input_unchanged() {
        let p = [0.2, 0.2, 0.2, 0.2];
        assert_close(&bh_adjust(&p).unwrap(), &p);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(matches!(
            bh_adjust(&[0.5, 1.5]).unwrap_err(),
            StatError::OutOfRange(_)
        ));
        assert!(matches!(
            bh_adjust(&[-0.1]).unwrap_err(),
            StatError::OutOfRange(_)
        ));
    }

    #[test]
    fn adjusted_dominates_raw_and_is_monotone() {
        let p = [0.9, 0.001, 0.25, 0.05, 0.05, 0.7, 0.33];
        let adj = bh_adjust(&p).unwrap();
        for (a, r) in adj.iter().zip(&p) {
            assert!(a >= r);
            assert!((0.0..=1.0).contains(a));
        }
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).unwrap());
        for w in order.windows(2) {
            assert!(adj[w[0]] <= adj[w[1]] + 1e-15);
        }
    }
}
