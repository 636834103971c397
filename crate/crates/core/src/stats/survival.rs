//! Survival statistics: two-group log-rank with an expression-threshold
//! sweep over the 20th..80th percentiles, and univariate Cox regression via
//! Newton iteration on the Breslow partial likelihood.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::StatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurvivalMethod {
    Discrete,
    Continuous,
}

/// One survival analysis outcome. `threshold`/`percentile` are present for
/// the discrete (log-rank) method, `hazard_ratio` for the continuous (Cox)
/// method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalResult {
    pub molecule: String,
    pub method: SurvivalMethod,
    pub threshold: Option<f64>,
    pub percentile: Option<u32>,
    pub statistic: f64,
    pub hazard_ratio: Option<f64>,
    pub p: f64,
}

/// Percentiles evaluated by the threshold sweep.
pub const SWEEP_PERCENTILES: [u32; 7] = [20, 30, 40, 50, 60, 70, 80];

/// Two-group log-rank test. Returns (chi-square, p). Groups with identical
/// survival experience give chi-square 0, p 1.
pub fn logrank(
    group: &[bool],
    time: &[f64],
    event: &[u8],
) -> Result<(f64, f64), StatError> {
    if group.len() != time.len() || time.len() != event.len() {
        return Err(StatError::LengthMismatch(group.len(), time.len()));
    }
    if !event.iter().any(|&e| e == 1) {
        return Err(StatError::NoEvents);
    }
    let mut event_times: Vec<f64> = time
        .iter()
        .zip(event)
        .filter(|(_, &e)| e == 1)
        .map(|(&t, _)| t)
        .collect();
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    event_times.dedup();

    let mut observed1 = 0.0;
    let mut expected1 = 0.0;
    let mut var = 0.0;
    for &t in &event_times {
        let at_risk: Vec<usize> = (0..time.len()).filter(|&i| time[i] >= t).collect();
        let n = at_risk.len() as f64;
        let n1 = at_risk.iter().filter(|&&i| group[i]).count() as f64;
        let d: f64 = at_risk
            .iter()
            .filter(|&&i| time[i] == t && event[i] == 1)
            .count() as f64;
        let d1: f64 = at_risk
            .iter()
            .filter(|&&i| time[i] == t && event[i] == 1 && group[i])
            .count() as f64;
        observed1 += d1;
        expected1 += d * n1 / n;
        if n > 1.0 {
            var += d * (n1 / n) * (1.0 - n1 / n) * (n - d) / (n - 1.0);
        }
    }
    if var <= 0.0 {
        return Ok((0.0, 1.0));
    }
    let chi2 = (observed1 - expected1).powi(2) / var;
    let dist = ChiSquared::new(1.0).expect("df 1");
    let p = (1.0 - dist.cdf(chi2)).clamp(0.0, 1.0);
    Ok((chi2, p))
}

/// Linear-interpolation quantile (R type 7) at `q` in [0, 1].
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let h = q * (v.len() as f64 - 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Sweeps the low/high split threshold over the 20..80 percentiles (step 10)
/// of `expr` and returns the split with the minimum log-rank p (ties go to
/// the lower percentile). Splits leaving either group empty are skipped.
pub fn logrank_threshold_sweep(
    molecule: &str,
    expr: &[f64],
    time: &[f64],
    event: &[u8],
) -> Result<SurvivalResult, StatError> {
    if expr.len() != time.len() || time.len() != event.len() {
        return Err(StatError::LengthMismatch(expr.len(), time.len()));
    }
    if expr.len() < 4 {
        return Err(StatError::TooShort {
            n: expr.len(),
            min: 4,
        });
    }
    if !event.iter().any(|&e| e == 1) {
        return Err(StatError::NoEvents);
    }
    let distinct = {
        let mut v = expr.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v.dedup();
        v.len()
    };
    if distinct < 2 {
        return Err(StatError::ConstantExpression);
    }

    let mut best: Option<(u32, f64, f64, f64)> = None; // (percentile, threshold, chi2, p)
    for &pct in &SWEEP_PERCENTILES {
        let threshold = quantile(expr, pct as f64 / 100.0);
        let group_high: Vec<bool> = expr.iter().map(|&x| x > threshold).collect();
        let n_high = group_high.iter().filter(|&&g| g).count();
        if n_high == 0 || n_high == expr.len() {
            continue;
        }
        let (chi2, p) = logrank(&group_high, time, event)?;
        let better = match best {
            None => true,
            Some((_, _, _, bp)) => p < bp,
        };
        if better {
            best = Some((pct, threshold, chi2, p));
        }
    }
    let (percentile, threshold, chi2, p) = best.ok_or(StatError::AllSplitsDegenerate)?;
    Ok(SurvivalResult {
        molecule: molecule.to_string(),
        method: SurvivalMethod::Discrete,
        threshold: Some(threshold),
        percentile: Some(percentile),
        statistic: chi2,
        hazard_ratio: None,
        p,
    })
}

/// Breslow partial log-likelihood and its first two derivatives at `beta`.
fn breslow_derivatives(beta: f64, x: &[f64], time: &[f64], event: &[u8]) -> (f64, f64, f64) {
    let mut event_times: Vec<f64> = time
        .iter()
        .zip(event)
        .filter(|(_, &e)| e == 1)
        .map(|(&t, _)| t)
        .collect();
    event_times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    event_times.dedup();

    let mut ll = 0.0;
    let mut grad = 0.0;
    let mut hess = 0.0;
    for &t in &event_times {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for i in 0..x.len() {
            if time[i] >= t {
                let w = (beta * x[i]).exp();
                s0 += w;
                s1 += x[i] * w;
                s2 += x[i] * x[i] * w;
            }
        }
        let mut d = 0.0;
        let mut dx = 0.0;
        for i in 0..x.len() {
            if time[i] == t && event[i] == 1 {
                d += 1.0;
                dx += x[i];
            }
        }
        ll += beta * dx - d * s0.ln();
        grad += dx - d * s1 / s0;
        hess -= d * (s2 / s0 - (s1 / s0) * (s1 / s0));
    }
    (ll, grad, hess)
}

const COX_MAX_ITER: usize = 50;
const COX_TOL: f64 = 1e-8;
/// |beta| beyond this is treated as monotone-likelihood separation.
const COX_SEPARATION_BOUND: f64 = 200.0;

/// Univariate Cox proportional-hazards fit (Breslow ties), Newton's method
/// from beta = 0. Returns beta, exp(beta), and the Wald p-value.
pub fn cox_univariate(
    molecule: &str,
    expr: &[f64],
    time: &[f64],
    event: &[u8],
) -> Result<SurvivalResult, StatError> {
    if expr.len() != time.len() || time.len() != event.len() {
        return Err(StatError::LengthMismatch(expr.len(), time.len()));
    }
    if expr.len() < 4 {
        return Err(StatError::TooShort {
            n: expr.len(),
            min: 4,
        });
    }
    if !event.iter().any(|&e| e == 1) {
        return Err(StatError::NoEvents);
    }
    if expr.windows(2).all(|w| w[0] == w[1]) {
        return Err(StatError::ConstantExpression);
    }

    let mut beta = 0.0;
    let mut converged = false;
    let mut hess = 0.0;
    for _ in 0..COX_MAX_ITER {
        let (_, grad, h) = breslow_derivatives(beta, expr, time, event);
        hess = h;
        if h >= 0.0 || !h.is_finite() || !grad.is_finite() {
            return Err(StatError::NonConvergence { separation: true });
        }
        let step = -grad / h;
        beta += step;
        if beta.abs() > COX_SEPARATION_BOUND {
            return Err(StatError::NonConvergence { separation: true });
        }
        if step.abs() < COX_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(StatError::NonConvergence { separation: false });
    }
    let se = (-1.0 / hess).sqrt();
    let z = beta / se;
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let p = (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0);
    Ok(SurvivalResult {
        molecule: molecule.to_string(),
        method: SurvivalMethod::Continuous,
        threshold: None,
        percentile: None,
        statistic: beta,
        hazard_ratio: Some(beta.exp()),
        p,
    })
}

/// Partial log-likelihood alone, exposed so tests can grid-search it
/// independently of the Newton path.
pub fn breslow_log_likelihood(beta: f64, x: &[f64], time: &[f64], event: &[u8]) -> f64 {
    breslow_derivatives(beta, x, time, event).0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logrank_matches_scipy() {
        // scipy.stats.logrank on the same two arms: chi2 = 0.3955504189540593,
        // p = 0.5293961994173035.
        let time = [3.0, 5.0, 7.0, 9.0, 11.0, 4.0, 6.0, 8.0, 10.0, 12.0];
        let event = [1, 1, 0, 1, 1, 1, 0, 1, 1, 0];
        let group: Vec<bool> = (0..10).map(|i| i < 5).collect();
        let (chi2, p) = logrank(&group, &time, &event).unwrap();
        assert!((chi2 - 0.3955504189540593).abs() < 1e-10, "chi2 = {chi2}");
        assert!((p - 0.5293961994173035).abs() < 1e-10, "p = {p}");
    }

    #[test]
    fn identical_curves_give_p_one() {
        // Same times and events in both groups at the 50th-percentile split.
        let time = [1.0, 2.0, 3.0, 4.0, 1.0, 2.0, 3.0, 4.0];
        let event = [1, 1, 1, 0, 1, 1, 1, 0];
        let group = [true, true, true, true, false, false, false, false];
        let (chi2, p) = logrank(&group, &time, &event).unwrap();
        assert_eq!(chi2, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sweep_returns_minimum_over_candidate_splits() {
        let expr: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let time: Vec<f64> = (0..20)
            .map(|i| if i < 10 { 2.0 + i as f64 * 0.3 } else { 8.0 + i as f64 * 0.5 })
            .collect();
        let event = vec![1u8; 20];
        let result = logrank_threshold_sweep("P", &expr, &time, &event).unwrap();

        // Oracle: recompute every candidate split directly.
        let mut best_p = f64::INFINITY;
        for &pct in &SWEEP_PERCENTILES {
            let thr = quantile(&expr, pct as f64 / 100.0);
            let group: Vec<bool> = expr.iter().map(|&x| x > thr).collect();
            if group.iter().all(|&g| g) || group.iter().all(|&g| !g) {
                continue;
            }
            let (_, p) = logrank(&group, &time, &event).unwrap();
            best_p = best_p.min(p);
            assert!(result.p <= p + 1e-15, "sweep p must be minimal");
        }
        assert!((result.p - best_p).abs() < 1e-15);
        assert!(result.threshold.is_some());
        assert!(SWEEP_PERCENTILES.contains(&result.percentile.unwrap()));
    }

    #[test]
    fn sweep_error_paths() {
        let time = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            logrank_threshold_sweep("P", &[1.0, 1.0, 1.0, 1.0], &time, &[1, 1, 0, 0]).unwrap_err(),
            StatError::ConstantExpression
        ));
        assert!(matches!(
            logrank_threshold_sweep("P", &[1.0, 2.0, 3.0, 4.0], &time, &[0, 0, 0, 0]).unwrap_err(),
            StatError::NoEvents
        ));
    }

    #[test]
    fn cox_matches_grid_search_oracle() {
        // Frozen fixture; an independent Newton fit of the same Breslow
        // likelihood gives beta = 3.8497486771, se = 1.8213305089.
        let x = [0.2, 1.4, 0.8, 2.0, 1.1, 0.5, 1.7, 0.9];
        let t = [8.0, 3.0, 6.0, 2.0, 5.0, 9.0, 4.0, 7.0];
        let e = [1, 1, 1, 1, 0, 1, 1, 1];
        let fit = cox_univariate("P", &x, &t, &e).unwrap();

        // Grid oracle over beta in [-5, 5] step 1e-4.
        let mut best_beta = 0.0;
        let mut best_ll = f64::NEG_INFINITY;
        let mut b = -5.0;
        while b <= 5.0 {
            let ll = breslow_log_likelihood(b, &x, &t, &e);
            if ll > best_ll {
                best_ll = ll;
                best_beta = b;
            }
            b += 1e-4;
        }
        assert!(
            (fit.statistic - best_beta).abs() <= 1e-3,
            "newton {} vs grid {}",
            fit.statistic,
            best_beta
        );
        assert!((fit.statistic - 3.8497486771).abs() < 1e-6);
        assert!((fit.hazard_ratio.unwrap() - fit.statistic.exp()).abs() < 1e-12);
        assert!((fit.p - 0.034540786816216126).abs() < 1e-9);
    }

    #[test]
    fn cox_breslow_handles_ties() {
        // Duplicate event times; independent reference fit beta = 2.5222798984.
        let x = [0.3, 0.9, 1.5, 0.7, 1.2, 0.4];
        let t = [4.0, 2.0, 2.0, 5.0, 3.0, 6.0];
        let e = [1, 1, 1, 1, 1, 0];
        let fit = cox_univariate("P", &x, &t, &e).unwrap();
        assert!((fit.statistic - 2.5222798984).abs() < 1e-6);
    }

    #[test]
    fn cox_negation_flips_beta_exactly() {
        let x = [0.2, 1.4, 0.8, 2.0, 1.1, 0.5, 1.7, 0.9];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let t = [8.0, 3.0, 6.0, 2.0, 5.0, 9.0, 4.0, 7.0];
        let e = [1, 1, 1, 1, 0, 1, 1, 1];
        let a = cox_univariate("P", &x, &t, &e).unwrap();
        let b = cox_univariate("P", &neg, &t, &e).unwrap();
        assert!((a.statistic + b.statistic).abs() < 1e-7);
    }

    #[test]
    fn cox_scaling_covariate_scales_beta() {
        let x = [0.2, 1.4, 0.8, 2.0, 1.1, 0.5, 1.7, 0.9];
        let scaled: Vec<f64> = x.iter().map(|v| v * 4.0).collect();
        let t = [8.0, 3.0, 6.0, 2.0, 5.0, 9.0, 4.0, 7.0];
        let e = [1, 1, 1, 1, 0, 1, 1, 1];
        let a = cox_univariate("P", &x, &t, &e).unwrap();
        let b = cox_univariate("P", &scaled, &t, &e).unwrap();
        assert!((a.statistic / 4.0 - b.statistic).abs() < 1e-6);
        assert!((a.p - b.p).abs() < 1e-8);
    }

    #[test]
    fn cox_error_paths() {
        let t = [1.0, 2.0, 3.0, 4.0];
        assert!(matches!(
            cox_univariate("P", &[1.0, 1.0, 1.0, 1.0], &t, &[1, 1, 0, 0]).unwrap_err(),
            StatError::ConstantExpression
        ));
        // Perfect separation: covariate orders exactly with event times.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let t = [6.0, 5.0, 4.0, 3.0, 2.0, 1.0];
        let e = [1, 1, 1, 1, 1, 1];
        let err = cox_univariate("P", &x, &t, &e).unwrap_err();
        assert!(matches!(err, StatError::NonConvergence { separation: true }));
    }
}
