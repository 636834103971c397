//! Welch two-sample t-test, the estimator behind the differential abundance
//! and expression tables.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::StatError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelchResult {
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub mean_a: f64,
    pub mean_b: f64,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Welch's unequal-variance t-test with Satterthwaite degrees of freedom.
///
/// Zero-variance groups get the degenerate convention: equal means → p = 1,
/// different means → p = 0.
pub fn welch(a: &[f64], b: &[f64]) -> Result<WelchResult, StatError> {
    if a.len() < 2 {
        return Err(StatError::TooFewSamples {
            side: "A".into(),
            n: a.len(),
        });
    }
    if b.len() < 2 {
        return Err(StatError::TooFewSamples {
            side: "B".into(),
            n: b.len(),
        });
    }
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a), variance(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let se2 = va / na + vb / nb;
    if se2 <= 0.0 {
        let p = if ma == mb { 1.0 } else { 0.0 };
        return Ok(WelchResult {
            t: if ma == mb { 0.0 } else { f64::INFINITY * (ma - mb).signum() },
            df: na + nb - 2.0,
            p,
            mean_a: ma,
            mean_b: mb,
        });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    let p = (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0);
    Ok(WelchResult {
        t,
        df,
        p,
        mean_a: ma,
        mean_b: mb,
    })
}

/// Median; average of the middle two for even lengths.
pub fn median(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
