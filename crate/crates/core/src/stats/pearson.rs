use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::StatError;

/// Pearson correlation with a two-sided p-value from the exact t transform
/// `t = r sqrt((n-2) / (1-r^2))` on n−2 degrees of freedom.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<(f64, f64), StatError> {
    if x.len() != y.len() {
        return Err(StatError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatError::TooShort { n, min: 3 });
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 {
        return Err(StatError::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(StatError::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let p = if r.abs() >= 1.0 {
        0.0
    } else {
        let df = (n - 2) as f64;
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Ok((r, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_correlations() {
        let (r, p) = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(p, 0.0);
        let (r, _) = pearson(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap();
        assert_eq!(r, -1.0);
    }

    #[test]
    fn closed_form_case() {
        // cov = 1.0, var_x = var_y = 1.25 -> r = 0.8; scipy gives p = 0.2.
        let (r, p) = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
        assert!((p - 0.2).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatError::LengthMismatch(2, 3)
        ));
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0, 2.0]).unwrap_err(),
            StatError::TooShort { .. }
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap_err(),
            StatError::ZeroVariance("x")
        ));
    }
}
