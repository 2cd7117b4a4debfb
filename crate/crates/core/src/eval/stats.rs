use serde::Serialize;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonResult {
    pub mean_a: f64,
    pub mean_b: f64,
    pub t_statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub significant: bool,
}

/// Two-sided survival probability `P(|T| ≥ |t|)` of Student's t with `df`
/// degrees of freedom, via the regularized incomplete beta function.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    beta_reg(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Paired two-sided t-test on `a[i] − b[i]`.
///
/// All differences zero gives `t = 0, p = 1`; zero variance with a nonzero
/// mean difference gives `t = ±∞, p = 0`.
pub fn paired_t_test(a: &[f64], b: &[f64], alpha: f64) -> Result<ComparisonResult> {
    if a.len() != b.len() {
        return Err(Error::invalid("samples", "paired samples must have equal length"));
    }
    if a.len() < 2 {
        return Err(Error::invalid("samples", "at least 2 pairs required"));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", "must lie in [0, 1]"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("t-test input"));
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);

    let (t, p) = if diffs.iter().all(|&d| d == 0.0) {
        (0.0, 1.0)
    } else if var == 0.0 {
        (mean.signum() * f64::INFINITY, 0.0)
    } else {
        let t = mean / (var / n).sqrt();
        (t, t_two_sided_p(t, n - 1.0))
    };
    Ok(ComparisonResult {
        mean_a: a.iter().sum::<f64>() / n,
        mean_b: b.iter().sum::<f64>() / n,
        t_statistic: t,
        p_value: p,
        alpha,
        significant: p < alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Two-sided p by Simpson integration of the t density from 0 to |t|.
    fn p_by_quadrature(t: f64, df: f64) -> f64 {
        let ln_c = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
            - statrs::function::gamma::ln_gamma(df / 2.0)
            - 0.5 * (df * std::f64::consts::PI).ln();
        let density = |x: f64| (ln_c - (df + 1.0) / 2.0 * (1.0 + x * x / df).ln()).exp();
        let steps = 200_000;
        let h = t.abs() / steps as f64;
        let mut s = density(0.0) + density(t.abs());
        for i in 1..steps {
            s += density(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        1.0 - 2.0 * s * h / 3.0
    }

    #[test]
    fn worked_example() {
        let d = [1.1, 0.9, 1.3, 0.7, 1.0];
        let zeros = [0.0; 5];
        let r = paired_t_test(&d, &zeros, 0.05).unwrap();
        assert!((r.t_statistic - 10.0).abs() < 1e-9);
        let oracle = p_by_quadrature(10.0, 4.0);
        assert!((r.p_value - oracle).abs() / oracle < 1e-6, "{} vs {}", r.p_value, oracle);
        assert!((r.p_value - 5.6e-4).abs() < 0.05e-4);
        assert!(r.significant);
    }

    #[test]
    fn conventions() {
        let a = [0.5, 0.7, 0.9];
        let same = paired_t_test(&a, &a, 0.05).unwrap();
        assert_eq!((same.t_statistic, same.p_value, same.significant), (0.0, 1.0, false));
        let shifted: Vec<f64> = a.iter().map(|x| x - 0.25).collect();
        let c = paired_t_test(&a, &shifted, 0.05).unwrap();
        assert_eq!(c.p_value, 0.0);
        assert!(c.significant);
        assert!(c.t_statistic.is_infinite() && c.t_statistic > 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(paired_t_test(&[1.0], &[0.0], 0.05).is_err());
        assert!(paired_t_test(&[1.0, 2.0], &[0.0], 0.05).is_err());
        assert!(paired_t_test(&[1.0, f64::NAN], &[0.0, 0.0], 0.05).is_err());
    }

    #[test]
    fn p_matches_quadrature_across_df() {
        for &(t, df) in &[(0.5, 1.0), (1.7, 3.0), (2.5, 9.0), (-3.1, 24.0)] {
            let p = t_two_sided_p(t, df);
            assert!((p - p_by_quadrature(t, df)).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(
            pairs in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..20),
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ab = paired_t_test(&a, &b, 0.05).unwrap();
            let ba = paired_t_test(&b, &a, 0.05).unwrap();
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert_eq!(ab.t_statistic, -ba.t_statistic);
            prop_assert_eq!(ab.significant, ab.p_value < 0.05);
        }
    }
}
