//! Small statistical helpers: one-sample Kolmogorov–Smirnov statistic and
//! binomial confidence intervals.

/// One-sample KS statistic: sup_x |F_n(x) − F(x)| against a reference CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        sup = sup.max((i as f64 / n - f).abs());
        sup = sup.max(((i + 1) as f64 / n - f).abs());
    }
    sup
}

/// Asymptotic null quantile of the scaled KS statistic: D_crit ≈ c(α)/√n,
/// with c(0.05) = 1.358 and c(0.01) = 1.628.
pub fn ks_null_quantile(samples: usize, alpha: f64) -> f64 {
    let c = if alpha <= 0.01 { 1.628 } else { 1.358 };
    c / (samples as f64).sqrt()
}

/// Normal-approximation binomial confidence half-width at z standard errors.
pub fn binomial_ci_halfwidth(p_hat: f64, trials: usize, z: f64) -> f64 {
    z * (p_hat * (1.0 - p_hat) / trials as f64).sqrt()
}

/// z values for the usual two-sided levels.
pub const Z_95: f64 = 1.959963984540054;
pub const Z_99: f64 = 2.5758293035489004;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ks_of_perfect_uniform_grid_is_small() {
        // midpoints of n equal bins have D = 1/(2n)
        let n = 100;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_detects_gross_mismatch() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 100.0 * 0.5).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d > 0.4);
    }

    #[test]
    fn ci_halfwidth_shrinks_with_trials() {
        let a = binomial_ci_halfwidth(0.5, 100, Z_95);
        let b = binomial_ci_halfwidth(0.5, 10_000, Z_95);
        assert!(a > b);
        assert!((b - Z_95 * 0.005).abs() < 1e-12);
    }
}
