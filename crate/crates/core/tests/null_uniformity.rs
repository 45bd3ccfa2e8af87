//! Under independence the p-values should be nearly uniform: at n = 500 the
//! asymptotic approximations are close enough that the empirical CDF of each
//! method's p-value over many null replicates stays within a few percent of
//! the diagonal.

use maxcorr::inference::{
    combined_pvalue_asymptotic, spearman_pvalue_asymptotic, xi_pvalue_asymptotic,
};
use maxcorr::measures::xi_scale;
use maxcorr::sim::null_joint_sample;

/// Kolmogorov-Smirnov distance between a sample and Uniform[0, 1].
fn ks_distance(mut pvalues: Vec<f64>) -> f64 {
    pvalues.sort_by(f64::total_cmp);
    let n = pvalues.len() as f64;
    let mut d = 0.0f64;
    for (i, p) in pvalues.iter().enumerate() {
        d = d.max((p - i as f64 / n).abs());
        d = d.max((p - (i as f64 + 1.0) / n).abs());
    }
    d
}

#[test]
fn asymptotic_pvalues_are_nearly_uniform_under_the_null() {
    let n = 500;
    let replicates = 20000;
    let sqrt_n = (n as f64).sqrt();
    let draws = null_joint_sample(n, replicates, 2024).unwrap();

    let mut p_spearman = Vec::with_capacity(replicates);
    let mut p_xi = Vec::with_capacity(replicates);
    let mut p_combined = Vec::with_capacity(replicates);
    for (scaled_s, scaled_x) in draws {
        let s = scaled_s / sqrt_n;
        let x = scaled_x / sqrt_n;
        let i = s.abs().max(xi_scale() * x);
        p_spearman.push(spearman_pvalue_asymptotic(s, n).unwrap());
        p_xi.push(xi_pvalue_asymptotic(x, n).unwrap());
        p_combined.push(combined_pvalue_asymptotic(i, n).unwrap());
    }

    // KS sampling noise at 20k replicates is ~0.01; the remaining gap is
    // the finite-n approximation error of each normal limit
    let d_s = ks_distance(p_spearman);
    let d_x = ks_distance(p_xi);
    let d_i = ks_distance(p_combined);
    assert!(d_s <= 0.03, "Spearman KS distance {d_s}");
    assert!(d_x <= 0.03, "Chatterjee KS distance {d_x}");
    assert!(d_i <= 0.03, "combined KS distance {d_i}");
}
