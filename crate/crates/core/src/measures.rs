//! The three statistics: Chatterjee's xi, Spearman's rank correlation, and
//! the max-combined statistic.
//!
//! All three are `O(n)` functions of a [`RankSequence`]. The rank sums that
//! form each numerator are accumulated in integers and divided exactly once,
//! so for `n` up to at least `2^20` the only rounding is that final division.

use serde::Serialize;

use crate::error::Error;
use crate::ranks::RankSequence;

/// A statistic tagged with the sample size it was computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationValue {
    pub value: f64,
    pub n: usize,
}

/// `sqrt(5/2)`, the factor that puts the Chatterjee arm on the same
/// asymptotic null scale as the Spearman arm: `sqrt(n) * S_n` tends to
/// `N(0, 1)` while `sqrt(n) * xi_n` tends to `N(0, 2/5)`, so multiplying
/// `xi_n` by `sqrt(5/2)` equalizes the two variances.
pub fn xi_scale() -> f64 {
    (5.0f64 / 2.0).sqrt()
}

// ---------------------------------------------------------------------------
// integer rank sums
// ---------------------------------------------------------------------------

/// `sum |R_{i+1} - R_i|`, the xi numerator.
pub(crate) fn adjacent_abs_diff_sum(ranks: &[usize]) -> u64 {
    ranks.windows(2).map(|w| w[0].abs_diff(w[1]) as u64).sum()
}

/// `sum (i - R_i)^2`, the Spearman displacement numerator (i is 1-based).
pub(crate) fn displacement_sq_sum(ranks: &[usize]) -> u64 {
    ranks
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let d = (i + 1).abs_diff(r) as u64;
            d * d
        })
        .sum()
}

/// `xi = ((n^2 - 1) - 3 A) / (n^2 - 1)` for `A = sum |R_{i+1} - R_i|`.
pub(crate) fn xi_from_sum(a: u64, n: usize) -> f64 {
    let den = n as i128 * n as i128 - 1;
    let num = den - 3 * a as i128;
    num as f64 / den as f64
}

/// `S = (n(n^2 - 1) - 6 B) / (n(n^2 - 1))` for `B = sum (i - R_i)^2`.
pub(crate) fn spearman_from_sum(b: u64, n: usize) -> f64 {
    let den = n as i128 * (n as i128 * n as i128 - 1);
    let num = den - 6 * b as i128;
    num as f64 / den as f64
}

// ---------------------------------------------------------------------------
// public statistics
// ---------------------------------------------------------------------------

/// Chatterjee's correlation `xi_n = 1 - 3 sum |R_{i+1} - R_i| / (n^2 - 1)`.
///
/// Sensitive to arbitrary functional dependence of y on x: its population
/// version is 1 iff y is a measurable function of x. The maximum attainable
/// value at sample size n is `(n - 2)/(n + 1)`, reached by any monotone rank
/// sequence.
pub fn xi(ranks: &RankSequence) -> CorrelationValue {
    CorrelationValue {
        value: xi_from_sum(adjacent_abs_diff_sum(ranks.ranks()), ranks.n()),
        n: ranks.n(),
    }
}

/// Spearman's rank correlation in displacement form,
/// `S_n = 1 - 6 sum (i - R_i)^2 / (n (n^2 - 1))`.
pub fn spearman(ranks: &RankSequence) -> CorrelationValue {
    CorrelationValue {
        value: spearman_from_sum(displacement_sq_sum(ranks.ranks()), ranks.n()),
        n: ranks.n(),
    }
}

/// The max-combined statistic `I_n = max(|S_n|, sqrt(5/2) * xi_n)`.
///
/// Both inputs must come from the same sample.
pub fn combined(s: CorrelationValue, x: CorrelationValue) -> Result<CorrelationValue, Error> {
    if s.n != x.n {
        return Err(Error::SampleSizeMismatch {
            left: s.n,
            right: x.n,
        });
    }
    Ok(CorrelationValue {
        value: s.value.abs().max(xi_scale() * x.value),
        n: s.n,
    })
}

/// Convenience: all three statistics of one rank sequence, in the order
/// (spearman, xi, combined).
pub fn all_three(ranks: &RankSequence) -> (CorrelationValue, CorrelationValue, CorrelationValue) {
    let s = spearman(ranks);
    let x = xi(ranks);
    let i = combined(s, x).expect("same ranks, same n");
    (s, x, i)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranks::validate_permutation;

    fn seq(ranks: &[usize]) -> RankSequence {
        RankSequence::new(ranks.to_vec()).unwrap()
    }

    // -- golden values; n=3 cases cover every distinct atom of the null ----

    #[test]
    fn xi_n3_values() {
        assert_eq!(xi(&seq(&[1, 2, 3])).value, 0.25);
        assert_eq!(xi(&seq(&[1, 3, 2])).value, -0.125);
        assert_eq!(xi(&seq(&[2, 1, 3])).value, -0.125);
        assert_eq!(xi(&seq(&[2, 3, 1])).value, -0.125);
        assert_eq!(xi(&seq(&[3, 1, 2])).value, -0.125);
        assert_eq!(xi(&seq(&[3, 2, 1])).value, 0.25);
    }

    #[test]
    fn spearman_n3_values() {
        assert_eq!(spearman(&seq(&[1, 2, 3])).value, 1.0);
        assert_eq!(spearman(&seq(&[1, 3, 2])).value, 0.5);
        assert_eq!(spearman(&seq(&[2, 1, 3])).value, 0.5);
        assert_eq!(spearman(&seq(&[2, 3, 1])).value, -0.5);
        assert_eq!(spearman(&seq(&[3, 1, 2])).value, -0.5);
        assert_eq!(spearman(&seq(&[3, 2, 1])).value, -1.0);
    }

    #[test]
    fn hand_evaluated_n5_case() {
        // sum |dR| = 2+2+1+2 = 7 and sum (i-R_i)^2 = 16+1+4+4+1 = 26
        let r = seq(&[5, 3, 1, 2, 4]);
        assert_eq!(xi(&r).value, 0.125);
        assert_eq!(spearman(&r).value, -0.3);
    }

    #[test]
    fn monotone_xi_value() {
        // any monotone sequence gives xi = (n-2)/(n+1)
        let r = seq(&(1..=10).collect::<Vec<_>>());
        assert_eq!(xi(&r).value, 8.0 / 11.0);
        let rev = seq(&(1..=10).rev().collect::<Vec<_>>());
        assert_eq!(xi(&rev).value, 8.0 / 11.0);
        assert_eq!(spearman(&rev).value, -1.0);
    }

    #[test]
    fn combined_table_rows() {
        // (1,2,3): the |S| arm dominates; (2,3,1): sign of xi ignored by max
        let i = combined(
            CorrelationValue { value: 1.0, n: 3 },
            CorrelationValue { value: 0.25, n: 3 },
        )
        .unwrap();
        assert_eq!(i.value, 1.0);
        let i = combined(
            CorrelationValue { value: -0.5, n: 3 },
            CorrelationValue {
                value: -0.125,
                n: 3,
            },
        )
        .unwrap();
        assert_eq!(i.value, 0.5);
        let i = combined(
            CorrelationValue { value: 0.0, n: 3 },
            CorrelationValue { value: 0.0, n: 3 },
        )
        .unwrap();
        assert_eq!(i.value, 0.0);
    }

    #[test]
    fn combined_rejects_mismatched_n() {
        let s = CorrelationValue { value: 0.5, n: 10 };
        let x = CorrelationValue { value: 0.5, n: 11 };
        assert_eq!(
            combined(s, x).unwrap_err(),
            Error::SampleSizeMismatch {
                left: 10,
                right: 11
            }
        );
    }

    #[test]
    fn xi_scale_squares_to_five_halves() {
        assert!((xi_scale() * xi_scale() - 2.5).abs() < 1e-15);
    }

    // -- exhaustive small-n bounds ----------------------------------------

    #[test]
    fn exhaustive_bounds_small_n() {
        for n in 2..=7usize {
            let max_xi = (n as f64 - 2.0) / (n as f64 + 1.0);
            let mut perm: Vec<usize> = (1..=n).collect();
            let mut c = vec![0usize; n];
            let check = |p: &[usize]| {
                let r = RankSequence::new(p.to_vec()).unwrap();
                let s = spearman(&r).value;
                let x = xi(&r).value;
                let i = combined(spearman(&r), xi(&r)).unwrap().value;
                assert!(s.abs() <= 1.0);
                assert!(x <= max_xi + 1e-15);
                assert!(i >= s.abs() && i >= xi_scale() * x);
            };
            check(&perm);
            let mut k = 0;
            while k < n {
                if c[k] < k {
                    if k % 2 == 0 {
                        perm.swap(0, k);
                    } else {
                        perm.swap(c[k], k);
                    }
                    check(&perm);
                    c[k] += 1;
                    k = 0;
                } else {
                    c[k] = 0;
                    k += 1;
                }
            }
        }
    }

    mod proptests {
        use super::*;
        use proptest::prelude::*;

        fn permutation(max_n: usize) -> impl Strategy<Value = Vec<usize>> {
            (2..=max_n).prop_flat_map(|n| Just((1..=n).collect::<Vec<_>>()).prop_shuffle())
        }

        proptest! {
            #[test]
            fn rewritten_spearman_form_agrees(p in permutation(60)) {
                // 1 - 6 sum(i-R_i)^2 / (n(n^2-1)) equals
                // -3(n+1)/(n-1) + 12 sum(i*R_i) / (n(n^2-1))
                let n = p.len() as f64;
                let r = RankSequence::new(p.clone()).unwrap();
                let direct = spearman(&r).value;
                let cross: u64 = p.iter().enumerate().map(|(i, &v)| (i as u64 + 1) * v as u64).sum();
                let rewritten = -3.0 * (n + 1.0) / (n - 1.0)
                    + 12.0 * cross as f64 / (n * (n * n - 1.0));
                prop_assert!((direct - rewritten).abs() < 1e-12);
            }

            #[test]
            fn complement_flips_spearman_and_fixes_xi(p in permutation(60)) {
                let n = p.len();
                let comp: Vec<usize> = p.iter().map(|&v| n + 1 - v).collect();
                let r = RankSequence::new(p).unwrap();
                let rc = RankSequence::new(comp).unwrap();
                prop_assert_eq!(spearman(&rc).value, -spearman(&r).value);
                prop_assert_eq!(xi(&rc).value, xi(&r).value);
            }

            #[test]
            fn combined_dominates_both_arms(p in permutation(60)) {
                let r = RankSequence::new(p).unwrap();
                let (s, x, i) = all_three(&r);
                prop_assert!(i.value >= s.value.abs());
                prop_assert!(i.value >= xi_scale() * x.value);
                prop_assert!(validate_permutation(r.ranks()));
            }
        }
    }
}
