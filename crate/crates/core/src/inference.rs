//! P-values and multiple-testing adjustment.
//!
//! Three routes from a statistic to a p-value:
//!
//! * asymptotic normal approximations (`*_pvalue_asymptotic`), valid for
//!   moderate n and positively biased for small n;
//! * a seeded permutation test ([`permutation_pvalue`]) whose result is
//!   bitwise identical for any worker count;
//! * full enumeration for `n <= 8`, which lives in [`crate::exact`].
//!
//! Sidedness conventions, fixed here once: Spearman is two-sided (monotone
//! dependence in either direction counts), Chatterjee is one-sided right-tail
//! (its population value is nonnegative under dependence), and the combined
//! statistic is one-sided by construction since it is a max of nonnegative
//! arms.
//!
//! [`bh_adjust`] implements the Benjamini-Hochberg step-up adjustment used by
//! batch screening.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Error;
use crate::measures::{
    adjacent_abs_diff_sum, combined, displacement_sq_sum, spearman, spearman_from_sum, xi,
    xi_from_sum, xi_scale,
};
use crate::normal::{normal_cdf, normal_sf};
use crate::ranks::{concomitant_ranks, PairedSample, RankSequence, TiePolicy};

// ---------------------------------------------------------------------------
// result types
// ---------------------------------------------------------------------------

/// Which test statistic a result refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Spearman,
    Chatterjee,
    Combined,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Spearman => "spearman",
            Method::Chatterjee => "chatterjee",
            Method::Combined => "combined",
        })
    }
}

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PSource {
    Asymptotic,
    Permutation,
    Exact,
}

/// Outcome of a single test.
///
/// `statistic` is the signed statistic (S_n for Spearman, xi_n for
/// Chatterjee, I_n for Combined); the p-value follows the sidedness
/// conventions above, so for Spearman it refers to |S_n|.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub method: Method,
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
    pub p_source: PSource,
    pub permutations_used: Option<u64>,
    pub seed: Option<u64>,
}

// ---------------------------------------------------------------------------
// asymptotic p-values
// ---------------------------------------------------------------------------

fn check_n(n: usize) -> Result<(), Error> {
    if n < 2 {
        Err(Error::SampleTooSmall { n, min: 2 })
    } else {
        Ok(())
    }
}

/// Two-sided Spearman p-value `2(1 - Phi(sqrt(n) |s|))`, using the
/// cancellation-free upper-tail form.
pub fn spearman_pvalue_asymptotic(s: f64, n: usize) -> Result<f64, Error> {
    check_n(n)?;
    let z = (n as f64).sqrt() * s.abs();
    Ok((2.0 * normal_sf(z)).min(1.0))
}

/// One-sided right-tail Chatterjee p-value `1 - Phi(sqrt(n) x / sqrt(2/5))`,
/// from the `N(0, 2/5)` limit of `sqrt(n) xi_n`.
pub fn xi_pvalue_asymptotic(x: f64, n: usize) -> Result<f64, Error> {
    check_n(n)?;
    let z = (n as f64).sqrt() * x / (2.0f64 / 5.0).sqrt();
    Ok(normal_sf(z))
}

/// Combined-statistic p-value `P(sqrt(n) I_n > z) ~ 1 - Phi(z)[1 - 2Phi(-z)]`
/// with `z = sqrt(n) max(I, 0)`.
///
/// The probability is evaluated in the exactly rearranged form
/// `Phi(-z) (1 + 2 Phi(z))`, which avoids the cancellation the literal form
/// suffers in the right tail. It is the independent-limit identity
/// `1 - P(|N1| <= z) P(N2 <= z)` for standard normals N1, N2: the two scaled
/// arms of I_n are asymptotically independent, the |S_n| arm two-sided and
/// the xi arm one-sided.
pub fn combined_pvalue_asymptotic(i: f64, n: usize) -> Result<f64, Error> {
    check_n(n)?;
    let z = (n as f64).sqrt() * i.max(0.0);
    Ok(normal_sf(z) * (1.0 + 2.0 * normal_cdf(z)))
}

/// All three statistics of `ranks` with the asymptotic p-value of `method`.
pub fn asymptotic_test(ranks: &RankSequence, method: Method) -> TestResult {
    let s = spearman(ranks);
    let x = xi(ranks);
    let (statistic, p_value) = match method {
        Method::Spearman => (s.value, spearman_pvalue_asymptotic(s.value, s.n)),
        Method::Chatterjee => (x.value, xi_pvalue_asymptotic(x.value, x.n)),
        Method::Combined => {
            let i = combined(s, x).expect("same ranks");
            (i.value, combined_pvalue_asymptotic(i.value, i.n))
        }
    };
    TestResult {
        method,
        statistic,
        n: ranks.n(),
        p_value: p_value.expect("n >= 2 by RankSequence construction"),
        p_source: PSource::Asymptotic,
        permutations_used: None,
        seed: None,
    }
}

// ---------------------------------------------------------------------------
// permutation test
// ---------------------------------------------------------------------------

/// Stateless mix of (seed, index) into a fresh seed, used to hand nested
/// engines (per-run permutation tests, per-row screens) independent seeds.
/// This is the splitmix64 finalizer, which maps distinct inputs to
/// well-separated outputs.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded Monte Carlo permutation p-value with the add-one estimator
/// `p = (1 + #{b : T_b >= T_0}) / (R + 1)`.
///
/// T is `|S_n|`, `xi_n`, or `I_n` per `method`. Replicate b draws a uniform
/// permutation of the y-ranks from stream b of a counter-based generator
/// seeded with `seed`, so the exceedance count (an order-independent integer
/// sum) is identical no matter how replicates are distributed across
/// threads. For Spearman and Chatterjee the comparison `T_b >= T_0` is done
/// on integer rank sums, exactly.
pub fn permutation_pvalue(
    sample: &PairedSample,
    method: Method,
    permutations: usize,
    seed: u64,
    policy: TiePolicy,
) -> Result<TestResult, Error> {
    if permutations < 1 {
        return Err(Error::TooFewReplicates {
            what: "permutations",
            got: permutations,
            min: 1,
        });
    }
    let ranks = concomitant_ranks(sample, policy)?;
    let n = ranks.n();

    let a0 = adjacent_abs_diff_sum(ranks.ranks());
    let b0 = displacement_sq_sum(ranks.ranks());
    let d = n as i128 * (n as i128 * n as i128 - 1);
    let s_dev0 = (d - 6 * b0 as i128).abs();
    let i0 = spearman_from_sum(b0, n)
        .abs()
        .max(xi_scale() * xi_from_sum(a0, n));

    let exceed: u64 = (1..=permutations as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let mut perm: Vec<usize> = ranks.ranks().to_vec();
            perm.shuffle(&mut rng);
            let hit = match method {
                Method::Spearman => (d - 6 * displacement_sq_sum(&perm) as i128).abs() >= s_dev0,
                Method::Chatterjee => adjacent_abs_diff_sum(&perm) <= a0,
                Method::Combined => {
                    let s_b = spearman_from_sum(displacement_sq_sum(&perm), n).abs();
                    let x_b = xi_from_sum(adjacent_abs_diff_sum(&perm), n);
                    s_b.max(xi_scale() * x_b) >= i0
                }
            };
            u64::from(hit)
        })
        .sum();

    let statistic = match method {
        Method::Spearman => spearman_from_sum(b0, n),
        Method::Chatterjee => xi_from_sum(a0, n),
        Method::Combined => i0,
    };
    Ok(TestResult {
        method,
        statistic,
        n,
        p_value: (1 + exceed) as f64 / (permutations as f64 + 1.0),
        p_source: PSource::Permutation,
        permutations_used: Some(permutations as u64),
        seed: Some(seed),
    })
}

// ---------------------------------------------------------------------------
// Benjamini-Hochberg
// ---------------------------------------------------------------------------

/// Outcome of a Benjamini-Hochberg adjustment, in input order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FdrResult {
    pub raw_p: Vec<f64>,
    pub adjusted_p: Vec<f64>,
    pub rejected: Vec<bool>,
    pub q_level: f64,
}

impl FdrResult {
    pub fn rejected_count(&self) -> usize {
        self.rejected.iter().filter(|&&r| r).count()
    }
}

/// Step-up Benjamini-Hochberg adjustment at FDR level `q`.
///
/// Sort ascending; the i-th smallest p gets `min over j >= i of m p_(j) / j`
/// clamped to 1; a hypothesis is rejected iff its adjusted p is at most `q`.
/// The running minimum is taken from the largest rank downward so adjusted
/// values are non-decreasing along the sorted order.
pub fn bh_adjust(pvalues: &[f64], q: f64) -> Result<FdrResult, Error> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidLevel { q });
    }
    for (index, &value) in pvalues.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidPValue { index, value });
        }
    }
    let m = pvalues.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvalues[a].total_cmp(&pvalues[b]));

    let mut adjusted = vec![0.0f64; m];
    let mut running = 1.0f64;
    for (k, &i) in order.iter().enumerate().rev() {
        running = running.min(pvalues[i] * m as f64 / (k as f64 + 1.0));
        adjusted[i] = running;
    }
    let rejected = adjusted.iter().map(|&a| a <= q).collect();
    Ok(FdrResult {
        raw_p: pvalues.to_vec(),
        adjusted_p: adjusted,
        rejected,
        q_level: q,
    })
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
