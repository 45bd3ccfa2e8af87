//! Exact null distributions by full enumeration, `n <= 8`.
//!
//! Under independence the rank sequence is a uniform random permutation, so
//! for small n every null quantity (joint distribution of the statistics,
//! covariances, rank moments, p-values) can be computed exactly by visiting
//! all n! permutations. Each statistic reduces to an integer rank sum
//! (`A = sum |dR|`, `B = sum (i - R_i)^2`), so enumeration accumulates
//! integers only and forms arbitrary-precision rationals at the very end.
//! This module is the ground truth the floating-point paths are tested
//! against.
//!
//! Comparisons against the combined statistic involve the irrational factor
//! `sqrt(5/2)`; they are decided exactly in rationals by mapping every arm
//! through the strictly increasing function `v -> sign(v) * v^2`, under
//! which `sqrt(5/2) * xi` becomes the rational `sign(xi) * (5/2) xi^2`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
pub use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::Error;
use crate::inference::Method;
use crate::measures::{adjacent_abs_diff_sum, displacement_sq_sum};
use crate::ranks::RankSequence;

/// Largest n for which enumeration is offered (8! = 40320 permutations).
pub const MAX_EXACT_N: usize = 8;

// ---------------------------------------------------------------------------
// distribution types
// ---------------------------------------------------------------------------

/// One support point of the exact joint null law of `(S_n, xi_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionAtom {
    pub spearman: BigRational,
    pub xi: BigRational,
    pub multiplicity: u64,
}

/// The exact joint null distribution of `(S_n, xi_n)` at sample size n:
/// atoms with multiplicities summing to n!, sorted by descending Spearman
/// value then descending xi.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    n: usize,
    atoms: Vec<DistributionAtom>,
}

impl ExactDistribution {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[DistributionAtom] {
        &self.atoms
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.atoms.iter().map(|a| a.multiplicity).sum()
    }
}

/// One permutation with its exact statistic values.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationRow {
    pub ranks: Vec<usize>,
    pub spearman: BigRational,
    pub xi: BigRational,
}

/// Exact statistics and p-value for one observed rank sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTestResult {
    pub method: Method,
    pub n: usize,
    pub spearman: BigRational,
    pub xi: BigRational,
    pub p_value: BigRational,
}

// ---------------------------------------------------------------------------
// enumeration plumbing
// ---------------------------------------------------------------------------

fn check_exact_n(n: usize) -> Result<(), Error> {
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    if n > MAX_EXACT_N {
        return Err(Error::NTooLarge {
            n,
            max: MAX_EXACT_N,
        });
    }
    Ok(())
}

pub(crate) fn factorial(n: usize) -> u64 {
    (2..=n as u64).product()
}

/// Heap's algorithm: visits every permutation of {1..n} exactly once.
pub(crate) fn for_each_permutation<F: FnMut(&[usize])>(n: usize, mut visit: F) {
    let mut a: Vec<usize> = (1..=n).collect();
    let mut c = vec![0usize; n];
    visit(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            visit(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

fn ratio(num: i128, den: i128) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// xi denominator `n^2 - 1`.
fn xi_den(n: usize) -> i128 {
    n as i128 * n as i128 - 1
}

/// Spearman denominator `n (n^2 - 1)`.
fn spearman_den(n: usize) -> i128 {
    n as i128 * xi_den(n)
}

fn exact_spearman(b: u64, n: usize) -> BigRational {
    let d = spearman_den(n);
    ratio(d - 6 * b as i128, d)
}

fn exact_xi(a: u64, n: usize) -> BigRational {
    let m = xi_den(n);
    ratio(m - 3 * a as i128, m)
}

/// `sign(v) * v^2`: a strictly increasing image of v, so comparisons of
/// signed squares decide comparisons of the originals.
fn signed_square(v: &BigRational) -> BigRational {
    let sq = v * v;
    if v.is_negative() {
        -sq
    } else {
        sq
    }
}

/// Signed square of `sqrt(5/2) * xi`, which is rational even though the
/// scaled value itself is not.
fn scaled_xi_signed_square(xi: &BigRational) -> BigRational {
    signed_square(xi) * ratio(5, 2)
}

/// Signed square of the combined statistic `max(|S|, sqrt(5/2) xi)`.
fn combined_signed_square(spearman: &BigRational, xi: &BigRational) -> BigRational {
    let s_sq = signed_square(&spearman.abs());
    let x_sq = scaled_xi_signed_square(xi);
    s_sq.max(x_sq)
}

// ---------------------------------------------------------------------------
// public operations
// ---------------------------------------------------------------------------

/// The exact joint null law of `(S_n, xi_n)`: every permutation visited
/// once, equal statistic pairs merged into one atom.
pub fn enumerate_null(n: usize) -> Result<ExactDistribution, Error> {
    check_exact_n(n)?;
    let mut groups: BTreeMap<(u64, u64), u64> = BTreeMap::new();
    for_each_permutation(n, |perm| {
        let key = (adjacent_abs_diff_sum(perm), displacement_sq_sum(perm));
        *groups.entry(key).or_insert(0) += 1;
    });
    let mut atoms: Vec<DistributionAtom> = groups
        .into_iter()
        .map(|((a, b), multiplicity)| DistributionAtom {
            spearman: exact_spearman(b, n),
            xi: exact_xi(a, n),
            multiplicity,
        })
        .collect();
    atoms.sort_by(|u, v| v.spearman.cmp(&u.spearman).then_with(|| v.xi.cmp(&u.xi)));
    Ok(ExactDistribution { n, atoms })
}

/// Every permutation of {1..n} with its exact statistics, in lexicographic
/// order of the rank vector.
pub fn enumerate_rows(n: usize) -> Result<Vec<PermutationRow>, Error> {
    check_exact_n(n)?;
    let mut rows = Vec::with_capacity(factorial(n) as usize);
    for_each_permutation(n, |perm| {
        rows.push(PermutationRow {
            ranks: perm.to_vec(),
            spearman: exact_spearman(displacement_sq_sum(perm), n),
            xi: exact_xi(adjacent_abs_diff_sum(perm), n),
        });
    });
    rows.sort_by(|u, v| u.ranks.cmp(&v.ranks));
    Ok(rows)
}

/// Which covariance [`exact_covariance`] computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceKind {
    /// `Cov[S_n, xi_n]`, which is exactly zero for every n >= 2.
    SpearmanXi,
    /// `Cov[|S_n|, xi_n]`, nonzero in general (1/24 at n = 3): the two
    /// statistics are uncorrelated but not independent.
    AbsSpearmanXi,
}

/// Exact covariance over the uniform permutation law.
pub fn exact_covariance(n: usize, kind: CovarianceKind) -> Result<BigRational, Error> {
    check_exact_n(n)?;
    let d = spearman_den(n);
    let m = xi_den(n);
    // integer accumulators: f is S's numerator or its absolute value
    let mut sum_f: i128 = 0;
    let mut sum_x: i128 = 0;
    let mut sum_fx: i128 = 0;
    for_each_permutation(n, |perm| {
        let s_num = d - 6 * displacement_sq_sum(perm) as i128;
        let x_num = m - 3 * adjacent_abs_diff_sum(perm) as i128;
        let f_num = match kind {
            CovarianceKind::SpearmanXi => s_num,
            CovarianceKind::AbsSpearmanXi => s_num.abs(),
        };
        sum_f += f_num;
        sum_x += x_num;
        sum_fx += f_num * x_num;
    });
    let count = factorial(n) as i128;
    let e_fx = ratio(sum_fx, count * d * m);
    let e_f = ratio(sum_f, count * d);
    let e_x = ratio(sum_x, count * m);
    Ok(e_fx - e_f * e_x)
}

/// Which rank moment [`exact_rank_moment`] computes. The names refer to the
/// first ranks R_1, R_2, R_3 of the sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankMoment {
    /// `Cov[R_1, R_2] = -(n+1)/12`.
    CovR1R2,
    /// `Var[R_1] = (n-1)(n+1)/12`.
    VarR1,
    /// `Cov[R_1, min(R_1, R_2)] = (n+1)(n-2)/24`.
    CovR1MinR1R2,
    /// `Cov[R_1, min(R_2, R_3)] = -(n+1)/12`; needs n >= 3.
    CovR1MinR2R3,
    /// `E[sqrt(n) S_n] = 0`.
    MeanSqrtnS,
    /// `Var[sqrt(n) S_n] = n/(n-1)`.
    VarSqrtnS,
}

/// Exact moment of the uniform permutation law by enumeration. The closed
/// forms quoted on [`RankMoment`] are what tests compare the output against.
pub fn exact_rank_moment(n: usize, which: RankMoment) -> Result<BigRational, Error> {
    check_exact_n(n)?;
    if which == RankMoment::CovR1MinR2R3 && n < 3 {
        return Err(Error::NTooSmallForMoment {
            moment: "Cov[R1, min(R2, R3)]",
            n,
            min: 3,
        });
    }
    let d = spearman_den(n);
    let count = factorial(n) as i128;

    match which {
        RankMoment::CovR1R2 => {
            let (mut r1, mut r2, mut r1r2) = (0i128, 0i128, 0i128);
            for_each_permutation(n, |p| {
                let (a, b) = (p[0] as i128, p[1] as i128);
                r1 += a;
                r2 += b;
                r1r2 += a * b;
            });
            Ok(ratio(r1r2, count) - ratio(r1, count) * ratio(r2, count))
        }
        RankMoment::VarR1 => {
            let (mut r1, mut r1sq) = (0i128, 0i128);
            for_each_permutation(n, |p| {
                let a = p[0] as i128;
                r1 += a;
                r1sq += a * a;
            });
            let mean = ratio(r1, count);
            Ok(ratio(r1sq, count) - mean.clone() * mean)
        }
        RankMoment::CovR1MinR1R2 => {
            let (mut r1, mut mn, mut prod) = (0i128, 0i128, 0i128);
            for_each_permutation(n, |p| {
                let a = p[0] as i128;
                let m12 = p[0].min(p[1]) as i128;
                r1 += a;
                mn += m12;
                prod += a * m12;
            });
            Ok(ratio(prod, count) - ratio(r1, count) * ratio(mn, count))
        }
        RankMoment::CovR1MinR2R3 => {
            let (mut r1, mut mn, mut prod) = (0i128, 0i128, 0i128);
            for_each_permutation(n, |p| {
                let a = p[0] as i128;
                let m23 = p[1].min(p[2]) as i128;
                r1 += a;
                mn += m23;
                prod += a * m23;
            });
            Ok(ratio(prod, count) - ratio(r1, count) * ratio(mn, count))
        }
        RankMoment::MeanSqrtnS => {
            let mut s_num: i128 = 0;
            for_each_permutation(n, |p| {
                s_num += d - 6 * displacement_sq_sum(p) as i128;
            });
            // complement symmetry pairs each permutation with one of opposite
            // S, so the sum is identically zero and the sqrt(n) scale factor
            // multiplies an exact zero
            assert_eq!(s_num, 0, "E[S_n] must vanish by complement symmetry");
            Ok(BigRational::zero())
        }
        RankMoment::VarSqrtnS => {
            let mut s_sq: i128 = 0;
            for_each_permutation(n, |p| {
                let num = d - 6 * displacement_sq_sum(p) as i128;
                s_sq += num * num;
            });
            // E[S] = 0, so Var[sqrt(n) S] = n E[S^2]
            Ok(ratio(n as i128 * s_sq, count * d * d))
        }
    }
}

/// Exact p-value `P(T >= observed)` under the uniform permutation law, with
/// T following each method's sidedness: `|S_n|` for Spearman, `xi_n` for
/// Chatterjee, `I_n` for Combined.
pub fn exact_pvalue(
    n: usize,
    method: Method,
    observed: &BigRational,
) -> Result<BigRational, Error> {
    let dist = enumerate_null(n)?;
    let threshold_sq = signed_square(observed);
    let hits: u64 = dist
        .atoms()
        .iter()
        .filter(|atom| match method {
            Method::Spearman => atom.spearman.abs() >= *observed,
            Method::Chatterjee => atom.xi >= *observed,
            Method::Combined => combined_signed_square(&atom.spearman, &atom.xi) >= threshold_sq,
        })
        .map(|atom| atom.multiplicity)
        .sum();
    Ok(ratio(hits as i128, factorial(n) as i128))
}

/// Exact combined-statistic p-value for an observed pair `(|S_n|, xi_n)`.
///
/// The observed threshold `max(|S|, sqrt(5/2) xi)` is irrational in general,
/// so the comparison happens between signed squares, which are rational.
pub fn exact_pvalue_combined(
    n: usize,
    s_abs: &BigRational,
    xi: &BigRational,
) -> Result<BigRational, Error> {
    let dist = enumerate_null(n)?;
    let threshold_sq = combined_signed_square(&s_abs.abs(), xi);
    let hits: u64 = dist
        .atoms()
        .iter()
        .filter(|atom| combined_signed_square(&atom.spearman, &atom.xi) >= threshold_sq)
        .map(|atom| atom.multiplicity)
        .sum();
    Ok(ratio(hits as i128, factorial(n) as i128))
}

/// Exact statistics of `ranks` and the exact p-value of `method`.
pub fn exact_test(ranks: &RankSequence, method: Method) -> Result<ExactTestResult, Error> {
    let n = ranks.n();
    check_exact_n(n)?;
    let s = exact_spearman(displacement_sq_sum(ranks.ranks()), n);
    let x = exact_xi(adjacent_abs_diff_sum(ranks.ranks()), n);
    let p_value = match method {
        Method::Spearman => exact_pvalue(n, method, &s.abs())?,
        Method::Chatterjee => exact_pvalue(n, method, &x)?,
        Method::Combined => exact_pvalue_combined(n, &s.abs(), &x)?,
    };
    Ok(ExactTestResult {
        method,
        n,
        spearman: s,
        xi: x,
        p_value,
    })
}

/// Nearest f64 to an exact rational, for display next to the num/den form.
pub fn approx_f64(v: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

/// Brute-force search over all permutations for the largest `|S_n|`
/// attainable while `xi_n` stays below `epsilon`; the small-n view of the
/// divergence the extremal constructions exhibit at scale. Returns the
/// lexicographically first maximizer, or None if no permutation qualifies.
pub fn max_spearman_with_xi_below(
    n: usize,
    epsilon: &BigRational,
) -> Result<Option<PermutationRow>, Error> {
    let rows = enumerate_rows(n)?;
    let mut best: Option<PermutationRow> = None;
    for row in rows {
        if row.xi < *epsilon {
            let abs_s = row.spearman.abs();
            match &best {
                Some(b) if b.spearman.abs() >= abs_s => {}
                _ => best = Some(row),
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
