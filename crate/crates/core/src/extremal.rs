//! Rank sequences on which the two correlations disagree as much as
//! possible.
//!
//! Case 1 is a zigzag permutation whose adjacent-difference sum stays tiny
//! relative to n, so xi tends to 1 while Spearman's statistic collapses to
//! 3/(2n): strong functional dependence that monotone-trend measures cannot
//! see. Case 2 interleaves two rising half-sequences of length m and appends
//! a sorted tail of length p; it is monotone overall but wiggles locally, so
//! Spearman stays large while xi falls toward 1 - 6/(c+2)^2 with c = p/m.
//! Together they show neither statistic dominates the other.

// index arithmetic mirrors the two-branch closed forms literally
#![allow(clippy::manual_is_multiple_of, clippy::manual_div_ceil)]

use crate::error::Error;
use crate::measures::spearman;
use crate::ranks::RankSequence;

/// A requested extremal construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremalSpec {
    /// Zigzag sequence at odd size n: xi high, |S| = 3/(2n).
    Case1 { n: usize },
    /// Interleaved half-sequences plus sorted tail, n = 2m + p: |S| high,
    /// xi small.
    Case2 { m: usize, p: usize },
}

impl ExtremalSpec {
    pub fn ranks(&self) -> Result<RankSequence, Error> {
        match *self {
            ExtremalSpec::Case1 { n } => case1_ranks(n),
            ExtremalSpec::Case2 { m, p } => case2_ranks(m, p),
        }
    }

    pub fn evaluate(&self) -> Result<(f64, f64), Error> {
        match *self {
            ExtremalSpec::Case1 { n } => case1_closed_forms(n),
            ExtremalSpec::Case2 { m, p } => case2_evaluate(m, p),
        }
    }
}

fn check_case1_n(n: usize) -> Result<(), Error> {
    if n % 2 == 0 {
        return Err(Error::EvenN { n });
    }
    if n < 3 {
        return Err(Error::SampleTooSmall { n, min: 3 });
    }
    Ok(())
}

/// The case 1 zigzag: R_i = n - 2(i-1) over the first half, 2i - (n+1)
/// over the second. Odd n >= 3 only.
pub fn case1_ranks(n: usize) -> Result<RankSequence, Error> {
    check_case1_n(n)?;
    let ranks: Vec<usize> = (1..=n)
        .map(|i| {
            if i <= (n + 1) / 2 {
                n - 2 * (i - 1)
            } else {
                2 * i - (n + 1)
            }
        })
        .collect();
    RankSequence::new(ranks)
}

/// Closed-form statistic values of the case 1 sequence:
/// xi = 1 - (6n-9)/(n^2-1) and |S| = 3/(2n).
pub fn case1_closed_forms(n: usize) -> Result<(f64, f64), Error> {
    check_case1_n(n)?;
    let nf = n as f64;
    let xi = 1.0 - (6.0 * nf - 9.0) / (nf * nf - 1.0);
    let abs_s = 3.0 / (2.0 * nf);
    Ok((xi, abs_s))
}

/// The case 2 interleaving: R_i = (i+1)/2 for odd i <= 2m, i/2 + m for
/// even i <= 2m, and i beyond that. Requires m >= 2; p >= 0 is free.
pub fn case2_ranks(m: usize, p: usize) -> Result<RankSequence, Error> {
    if m < 2 {
        return Err(Error::InvalidShape { m });
    }
    let n = 2 * m + p;
    let ranks: Vec<usize> = (1..=n)
        .map(|i| {
            if i > 2 * m {
                i
            } else if i % 2 == 1 {
                (i + 1) / 2
            } else {
                i / 2 + m
            }
        })
        .collect();
    RankSequence::new(ranks)
}

/// Statistic values of the case 2 sequence: xi from its closed form
/// 1 - 3[m^2 + (m-1)^2 + p]/(n^2 - 1), |S| evaluated directly on the
/// constructed ranks.
pub fn case2_evaluate(m: usize, p: usize) -> Result<(f64, f64), Error> {
    let ranks = case2_ranks(m, p)?;
    let n = (2 * m + p) as f64;
    let mf = m as f64;
    let xi = 1.0 - 3.0 * (mf * mf + (mf - 1.0) * (mf - 1.0) + p as f64) / (n * n - 1.0);
    let abs_s = spearman(&ranks).value.abs();
    debug_assert!((xi - crate::measures::xi(&ranks).value).abs() < 1e-12);
    Ok((xi, abs_s))
}
