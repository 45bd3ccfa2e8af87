//! Paired samples and concomitant ranks.
//!
//! Both correlation statistics consume the same input: sort the pairs
//! `(x_i, y_i)` by ascending x, then rank the y values in that order. The
//! resulting sequence `R_1..R_n` (the ranks of the y concomitants) is all
//! either statistic ever looks at.
//!
//! Ties are a modeling decision, not a computation detail, so they are
//! explicit here: the default [`TiePolicy::Reject`] fails loudly on duplicate
//! values, while [`TiePolicy::RandomBreak`] orders tied values by a seeded
//! shuffle so results stay reproducible.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;

// ---------------------------------------------------------------------------
// sample and rank containers
// ---------------------------------------------------------------------------

/// Paired observations `(x_i, y_i)`.
///
/// Construction enforces equal lengths, `n >= 2`, and finiteness of every
/// value, so downstream code never re-validates.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self, Error> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                x_len: x.len(),
                y_len: y.len(),
            });
        }
        if x.len() < 2 {
            return Err(Error::SampleTooSmall { n: x.len(), min: 2 });
        }
        for (column, values) in [("x", &x), ("y", &y)] {
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { column, index });
            }
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// A rank sequence `R_1..R_n`: always a permutation of `{1, ..., n}` with
/// `n >= 2`, verified on construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankSequence {
    ranks: Vec<usize>,
}

impl RankSequence {
    pub fn new(ranks: Vec<usize>) -> Result<Self, Error> {
        if ranks.len() < 2 {
            return Err(Error::SampleTooSmall {
                n: ranks.len(),
                min: 2,
            });
        }
        if !validate_permutation(&ranks) {
            return Err(Error::NotPermutation { n: ranks.len() });
        }
        Ok(Self { ranks })
    }

    /// Skips validation; callers must hand in a permutation of {1..n}, n >= 2.
    pub(crate) fn from_permutation_unchecked(ranks: Vec<usize>) -> Self {
        debug_assert!(ranks.len() >= 2 && validate_permutation(&ranks));
        Self { ranks }
    }

    pub fn n(&self) -> usize {
        self.ranks.len()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }
}

/// True iff `ranks` is exactly a permutation of `{1, ..., ranks.len()}`.
/// The empty slice is not a permutation of anything.
pub fn validate_permutation(ranks: &[usize]) -> bool {
    let n = ranks.len();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    for &r in ranks {
        if r < 1 || r > n || seen[r - 1] {
            return false;
        }
        seen[r - 1] = true;
    }
    true
}

// ---------------------------------------------------------------------------
// tie handling and ranking
// ---------------------------------------------------------------------------

/// What to do when x or y contains duplicate values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TiePolicy {
    /// Fail with [`Error::TiesPresent`]. The default: silent randomization
    /// hurts reproducibility.
    Reject,
    /// Order tied values by a seeded uniform shuffle among each tied group.
    /// The same `(sample, seed)` always produces the same ranks.
    RandomBreak { seed: u64 },
}

/// Ranks of the y concomitants after sorting pairs by ascending x.
///
/// With `RandomBreak`, tied x values (and independently tied y values) are
/// permuted uniformly at random within each tied group before ranking, using
/// two dedicated streams of a counter-based generator so x and y tie-breaks
/// do not interact.
pub fn concomitant_ranks(sample: &PairedSample, policy: TiePolicy) -> Result<RankSequence, Error> {
    let x_groups = tied_group_count(sample.x());
    let y_groups = tied_group_count(sample.y());
    if policy == TiePolicy::Reject && (x_groups > 0 || y_groups > 0) {
        return Err(Error::TiesPresent { x_groups, y_groups });
    }

    let x_order = sorted_order(sample.x(), policy, 0);
    let y_order = sorted_order(sample.y(), policy, 1);

    // invert the y ordering into ranks, then read them off in x order
    let n = sample.n();
    let mut y_rank = vec![0usize; n];
    for (pos, &i) in y_order.iter().enumerate() {
        y_rank[i] = pos + 1;
    }
    let ranks = x_order.iter().map(|&i| y_rank[i]).collect();
    Ok(RankSequence::from_permutation_unchecked(ranks))
}

/// Number of groups of two or more equal values.
fn tied_group_count(values: &[f64]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = 0;
    let mut run = 1;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            groups += usize::from(run >= 2);
            run = 1;
        }
    }
    groups + usize::from(run >= 2)
}

/// Indices of `values` in ascending order. A stable sort keeps input order
/// within tied groups; `RandomBreak` then shuffles each tied group with the
/// given stream of a seeded generator.
fn sorted_order(values: &[f64], policy: TiePolicy, stream: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    if let TiePolicy::RandomBreak { seed } = policy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut i = 0;
        while i < order.len() {
            let mut j = i + 1;
            while j < order.len() && values[order[j]] == values[order[i]] {
                j += 1;
            }
            if j - i > 1 {
                order[i..j].shuffle(&mut rng);
            }
            i = j;
        }
    }
    order
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
