//! Shared error type.

use thiserror::Error;

/// Everything that can go wrong across the crate, from input validation to
/// enumeration limits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// x and y vectors of a paired sample differ in length.
    #[error("x has length {x_len} but y has length {y_len}")]
    LengthMismatch { x_len: usize, y_len: usize },

    /// A NaN or infinity showed up in an input vector.
    #[error("non-finite value in {column} at index {index}")]
    NonFiniteValue { column: &'static str, index: usize },

    /// Fewer observations than the operation can work with.
    #[error("sample size {n} is too small (minimum {min})")]
    SampleTooSmall { n: usize, min: usize },

    /// Duplicate values found while `TiePolicy::Reject` is in effect.
    #[error("ties present: {x_groups} tied group(s) in x, {y_groups} tied group(s) in y")]
    TiesPresent { x_groups: usize, y_groups: usize },

    /// A rank vector is not a permutation of 1..=n.
    #[error("ranks are not a permutation of 1..={n}")]
    NotPermutation { n: usize },

    /// Two statistics were combined that came from different sample sizes.
    #[error("statistics come from different sample sizes: {left} vs {right}")]
    SampleSizeMismatch { left: usize, right: usize },

    /// Exact enumeration was asked for beyond its factorial budget.
    #[error("n = {n} exceeds the exact-enumeration limit of {max}")]
    NTooLarge { n: usize, max: usize },

    /// A rank moment involving more indices than the sample provides.
    #[error("moment {moment} needs n >= {min}, got n = {n}")]
    NTooSmallForMoment {
        moment: &'static str,
        n: usize,
        min: usize,
    },

    /// The odd-n extremal construction was given an even n.
    #[error("construction requires odd n, got n = {n}")]
    EvenN { n: usize },

    /// The oscillating extremal construction needs m >= 2.
    #[error("invalid shape: m = {m} (need m >= 2)")]
    InvalidShape { m: usize },

    /// A p-value outside [0, 1] was handed to the FDR adjustment.
    #[error("p-value {value} at index {index} is outside [0, 1]")]
    InvalidPValue { index: usize, value: f64 },

    /// An FDR level outside (0, 1).
    #[error("FDR level q = {q} is outside (0, 1)")]
    InvalidLevel { q: f64 },

    /// Too few permutations, runs, or replicates for the requested study.
    #[error("{what} must be at least {min}, got {got}")]
    TooFewReplicates {
        what: &'static str,
        got: usize,
        min: usize,
    },

    /// A significance level outside (0, 1).
    #[error("alpha = {alpha} is outside (0, 1)")]
    InvalidAlpha { alpha: f64 },
}
