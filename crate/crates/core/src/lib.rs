//! Rank-based dependence measures and independence tests.
//!
//! The centerpiece is the max-combined statistic
//! `I_n = max(|S_n|, sqrt(5/2) * xi_n)`, where `S_n` is Spearman's rank
//! correlation and `xi_n` is Chatterjee's correlation, both computed from the
//! concomitant ranks of a paired sample. Spearman reacts to monotone trends,
//! Chatterjee to general functional dependence; taking the maximum of the two
//! variance-equalized arms gives a test with good power against both kinds of
//! alternative.
//!
//! The crate is organized around that pipeline:
//!
//! * [`ranks`]: paired samples, tie handling, concomitant ranks.
//! * [`measures`]: the statistics themselves, `O(n)` with exact integer
//!   numerators.
//! * [`inference`]: asymptotic and permutation p-values, plus
//!   Benjamini-Hochberg FDR adjustment for batch screening.
//! * [`exact`]: full enumeration of the permutation null for `n <= 8` in
//!   rational arithmetic; the ground truth the floating-point paths are
//!   tested against.
//! * [`extremal`]: rank constructions on which the two measures diverge.
//! * [`sim`]: seeded, thread-count-independent Monte Carlo studies of power,
//!   p-value bias, and the null joint distribution.

pub mod error;
pub mod exact;
pub mod extremal;
pub mod inference;
pub mod measures;
pub mod normal;
pub mod ranks;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
