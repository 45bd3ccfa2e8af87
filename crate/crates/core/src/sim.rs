//! Monte Carlo harness: synthetic dependence scenarios, power estimation,
//! p-value bias measurement, and null-joint sampling.
//!
//! Every operation is deterministic for a given seed and bitwise stable
//! under any worker count: replicate r always draws from the ChaCha8 stream
//! derived from (seed, r), and reductions are order-independent integer
//! counts or index-preserving collects. Normal variates come from
//! rand_distr's StandardNormal (Ziggurat); changing that source would shift
//! every golden value downstream, so it is part of the contract.

use rand::distr::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::Error;
use crate::inference::{asymptotic_test, derive_seed, permutation_pvalue, Method};
use crate::measures::{spearman, xi};
use crate::ranks::{concomitant_ranks, PairedSample, RankSequence, TiePolicy};

/// Synthetic dependence patterns. X is always Uniform[-1, 1]; the noise
/// scale is fixed per scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Y = eps, independent of X.
    Null,
    /// Y = X + eps.
    Linear,
    /// Y = X^2 + 0.3 eps: strong functional dependence, near-zero monotone
    /// trend.
    Quadratic,
    /// Y = cos(2 pi X) + 0.75 eps.
    Sinusoid,
    /// Y steps through 1..4 on quarters of the X range, plus 2 eps.
    Stepwise,
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Scenario::Null => "null",
            Scenario::Linear => "linear",
            Scenario::Quadratic => "quadratic",
            Scenario::Sinusoid => "sinusoid",
            Scenario::Stepwise => "stepwise",
        };
        f.write_str(name)
    }
}

/// A fully specified draw: scenario, sample size, RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScenarioSpec {
    pub scenario: Scenario,
    pub n: usize,
    pub seed: u64,
}

/// Power of one test under one scenario, with its binomial standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerEstimate {
    pub scenario: Scenario,
    pub n: usize,
    pub test: Method,
    pub alpha: f64,
    pub runs: usize,
    pub power: f64,
    pub mc_std_error: f64,
}

/// Asymptotic-minus-permutation p-value differences over repeated null
/// samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasRecord {
    pub n: usize,
    pub runs: usize,
    pub permutations: u64,
    pub mean_bias: f64,
    pub bias_samples: Vec<f64>,
}

/// Which p-value the power loop thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerPValues {
    Asymptotic,
    Permutation { permutations: u64 },
}

fn response(scenario: Scenario, x: f64, eps: f64) -> f64 {
    match scenario {
        Scenario::Null => eps,
        Scenario::Linear => x + eps,
        Scenario::Quadratic => x * x + 0.3 * eps,
        Scenario::Sinusoid => (2.0 * PI * x).cos() + 0.75 * eps,
        Scenario::Stepwise => {
            // boundary convention: [-1, -0.5] -> 1, (-0.5, 0] -> 2,
            // (0, 0.5] -> 3, (0.5, 1] -> 4
            let step = if x <= -0.5 {
                1.0
            } else if x <= 0.0 {
                2.0
            } else if x <= 0.5 {
                3.0
            } else {
                4.0
            };
            step + 2.0 * eps
        }
    }
}

/// One synthetic sample. All n X-values are drawn first, then all n noise
/// values, from a single ChaCha8 stream seeded by `spec.seed`; that order
/// is fixed so seeds reproduce across releases.
pub fn generate(spec: ScenarioSpec) -> Result<PairedSample, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let uniform = Uniform::new_inclusive(-1.0, 1.0).expect("constant range is valid");
    let x: Vec<f64> = (0..spec.n).map(|_| uniform.sample(&mut rng)).collect();
    let y: Vec<f64> = x
        .iter()
        .map(|&xv| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            response(spec.scenario, xv, eps)
        })
        .collect();
    PairedSample::new(x, y)
}

fn check_power_inputs(alpha: f64, runs: usize) -> Result<(), Error> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha { alpha });
    }
    if runs < 100 {
        return Err(Error::TooFewReplicates {
            what: "runs",
            got: runs,
            min: 100,
        });
    }
    Ok(())
}

/// Rejection rate of `test` at level `alpha` over `runs` independent
/// samples, using asymptotic p-values.
pub fn estimate_power(
    spec: ScenarioSpec,
    test: Method,
    alpha: f64,
    runs: usize,
) -> Result<PowerEstimate, Error> {
    estimate_power_with(spec, test, alpha, runs, PowerPValues::Asymptotic)
}

/// [`estimate_power`] with a choice of p-value source; the permutation
/// variant is for small-n studies where the asymptotic approximation is
/// biased.
pub fn estimate_power_with(
    spec: ScenarioSpec,
    test: Method,
    alpha: f64,
    runs: usize,
    pvalues: PowerPValues,
) -> Result<PowerEstimate, Error> {
    check_power_inputs(alpha, runs)?;
    // run r draws data from derive_seed(seed, 2r) and, in permutation mode,
    // shuffles from derive_seed(seed, 2r + 1)
    let rejections: u64 = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let run_spec = ScenarioSpec {
                seed: derive_seed(spec.seed, 2 * r),
                ..spec
            };
            let sample = generate(run_spec)?;
            let p = match pvalues {
                PowerPValues::Asymptotic => {
                    let ranks = concomitant_ranks(&sample, TiePolicy::Reject)?;
                    asymptotic_test(&ranks, test).p_value
                }
                PowerPValues::Permutation { permutations } => {
                    permutation_pvalue(
                        &sample,
                        test,
                        permutations as usize,
                        derive_seed(spec.seed, 2 * r + 1),
                        TiePolicy::Reject,
                    )?
                    .p_value
                }
            };
            Ok(u64::from(p <= alpha))
        })
        .sum::<Result<u64, Error>>()?;
    let power = rejections as f64 / runs as f64;
    Ok(PowerEstimate {
        scenario: spec.scenario,
        n: spec.n,
        test,
        alpha,
        runs,
        power,
        mc_std_error: (power * (1.0 - power) / runs as f64).sqrt(),
    })
}

/// Asymptotic-minus-permutation p-value bias of `test` on independent data,
/// one difference per run. Positive mean bias means the asymptotic p-value
/// is conservative at this n.
pub fn bias_study(
    n: usize,
    runs: usize,
    permutations: u64,
    test: Method,
    seed: u64,
) -> Result<BiasRecord, Error> {
    if runs < 100 {
        return Err(Error::TooFewReplicates {
            what: "runs",
            got: runs,
            min: 100,
        });
    }
    if permutations < 1000 {
        return Err(Error::TooFewReplicates {
            what: "permutations",
            got: permutations as usize,
            min: 1000,
        });
    }
    let bias_samples: Vec<f64> = (0..runs as u64)
        .into_par_iter()
        .map(|r| {
            let spec = ScenarioSpec {
                scenario: Scenario::Null,
                n,
                seed: derive_seed(seed, 2 * r),
            };
            let sample = generate(spec)?;
            let ranks = concomitant_ranks(&sample, TiePolicy::Reject)?;
            let p_asym = asymptotic_test(&ranks, test).p_value;
            let p_perm = permutation_pvalue(
                &sample,
                test,
                permutations as usize,
                derive_seed(seed, 2 * r + 1),
                TiePolicy::Reject,
            )?
            .p_value;
            Ok(p_asym - p_perm)
        })
        .collect::<Result<Vec<f64>, Error>>()?;
    let mean_bias = bias_samples.iter().sum::<f64>() / bias_samples.len() as f64;
    Ok(BiasRecord {
        n,
        runs,
        permutations,
        mean_bias,
        bias_samples,
    })
}

/// `replicates` draws of `(sqrt(n) S_n, sqrt(n) xi_n)` under the exact
/// permutation null: each replicate shuffles the identity ranks with its
/// own derived stream.
pub fn null_joint_sample(n: usize, replicates: usize, seed: u64) -> Result<Vec<(f64, f64)>, Error> {
    if n < 2 {
        return Err(Error::SampleTooSmall { n, min: 2 });
    }
    if replicates < 1 {
        return Err(Error::TooFewReplicates {
            what: "replicates",
            got: replicates,
            min: 1,
        });
    }
    let sqrt_n = (n as f64).sqrt();
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r);
            let mut ranks: Vec<usize> = (1..=n).collect();
            ranks.shuffle(&mut rng);
            let seq = RankSequence::from_permutation_unchecked(ranks);
            (sqrt_n * spearman(&seq).value, sqrt_n * xi(&seq).value)
        })
        .collect())
}
