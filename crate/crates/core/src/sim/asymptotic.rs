//! Large-`N` behaviour of the boundaries and of the randomization law.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{AdaStop, TestConfig};
use crate::error::{Error, Result};
use crate::perm::SignClass;
use crate::rng::{domain, rng_for};
use crate::sim::distribution::DistributionSpec;
use crate::stats::interim_difference;

pub const MIN_DRAWS: usize = 100_000;

const BISECTION_STEPS: usize = 200;

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// `τ(P, Q) = √(σ_P² + σ_Q² + (μ_P − μ_Q)²/2)`.
pub fn tau(p: &DistributionSpec, q: &DistributionSpec) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    Ok((p.variance() + q.variance() + 0.5 * (p.mean() - q.mean()).powi(2)).sqrt())
}

/// `z` with `P(|W| ≥ z) = p` for a standard normal `W`.
pub fn two_sided_quantile(p: f64) -> f64 {
    standard_normal().inverse_cdf(1.0 - p / 2.0)
}

/// Limits `b₁/τ, …, b_K/τ` of `B_{N,k}/√N`.
///
/// `b₁/τ` is the two-sided Gaussian quantile at `α/K`. For `k > 1`,
/// `b_k/τ` makes the probability that the random walk `W₁ + … + W_k`
/// leaves `[−b_k, b_k]` at step `k`, having stayed inside every earlier
/// band, equal to `α/K`; it is found by bisection on a Monte Carlo sample
/// of `draws` walks.
pub fn asymptotic_boundaries<R: Rng + ?Sized>(interims: usize, alpha: f64, draws: usize, rng: &mut R) -> Result<Vec<f64>> {
    if interims == 0 {
        return Err(Error::Config("number of interims K must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if draws < MIN_DRAWS {
        return Err(Error::Config(format!("at least {MIN_DRAWS} Monte Carlo draws are required, got {draws}")));
    }
    let target = alpha / interims as f64;
    let mut b = vec![two_sided_quantile(target)];
    let mut walk: Vec<f64> = (0..draws).map(|_| rng.sample(StandardNormal)).collect();
    let mut inside: Vec<bool> = walk.iter().map(|s: &f64| s.abs() <= b[0]).collect();
    for k in 2..=interims {
        for s in walk.iter_mut() {
            *s += rng.sample::<f64, _>(StandardNormal);
        }
        let candidates: Vec<f64> = walk.iter().zip(&inside).filter(|(_, &i)| i).map(|(s, _)| s.abs()).collect();
        let exit = |c: f64| candidates.iter().filter(|&&v| v > c).count() as f64 / draws as f64;
        let (mut lo, mut hi) = (0.0, candidates.iter().copied().fold(0.0, f64::max));
        if exit(lo) < target {
            return Err(Error::RootFinding {
                interim: k,
                detail: format!(
                    "exit mass at zero is {} below the target {target} with {} surviving walks",
                    exit(lo),
                    candidates.len()
                ),
            });
        }
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if exit(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-12 {
                break;
            }
        }
        let achieved = exit(hi);
        let resolution = 1.0 / draws as f64;
        if (achieved - target).abs() > 2.0 * resolution + 1e-12 {
            return Err(Error::RootFinding {
                interim: k,
                detail: format!("bisection stalled at c = {hi} with exit mass {achieved}, target {target}"),
            });
        }
        b.push(hi);
        for (s, i) in walk.iter().zip(inside.iter_mut()) {
            *i = *i && s.abs() <= hi;
        }
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfCheck {
    pub tau: f64,
    /// `sup_t |F̂(t) − Φ(t/τ)|` over the grid.
    pub distance: f64,
}

/// Compares the randomization law of the signed statistic `T_{N,1}/√N`,
/// estimated from `permutations` random relabellings of one drawn data set,
/// with its Gaussian limit `N(0, τ²)`.
pub fn randomization_cdf_check(
    p: &DistributionSpec,
    q: &DistributionSpec,
    group_size: usize,
    grid: &[f64],
    permutations: usize,
    seed: u64,
) -> Result<CdfCheck> {
    let tau = tau(p, q)?;
    if grid.is_empty() || permutations == 0 {
        return Err(Error::Config("the check needs a non-empty grid and at least one permutation".into()));
    }
    let x = p.sample(group_size, &mut rng_for(seed, &[domain::DATA, 0]))?;
    let y = q.sample(group_size, &mut rng_for(seed, &[domain::DATA, 1]))?;
    let mut rng = rng_for(seed, &[domain::PERMUTATION]);
    let root = (group_size as f64).sqrt();
    let mut law = (0..permutations)
        .map(|_| interim_difference(&x, &y, &SignClass::random(group_size, &mut rng)).map(|t| t / root))
        .collect::<Result<Vec<f64>>>()?;
    law.sort_by(f64::total_cmp);
    let phi = standard_normal();
    let distance = grid
        .iter()
        .map(|&t| {
            let below = law.partition_point(|&v| v <= t) as f64 / permutations as f64;
            (below - phi.cdf(t / tau)).abs()
        })
        .fold(0.0, f64::max);
    Ok(CdfCheck { tau, distance })
}

/// `B_{N,1}/√N` of a one-interim two-agent test on one drawn data set.
pub fn scaled_first_boundary(
    p: &DistributionSpec,
    q: &DistributionSpec,
    group_size: usize,
    alpha: f64,
    permutations: usize,
    seed: u64,
) -> Result<f64> {
    let config = TestConfig::new(group_size, 1)
        .with_alpha(alpha)
        .with_permutations(permutations)
        .with_seed(seed);
    let mut test = AdaStop::new(config, vec!["P".into(), "Q".into()])?;
    let x = p.sample(group_size, &mut rng_for(seed, &[domain::DATA, 0]))?;
    let y = q.sample(group_size, &mut rng_for(seed, &[domain::DATA, 1]))?;
    test.interim_step(vec![Some(x), Some(y)])?;
    Ok(test.ledger().entries[0].reject / (group_size as f64).sqrt())
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..points)
            .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}
