//! Non-sequential step-down permutation test over a set of comparisons.
//!
//! Threshold of the max-statistic law over the pool at level `α`; reject
//! the most extreme comparison, shrink the set, recompute, until the
//! observed max no longer exceeds the threshold.

use crate::boundary::{allocate_budget, reject_boundary};
use crate::error::{Error, Result};
use crate::graph::Comparison;
use crate::perm::{PermutationPool, PermutationSequence};
use crate::stats::{max_statistic, pair_statistic};
use crate::store::EvaluationStore;

/// Returns, per comparison, whether it is rejected. `pool` must be built
/// for a single interim.
pub fn step_down_test(
    store: &EvaluationStore,
    comparisons: &[Comparison],
    pool: &PermutationPool,
    alpha: f64,
) -> Result<Vec<bool>> {
    if pool.interim() != 1 {
        return Err(Error::Config("step-down test runs on a one-interim pool".into()));
    }
    if comparisons.is_empty() {
        return Err(Error::EmptyComparisonSet);
    }
    let sequences: Vec<PermutationSequence> = pool.sequences().collect();
    let budget = allocate_budget(1, alpha, 1, sequences.len(), 0.0);
    let identity = &sequences[0];
    let mut remaining: Vec<usize> = (0..comparisons.len()).collect();
    let mut rejected = vec![false; comparisons.len()];
    while !remaining.is_empty() {
        let set: Vec<Comparison> = remaining.iter().map(|&j| comparisons[j]).collect();
        let law = sequences
            .iter()
            .map(|s| max_statistic(store, &set, s))
            .collect::<Result<Vec<f64>>>()?;
        let threshold = reject_boundary(&law, budget);
        if max_statistic(store, &set, identity)? <= threshold {
            break;
        }
        let mut best = remaining[0];
        let mut best_value = pair_statistic(store, comparisons[best], identity)?;
        for &j in &remaining[1..] {
            let v = pair_statistic(store, comparisons[j], identity)?;
            if v > best_value {
                best = j;
                best_value = v;
            }
        }
        rejected[best] = true;
        remaining.retain(|&j| j != best);
    }
    Ok(rejected)
}
