//! Permutation statistics.
//!
//! For a comparison `(a, b)` the scores of interim `i` are concatenated as
//! `z = (a₁..a_N, b₁..b_N)`. Under sign class `S` the interim contributes
//! `Σ_{n∈S} z_n − Σ_{n∉S} z_n`; the statistic at interim `k` is the
//! absolute value of the sum of contributions over `1..=k`.
//!
//! Contributions are split per agent, `D_a(S ∩ first half) + D_b(S ∩
//! second half)`, so one subset-sum table per agent serves every comparison
//! the agent is part of.

use crate::error::{Error, Result};
use crate::graph::Comparison;
use crate::perm::{PermutationSequence, SignClass};
use crate::store::EvaluationStore;

/// Largest group size for which subset-sum tables are built.
pub const TABLE_MAX_GROUP: usize = 12;

/// `Σ_{i∈mask} x_i − Σ_{i∉mask} x_i`, both sums accumulated in index order.
#[inline]
fn signed_half(scores: &[f64], selected: impl Fn(usize) -> bool) -> f64 {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for (i, &x) in scores.iter().enumerate() {
        if selected(i) {
            plus += x;
        } else {
            minus += x;
        }
    }
    plus - minus
}

/// Precomputed signed half-sums of one agent's interim scores.
#[derive(Clone, Debug)]
pub(crate) enum AgentKernel {
    Table(Vec<f64>),
    Direct(Vec<f64>),
}

impl AgentKernel {
    pub(crate) fn new(scores: &[f64]) -> Self {
        let n = scores.len();
        if n <= TABLE_MAX_GROUP {
            let table = (0..1usize << n)
                .map(|mask| signed_half(scores, |i| mask >> i & 1 == 1))
                .collect();
            AgentKernel::Table(table)
        } else {
            AgentKernel::Direct(scores.to_vec())
        }
    }

    /// Signed half-sum for the half of `class` starting at `offset`.
    #[inline]
    pub(crate) fn half(&self, class: &SignClass, second: bool) -> f64 {
        match self {
            AgentKernel::Table(table) => {
                let (lo, hi) = class.half_masks().expect("table kernels have N <= 32");
                table[if second { hi } else { lo } as usize]
            }
            AgentKernel::Direct(scores) => {
                let offset = if second { scores.len() } else { 0 };
                signed_half(scores, |i| class.contains(offset + i))
            }
        }
    }
}

/// Signed contribution of one interim.
pub fn interim_difference(first: &[f64], second: &[f64], class: &SignClass) -> Result<f64> {
    let n = class.group_size();
    if first.len() != n || second.len() != n {
        return Err(Error::LengthMismatch(format!(
            "groups of {} and {} scores under a class of size {n}",
            first.len(),
            second.len()
        )));
    }
    Ok(signed_half(first, |i| class.contains(i)) + signed_half(second, |i| class.contains(n + i)))
}

fn comparison_scores(
    store: &EvaluationStore,
    comparison: Comparison,
    interim: usize,
) -> Result<(&[f64], &[f64])> {
    let get = |agent: usize| {
        store.scores(agent, interim).ok_or_else(|| Error::MissingBatch {
            agent: store.agents().get(agent).cloned().unwrap_or_else(|| agent.to_string()),
            interim,
        })
    };
    Ok((get(comparison.first)?, get(comparison.second)?))
}

/// Signed accumulated difference `Σ_{i≤k} (…)` before the absolute value.
pub fn signed_pair_sum(
    store: &EvaluationStore,
    comparison: Comparison,
    sequence: &PermutationSequence,
) -> Result<f64> {
    if sequence.len() > store.interim() {
        return Err(Error::LengthMismatch(format!(
            "sequence of length {} but only {} interims stored",
            sequence.len(),
            store.interim()
        )));
    }
    let mut acc = 0.0;
    for (i, class) in sequence.classes.iter().enumerate() {
        let (a, b) = comparison_scores(store, comparison, i + 1)?;
        acc += interim_difference(a, b, class)?;
    }
    Ok(acc)
}

/// `T_{N,k}^{(j)}(σ_{1:k})`.
pub fn pair_statistic(
    store: &EvaluationStore,
    comparison: Comparison,
    sequence: &PermutationSequence,
) -> Result<f64> {
    signed_pair_sum(store, comparison, sequence).map(f64::abs)
}

fn fold_statistic(
    store: &EvaluationStore,
    set: &[Comparison],
    sequence: &PermutationSequence,
    pick: fn(f64, f64) -> f64,
) -> Result<f64> {
    let (first, rest) = set.split_first().ok_or(Error::EmptyComparisonSet)?;
    rest.iter().try_fold(pair_statistic(store, *first, sequence)?, |acc, &c| {
        Ok(pick(acc, pair_statistic(store, c, sequence)?))
    })
}

/// `max_{j∈C} T_{N,k}^{(j)}`.
pub fn max_statistic(
    store: &EvaluationStore,
    set: &[Comparison],
    sequence: &PermutationSequence,
) -> Result<f64> {
    fold_statistic(store, set, sequence, f64::max)
}

/// `min_{j∈C} T_{N,k}^{(j)}`.
pub fn min_statistic(
    store: &EvaluationStore,
    set: &[Comparison],
    sequence: &PermutationSequence,
) -> Result<f64> {
    fold_statistic(store, set, sequence, f64::min)
}
