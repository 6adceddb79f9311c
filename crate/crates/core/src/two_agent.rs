//! Adaptive stopping for exactly two agents.
//!
//! The single-comparison case written out on its own: no step-down loop,
//! one boundary per interim, stop at the first rejection. With the same
//! seed it draws the same permutation pool as [`crate::engine::AdaStop`], so
//! the two must agree decision for decision.

use crate::boundary::{allocate_budget, reject_boundary, Budget};
use crate::engine::TestConfig;
use crate::error::{Error, Result};
use crate::perm::PermutationPool;
use crate::rng::InterimStream;
use crate::stats::interim_difference;

fn select(row: &[f64], keep: &[bool]) -> Vec<f64> {
    row.iter().zip(keep).filter(|(_, &k)| k).map(|(&v, _)| v).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoAgentDecision {
    Reject { interim: usize, first_larger: bool },
    Accept,
}

#[derive(Clone, Debug)]
pub struct TwoAgentTest {
    config: TestConfig,
    pool: PermutationPool,
    signed: Vec<f64>,
    history: Vec<Vec<f64>>,
    boundaries: Vec<f64>,
    budgets: Vec<Budget>,
    spent: f64,
    decision: Option<TwoAgentDecision>,
}

impl TwoAgentTest {
    pub fn new(config: TestConfig) -> Result<Self> {
        config.validate()?;
        if config.early_accept() {
            return Err(Error::Config("the two-agent procedure has no early accept".into()));
        }
        let pool = PermutationPool::new(config.group_size, config.permutations, config.enumeration_cap)?;
        Ok(Self {
            config,
            pool,
            signed: Vec::new(),
            history: Vec::new(),
            boundaries: Vec::new(),
            budgets: Vec::new(),
            spent: 0.0,
            decision: None,
        })
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn decision(&self) -> Option<TwoAgentDecision> {
        self.decision
    }

    /// Feeds interim `k` and returns the decision once the test stops.
    pub fn step(&mut self, first: &[f64], second: &[f64]) -> Result<Option<TwoAgentDecision>> {
        if let Some(d) = self.decision {
            return Ok(Some(d));
        }
        let k = self.history.len() + 1;
        self.pool.extend(&InterimStream::new(self.config.seed, k))?;
        if let Some(parents) = self.pool.parents() {
            self.signed = parents.iter().map(|&p| self.signed[p]).collect();
            for row in &mut self.history {
                *row = parents.iter().map(|&p| row[p]).collect();
            }
        }
        let m = self.pool.len();
        self.signed.resize(m, 0.0);
        for (s, class) in self.pool.layer(k).iter().enumerate() {
            self.signed[s] += interim_difference(first, second, class)?;
        }
        let stats: Vec<f64> = self.signed.iter().map(|v| v.abs()).collect();

        // earlier boundaries are rebuilt on the current pool
        let mut inside = vec![true; m];
        for (row, budget) in self.history.iter().zip(&self.budgets) {
            let bound = reject_boundary(&select(row, &inside), budget.rescaled(m));
            for (keep, &v) in inside.iter_mut().zip(row) {
                *keep = *keep && v <= bound;
            }
        }
        let budget = allocate_budget(k, self.config.alpha, self.config.interims, m, self.spent);
        self.spent += budget.quantile();
        let boundary = reject_boundary(&select(&stats, &inside), budget);
        self.budgets.push(budget);
        self.boundaries.push(boundary);
        self.history.push(stats);

        if self.history[k - 1][0] > boundary {
            self.decision = Some(TwoAgentDecision::Reject {
                interim: k,
                first_larger: self.signed[0] > 0.0,
            });
        } else if k == self.config.interims {
            self.decision = Some(TwoAgentDecision::Accept);
        }
        Ok(self.decision)
    }
}
