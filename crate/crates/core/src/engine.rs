//! The multi-agent group-sequential test.
//!
//! Each interim appends one batch of `N` scores per agent still in play,
//! extends the permutation pool, and runs the step-down loop: reject the
//! comparison with the largest observed statistic while the max-statistic
//! over the undecided set strictly exceeds its boundary, and with early
//! accept enabled, accept the smallest one while the min-statistic falls
//! strictly below the accept boundary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{accept_boundary, allocate_budget, reject_boundary, Budget, BoundaryLedger, InterimBoundaries};
use crate::error::{Error, Result};
use crate::graph::{AcceptReason, Comparison, ComparisonGraph, Status};
use crate::perm::{count_unique_classes, PermutationPool, DEFAULT_ENUMERATION_CAP, DEFAULT_PERMUTATIONS};
use crate::rng::InterimStream;
use crate::stats::AgentKernel;
use crate::store::{Batch, EvaluationStore};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    /// `N`, evaluations per agent per interim.
    pub group_size: usize,
    /// `K`, maximum number of interims.
    pub interims: usize,
    pub alpha: f64,
    /// Early-accept level; `0` disables early accept.
    #[serde(default)]
    pub beta: f64,
    /// `m`, the permutation budget per interim.
    pub permutations: usize,
    pub seed: u64,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

impl TestConfig {
    pub fn new(group_size: usize, interims: usize) -> Self {
        Self {
            group_size,
            interims,
            alpha: DEFAULT_ALPHA,
            beta: 0.0,
            permutations: DEFAULT_PERMUTATIONS,
            seed: 0,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
        }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_permutations(mut self, m: usize) -> Self {
        self.permutations = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.group_size == 0 {
            return Err(Error::Config("group size N must be at least 1".into()));
        }
        if self.interims == 0 {
            return Err(Error::Config("number of interims K must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(0.0..1.0).contains(&self.beta) {
            return Err(Error::Config(format!("beta must lie in [0, 1), got {}", self.beta)));
        }
        if self.permutations == 0 {
            return Err(Error::Config("permutation count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn early_accept(&self) -> bool {
        self.beta > 0.0
    }

    /// `m_k` for every interim, mirroring the pool's exact/monte-carlo rule.
    pub fn pool_sizes(&self) -> Vec<usize> {
        let limit = (self.permutations as u64).min(self.enumeration_cap);
        let mut exact = true;
        (1..=self.interims)
            .map(|k| {
                let unique = count_unique_classes(self.group_size, k);
                exact &= unique <= limit;
                if exact {
                    unique as usize
                } else {
                    self.permutations
                }
            })
            .collect()
    }

    /// Reject budgets `q̄_k` planned over all interims.
    pub fn planned_budgets(&self) -> Vec<Budget> {
        let mut spent = 0.0;
        self.pool_sizes()
            .into_iter()
            .enumerate()
            .map(|(i, m)| {
                let b = allocate_budget(i + 1, self.alpha, self.interims, m, spent);
                spent += b.quantile();
                b
            })
            .collect()
    }

    /// True when no interim has any reject budget, so nothing can ever be
    /// rejected.
    pub fn has_zero_power(&self) -> bool {
        self.planned_budgets().iter().all(|b| b.count == 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Reject,
    EarlyAccept,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionAction {
    pub comparison: usize,
    pub action: Action,
    pub statistic: f64,
    #[serde(with = "extended_f64")]
    pub boundary: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterimDecisionReport {
    pub interim: usize,
    pub actions: Vec<DecisionAction>,
    pub undecided: Vec<usize>,
    /// Comparisons accepted because the budget `K` ran out.
    pub accepted_at_end: Vec<usize>,
    pub stopped: bool,
}

/// Running max or min over the undecided set, one value per sequence.
struct Extreme {
    values: Vec<f64>,
    arg: Vec<u32>,
    max: bool,
}

impl Extreme {
    fn new(rows: &[Vec<f64>], active: &[usize], len: usize, max: bool) -> Self {
        let mut e = Self {
            values: vec![0.0; len],
            arg: vec![0; len],
            max,
        };
        for s in 0..len {
            e.refresh(rows, active, s);
        }
        e
    }

    #[inline]
    fn refresh(&mut self, rows: &[Vec<f64>], active: &[usize], s: usize) {
        let mut best = if self.max { f64::NEG_INFINITY } else { f64::INFINITY };
        let mut arg = 0;
        for &j in active {
            let v = rows[j][s];
            if (self.max && v > best) || (!self.max && v < best) {
                best = v;
                arg = j;
            }
        }
        self.values[s] = best;
        self.arg[s] = arg as u32;
    }

    fn masked(&self, mask: &[bool]) -> Vec<f64> {
        self.values.iter().zip(mask).filter(|(_, &keep)| keep).map(|(&v, _)| v).collect()
    }

    fn remove(&mut self, rows: &[Vec<f64>], active: &[usize], removed: usize) {
        for s in 0..self.values.len() {
            if self.arg[s] as usize == removed {
                self.refresh(rows, active, s);
            }
        }
    }
}

/// In-memory state of one running test.
#[derive(Clone, Debug)]
pub struct AdaStop {
    config: TestConfig,
    store: EvaluationStore,
    graph: ComparisonGraph,
    ledger: BoundaryLedger,
    pool: PermutationPool,
    // signed accumulated sums, [comparison][sequence]; empty once decided
    cumulative: Vec<Vec<f64>>,
    // absolute statistics, [interim - 1][comparison][sequence]
    history: Vec<Vec<Vec<f64>>>,
    reports: Vec<InterimDecisionReport>,
    stopped: bool,
}

impl AdaStop {
    /// Starts a test comparing every pair of agents.
    pub fn new(config: TestConfig, agents: Vec<String>) -> Result<Self> {
        let graph = ComparisonGraph::all_pairs(agents.len())?;
        Self::with_graph(config, agents, graph)
    }

    pub fn with_comparisons(config: TestConfig, agents: Vec<String>, comparisons: Vec<Comparison>) -> Result<Self> {
        let graph = ComparisonGraph::new(comparisons, agents.len())?;
        Self::with_graph(config, agents, graph)
    }

    fn with_graph(config: TestConfig, agents: Vec<String>, graph: ComparisonGraph) -> Result<Self> {
        config.validate()?;
        let store = EvaluationStore::new(agents, config.group_size, config.interims)?;
        let pool = PermutationPool::new(config.group_size, config.permutations, config.enumeration_cap)?;
        let ledger = BoundaryLedger::new(config.alpha, config.beta, config.interims);
        Ok(Self {
            cumulative: vec![Vec::new(); graph.len()],
            config,
            store,
            graph,
            ledger,
            pool,
            history: Vec::new(),
            reports: Vec::new(),
            stopped: false,
        })
    }

    pub fn config(&self) -> &TestConfig {
        &self.config
    }

    pub fn store(&self) -> &EvaluationStore {
        &self.store
    }

    pub fn graph(&self) -> &ComparisonGraph {
        &self.graph
    }

    pub fn ledger(&self) -> &BoundaryLedger {
        &self.ledger
    }

    pub fn pool(&self) -> &PermutationPool {
        &self.pool
    }

    pub fn reports(&self) -> &[InterimDecisionReport] {
        &self.reports
    }

    pub fn interim(&self) -> usize {
        self.store.interim()
    }

    pub fn is_stopped(&self) -> bool {
        self.stopped
    }

    /// Agents whose scores the next interim needs.
    pub fn needed_agents(&self) -> Vec<bool> {
        self.graph.active_agents(self.store.agents().len())
    }

    /// Observed statistic `T(id)` of comparison `j` at the latest interim
    /// it was evaluated.
    pub fn observed_statistic(&self, j: usize) -> Option<f64> {
        self.history
            .iter()
            .rev()
            .find_map(|rows| rows[j].first().map(|v| v.abs()))
    }

    /// Runs one interim on `batch` (indexed by agent).
    pub fn interim_step(&mut self, batch: Batch) -> Result<InterimDecisionReport> {
        if self.stopped {
            return Err(Error::AlreadyStopped(self.interim()));
        }
        let k = self.interim() + 1;
        let needed = self.needed_agents();
        if batch.len() != needed.len() {
            return Err(Error::LengthMismatch(format!(
                "batch holds {} agents, test has {}",
                batch.len(),
                needed.len()
            )));
        }
        for (agent, need) in needed.iter().enumerate() {
            if *need && batch[agent].is_none() {
                return Err(Error::MissingBatch {
                    agent: self.store.agents()[agent].clone(),
                    interim: k,
                });
            }
        }
        self.store.push(batch)?;
        self.pool.extend(&InterimStream::new(self.config.seed, k))?;
        if let Some(parents) = self.pool.parents().map(<[usize]>::to_vec) {
            let gather = |row: &mut Vec<f64>| {
                if !row.is_empty() {
                    *row = parents.iter().map(|&p| row[p]).collect();
                }
            };
            self.cumulative.iter_mut().for_each(gather);
            self.history.iter_mut().flatten().for_each(gather);
        }

        let undecided = self.graph.undecided();
        self.accumulate(k, &undecided);
        let report = self.step_down(k, undecided);
        self.reports.push(report.clone());
        Ok(report)
    }

    fn accumulate(&mut self, k: usize, undecided: &[usize]) {
        let m = self.pool.len();
        let kernels: Vec<Option<AgentKernel>> = (0..self.store.agents().len())
            .map(|a| self.store.scores(a, k).map(AgentKernel::new))
            .collect();
        let layer = self.pool.layer(k);
        let comparisons = self.graph.comparisons();
        let mut rows = vec![Vec::new(); comparisons.len()];
        self.cumulative
            .par_iter_mut()
            .zip(rows.par_iter_mut())
            .enumerate()
            .filter(|(j, _)| undecided.binary_search(j).is_ok())
            .for_each(|(j, (cum, abs))| {
                let c = comparisons[j];
                let (ka, kb) = (
                    kernels[c.first].as_ref().expect("validated batch"),
                    kernels[c.second].as_ref().expect("validated batch"),
                );
                cum.resize(m, 0.0);
                for (s, class) in layer.iter().enumerate() {
                    cum[s] += ka.half(class, false) + kb.half(class, true);
                }
                *abs = cum.iter().map(|v| v.abs()).collect();
            });
        self.history.push(rows);
    }

    /// Survivor mask `Ŝ_k` for the current undecided set: the boundaries
    /// of every earlier interim are recomputed for this set, interim by
    /// interim, on the current pool.
    fn survivors(&self, k: usize, prev_max: &[Extreme], prev_min: &[Extreme]) -> Vec<bool> {
        let m = self.pool.len();
        let mut mask = vec![true; m];
        for (i, entry) in self.ledger.entries[..k - 1].iter().enumerate() {
            let reject = reject_boundary(&prev_max[i].masked(&mask), entry.reject_budget.rescaled(m));
            let accept = prev_min
                .get(i)
                .zip(entry.accept_budget)
                .map(|(e, b)| accept_boundary(&e.masked(&mask), b.rescaled(m)));
            for (s, keep) in mask.iter_mut().enumerate() {
                *keep = *keep
                    && prev_max[i].values[s] <= reject
                    && accept.is_none_or(|a| prev_min[i].values[s] >= a);
            }
        }
        mask
    }

    fn step_down(&mut self, k: usize, mut active: Vec<usize>) -> InterimDecisionReport {
        let m = self.pool.len();
        let early = self.config.early_accept();
        let reject_budget = allocate_budget(k, self.config.alpha, self.config.interims, m, self.ledger.reject_spent());
        let accept_budget =
            early.then(|| allocate_budget(k, self.config.beta, self.config.interims, m, self.ledger.accept_spent()));

        let current = &self.history[k - 1];
        let mut cur_max = Extreme::new(current, &active, m, true);
        let mut cur_min = early.then(|| Extreme::new(current, &active, m, false));
        let mut prev_max: Vec<Extreme> = self.history[..k - 1]
            .iter()
            .map(|rows| Extreme::new(rows, &active, m, true))
            .collect();
        let mut prev_min: Vec<Extreme> = if early {
            self.history[..k - 1]
                .iter()
                .map(|rows| Extreme::new(rows, &active, m, false))
                .collect()
        } else {
            Vec::new()
        };

        let mut actions = Vec::new();
        let mut last;
        loop {
            let mask = self.survivors(k, &prev_max, &prev_min);
            let b_reject = reject_boundary(&cur_max.masked(&mask), reject_budget);
            let b_accept = cur_min
                .as_ref()
                .zip(accept_budget)
                .map(|(e, b)| accept_boundary(&e.masked(&mask), b));
            let survivors = mask.iter().filter(|&&x| x).count();
            last = (b_reject, b_accept, survivors, mask);

            let current = &self.history[k - 1];
            let identity = |j: usize| current[j][0];
            let decided = if cur_max.values[0] > b_reject {
                let j = *active
                    .iter()
                    .reduce(|a, b| if identity(*b) > identity(*a) { b } else { a })
                    .expect("non-empty undecided set");
                let c = self.graph.comparison(j);
                let larger = if self.cumulative[j][0] > 0.0 { c.first } else { c.second };
                self.graph.decide(j, Status::Rejected { larger, interim: k });
                actions.push(DecisionAction {
                    comparison: j,
                    action: Action::Reject,
                    statistic: identity(j),
                    boundary: b_reject,
                });
                j
            } else if let Some(b) = b_accept.filter(|&b| cur_min.as_ref().is_some_and(|e| e.values[0] < b)) {
                let j = *active
                    .iter()
                    .reduce(|a, c| if identity(*c) < identity(*a) { c } else { a })
                    .expect("non-empty undecided set");
                self.graph.decide(
                    j,
                    Status::Accepted {
                        interim: k,
                        reason: AcceptReason::EarlyAccept,
                    },
                );
                actions.push(DecisionAction {
                    comparison: j,
                    action: Action::EarlyAccept,
                    statistic: identity(j),
                    boundary: b,
                });
                j
            } else {
                break;
            };

            active.retain(|&j| j != decided);
            self.cumulative[decided] = Vec::new();
            if active.is_empty() {
                break;
            }
            cur_max.remove(current, &active, decided);
            if let Some(e) = cur_min.as_mut() {
                e.remove(current, &active, decided);
            }
            for (rows, e) in self.history.iter().zip(prev_max.iter_mut()) {
                e.remove(rows, &active, decided);
            }
            for (rows, e) in self.history.iter().zip(prev_min.iter_mut()) {
                e.remove(rows, &active, decided);
            }
        }

        let (reject, accept, survivors, mut mask) = last;
        if !active.is_empty() {
            for (s, keep) in mask.iter_mut().enumerate() {
                *keep = *keep
                    && cur_max.values[s] <= reject
                    && cur_min.as_ref().zip(accept).is_none_or(|(e, a)| e.values[s] >= a);
            }
        }
        self.pool.set_survivors(mask);
        self.ledger.entries.push(InterimBoundaries {
            interim: k,
            reject,
            accept,
            reject_budget,
            accept_budget,
            survivors,
        });

        let mut accepted_at_end = Vec::new();
        if active.is_empty() {
            self.stopped = true;
        } else if k == self.config.interims {
            for &j in &active {
                self.graph.decide(
                    j,
                    Status::Accepted {
                        interim: k,
                        reason: AcceptReason::EndOfBudget,
                    },
                );
                self.cumulative[j] = Vec::new();
            }
            accepted_at_end = std::mem::take(&mut active);
            self.stopped = true;
        }
        InterimDecisionReport {
            interim: k,
            actions,
            undecided: active,
            accepted_at_end,
            stopped: self.stopped,
        }
    }

    pub fn outcome(&self) -> TestOutcome {
        TestOutcome {
            graph: self.graph.clone(),
            ledger: self.ledger.clone(),
            reports: self.reports.clone(),
            seeds_used: self.store.seeds_used(),
            interims_run: self.interim(),
        }
    }
}

/// Supplies the scores of one interim for the agents still in play.
pub trait BatchSource {
    /// `needed[a]` tells whether agent `a` must be evaluated; entries for
    /// agents that are not needed should be `None`.
    fn next_batch(&mut self, interim: usize, needed: &[bool]) -> Result<Batch>;
}

impl<F> BatchSource for F
where
    F: FnMut(usize, &[bool]) -> Result<Batch>,
{
    fn next_batch(&mut self, interim: usize, needed: &[bool]) -> Result<Batch> {
        self(interim, needed)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TestOutcome {
    pub graph: ComparisonGraph,
    pub ledger: BoundaryLedger,
    pub reports: Vec<InterimDecisionReport>,
    pub seeds_used: Vec<usize>,
    pub interims_run: usize,
}

impl TestOutcome {
    pub fn rejected(&self) -> Vec<bool> {
        self.graph
            .statuses()
            .iter()
            .map(|s| matches!(s, Status::Rejected { .. }))
            .collect()
    }
}

/// Drives a test to completion, requesting batches only for agents that
/// still take part in an undecided comparison.
pub fn run_full_test(
    config: TestConfig,
    agents: Vec<String>,
    comparisons: Option<Vec<Comparison>>,
    source: &mut impl BatchSource,
) -> Result<TestOutcome> {
    let mut test = match comparisons {
        Some(c) => AdaStop::with_comparisons(config, agents, c)?,
        None => AdaStop::new(config, agents)?,
    };
    while !test.is_stopped() {
        let needed = test.needed_agents();
        let batch = source.next_batch(test.interim() + 1, &needed)?;
        let batch = batch
            .into_iter()
            .zip(&needed)
            .map(|(b, &n)| if n { b } else { None })
            .collect();
        test.interim_step(batch)?;
    }
    Ok(test.outcome())
}

mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Named(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(x) => Ok(x),
            Repr::Named(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Named(s) => Err(serde::de::Error::custom(format!("bad boundary `{s}`"))),
        }
    }
}
