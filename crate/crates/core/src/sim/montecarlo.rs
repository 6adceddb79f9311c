use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_full_test, TestConfig, TestOutcome};
use crate::error::{Error, Result};
use crate::graph::{Comparison, ComparisonGraph};
use crate::rng::{derive_seed, domain, rng_for};
use crate::sim::distribution::DistributionSpec;
use crate::store::Batch;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub label: String,
    pub dist: DistributionSpec,
}

impl AgentSpec {
    pub fn new(label: impl Into<String>, dist: DistributionSpec) -> Self {
        Self {
            label: label.into(),
            dist,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub agents: Vec<AgentSpec>,
    /// Base test configuration; its seed is the base seed of the study.
    pub test: TestConfig,
    /// `M`, number of independent full tests.
    pub replications: usize,
    /// Defaults to every pair.
    pub comparisons: Option<Vec<Comparison>>,
}

const MEAN_TOLERANCE: f64 = 1e-12;

impl ScenarioConfig {
    pub fn new(agents: Vec<AgentSpec>, test: TestConfig, replications: usize) -> Self {
        Self {
            agents,
            test,
            replications,
            comparisons: None,
        }
    }

    pub fn with_comparisons(mut self, comparisons: Vec<Comparison>) -> Self {
        self.comparisons = Some(comparisons);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Scenario("replication count M must be at least 1".into()));
        }
        if self.agents.len() < 2 {
            return Err(Error::Scenario("a scenario needs at least two agents".into()));
        }
        for a in &self.agents {
            a.dist
                .validate()
                .map_err(|e| Error::Scenario(format!("agent `{}`: {e}", a.label)))?;
        }
        self.test.validate()?;
        self.graph().map(|_| ())
    }

    pub fn graph(&self) -> Result<ComparisonGraph> {
        match &self.comparisons {
            Some(c) => ComparisonGraph::new(c.clone(), self.agents.len()),
            None => ComparisonGraph::all_pairs(self.agents.len()),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        self.agents.iter().map(|a| a.label.clone()).collect()
    }

    /// `I`: comparisons between agents with identical distributions.
    pub fn true_hypotheses(&self) -> Result<Vec<bool>> {
        Ok(self
            .graph()?
            .comparisons()
            .iter()
            .map(|c| self.agents[c.first].dist == self.agents[c.second].dist)
            .collect())
    }

    /// `I_μ`: comparisons between agents with equal means.
    pub fn mean_hypotheses(&self) -> Result<Vec<bool>> {
        Ok(self
            .graph()?
            .comparisons()
            .iter()
            .map(|c| (self.agents[c.first].dist.mean() - self.agents[c.second].dist.mean()).abs() <= MEAN_TOLERANCE)
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRate {
    pub first: String,
    pub second: String,
    pub rate: f64,
    pub stderr: f64,
    /// Mean of `N ×` the interim at which the comparison was decided.
    pub mean_seeds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FweEstimate {
    pub rate: f64,
    pub stderr: f64,
    /// Size of the true-hypothesis set the estimate refers to.
    pub hypotheses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedUsage {
    pub agent: String,
    pub mean: f64,
    pub median: f64,
    pub q90: f64,
    pub max: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub replications: usize,
    pub comparisons: Vec<ComparisonRate>,
    /// Against identical-distribution pairs; `None` when there are none.
    pub fwe_distribution: Option<FweEstimate>,
    /// Against equal-mean pairs; `None` when there are none.
    pub fwe_mean: Option<FweEstimate>,
    pub seeds: Vec<SeedUsage>,
}

pub(crate) fn binomial_stderr(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Sorted-sample quantile with linear interpolation.
pub(crate) fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl MonteCarloReport {
    pub fn csv_header() -> &'static str {
        "comparison,rate,stderr,mean_seeds"
    }

    /// One row per comparison followed by the FWE rows. `mean_seeds` of an
    /// FWE row is the mean number of seeds used per agent.
    pub fn csv_rows(&self) -> Vec<String> {
        let mut rows: Vec<String> = self
            .comparisons
            .iter()
            .map(|c| format!("{} vs {},{},{},{}", c.first, c.second, c.rate, c.stderr, c.mean_seeds))
            .collect();
        let per_agent = self.seeds.iter().map(|s| s.mean).sum::<f64>() / self.seeds.len() as f64;
        for (name, est) in [("fwe_distribution", &self.fwe_distribution), ("fwe_mean", &self.fwe_mean)] {
            if let Some(e) = est {
                rows.push(format!("{name},{},{},{per_agent}", e.rate, e.stderr));
            }
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::csv_header());
        out.push('\n');
        for r in self.csv_rows() {
            out.push_str(&r);
            out.push('\n');
        }
        out
    }
}

/// Aggregated per-replication outcomes, reusable by other drivers.
pub(crate) fn summarise(
    labels: &[String],
    graph: &ComparisonGraph,
    group_size: usize,
    outcomes: &[TestOutcome],
    truth: &[bool],
    truth_mean: &[bool],
) -> MonteCarloReport {
    let m = outcomes.len();
    let comparisons = graph
        .comparisons()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let hits = outcomes.iter().filter(|o| o.rejected()[j]).count();
            let rate = hits as f64 / m as f64;
            let seeds = outcomes
                .iter()
                .map(|o| (o.graph.status(j).decided_at().unwrap_or(o.interims_run) * group_size) as f64)
                .sum::<f64>();
            ComparisonRate {
                first: labels[c.first].clone(),
                second: labels[c.second].clone(),
                rate,
                stderr: binomial_stderr(rate, m),
                mean_seeds: seeds / m as f64,
            }
        })
        .collect();
    let fwe = |set: &[bool]| {
        let hypotheses = set.iter().filter(|&&t| t).count();
        (hypotheses > 0).then(|| {
            let hits = outcomes
                .iter()
                .filter(|o| o.rejected().iter().zip(set).any(|(&r, &t)| r && t))
                .count();
            let rate = hits as f64 / m as f64;
            FweEstimate {
                rate,
                stderr: binomial_stderr(rate, m),
                hypotheses,
            }
        })
    };
    let seeds = labels
        .iter()
        .enumerate()
        .map(|(a, label)| {
            let mut used: Vec<f64> = outcomes.iter().map(|o| o.seeds_used[a] as f64).collect();
            used.sort_by(f64::total_cmp);
            SeedUsage {
                agent: label.clone(),
                mean: used.iter().sum::<f64>() / m as f64,
                median: quantile(&used, 0.5),
                q90: quantile(&used, 0.9),
                max: used.last().copied().unwrap_or(0.0) as usize,
            }
        })
        .collect();
    MonteCarloReport {
        replications: m,
        comparisons,
        fwe_distribution: fwe(truth),
        fwe_mean: fwe(truth_mean),
        seeds,
    }
}

/// Runs replication `r` of a scenario. The permutation seed and every data
/// draw are functions of `(base seed, r)` only.
pub fn run_replication(config: &ScenarioConfig, r: usize) -> Result<TestOutcome> {
    let rep_seed = derive_seed(config.test.seed, &[domain::REPLICATION, r as u64]);
    let test = config.test.clone().with_seed(derive_seed(rep_seed, &[domain::PERMUTATION]));
    let n = test.group_size;
    let mut source = |interim: usize, needed: &[bool]| -> Result<Batch> {
        needed
            .iter()
            .enumerate()
            .map(|(a, &need)| {
                need.then(|| {
                    let mut rng = rng_for(rep_seed, &[domain::DATA, a as u64, interim as u64]);
                    config.agents[a].dist.sample(n, &mut rng)
                })
                .transpose()
            })
            .collect()
    };
    run_full_test(test, config.labels(), config.comparisons.clone(), &mut source)
}

/// Empirical rejection rates, FWE and seed usage over `M` replications.
pub fn estimate_fwe_and_power(config: &ScenarioConfig) -> Result<MonteCarloReport> {
    config.validate()?;
    let outcomes = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarise(
        &config.labels(),
        &config.graph()?,
        config.test.group_size,
        &outcomes,
        &config.true_hypotheses()?,
        &config.mean_hypotheses()?,
    ))
}
