use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_full_test, TestConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, domain, rng_for};
use crate::sim::montecarlo::binomial_stderr;
use crate::store::Batch;

/// Two finite score populations resampled with replacement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTableConfig {
    pub labels: [String; 2],
    pub populations: [Vec<f64>; 2],
    pub group_sizes: Vec<usize>,
    pub interims: Vec<usize>,
    pub alpha: f64,
    pub permutations: usize,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub group_size: usize,
    pub interims: usize,
    pub power: f64,
    pub stderr: f64,
    /// Mean number of scores used per agent.
    pub mean_seeds: f64,
}

impl PowerCell {
    pub fn csv_header() -> &'static str {
        "n,k,power,stderr,mean_seeds"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.group_size, self.interims, self.power, self.stderr, self.mean_seeds
        )
    }
}

fn cell(cfg: &PowerTableConfig, n: usize, k: usize) -> Result<PowerCell> {
    for (label, pop) in cfg.labels.iter().zip(&cfg.populations) {
        if pop.len() < n * k {
            return Err(Error::InsufficientPopulation(format!(
                "agent `{label}` has {} scores, N·K = {} are needed",
                pop.len(),
                n * k
            )));
        }
    }
    let base = derive_seed(cfg.seed, &[domain::BOOTSTRAP, n as u64, k as u64]);
    let runs = (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            let rep = derive_seed(base, &[domain::REPLICATION, r as u64]);
            let test = TestConfig::new(n, k)
                .with_alpha(cfg.alpha)
                .with_permutations(cfg.permutations)
                .with_seed(derive_seed(rep, &[domain::PERMUTATION]));
            let mut source = |interim: usize, needed: &[bool]| -> Result<Batch> {
                Ok(needed
                    .iter()
                    .enumerate()
                    .map(|(a, &need)| {
                        need.then(|| {
                            let pop = &cfg.populations[a];
                            let mut rng = rng_for(rep, &[domain::DATA, a as u64, interim as u64]);
                            (0..n).map(|_| pop[rng.random_range(0..pop.len())]).collect()
                        })
                    })
                    .collect())
            };
            let out = run_full_test(test, cfg.labels.to_vec(), None, &mut source)?;
            let seeds = out.seeds_used.iter().sum::<usize>() as f64 / 2.0;
            Ok((out.rejected()[0], seeds))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = runs.len() as f64;
    let power = runs.iter().filter(|r| r.0).count() as f64 / m;
    Ok(PowerCell {
        group_size: n,
        interims: k,
        power,
        stderr: binomial_stderr(power, runs.len()),
        mean_seeds: runs.iter().map(|r| r.1).sum::<f64>() / m,
    })
}

/// Empirical power and mean seeds for every `(N, K)` in the grid.
pub fn power_table(cfg: &PowerTableConfig) -> Result<Vec<PowerCell>> {
    if cfg.replications == 0 {
        return Err(Error::Scenario("replication count M must be at least 1".into()));
    }
    if cfg.group_sizes.is_empty() || cfg.interims.is_empty() {
        return Err(Error::Scenario("power table needs at least one N and one K".into()));
    }
    if cfg.labels[0] == cfg.labels[1] {
        return Err(Error::DuplicateAgent(cfg.labels[0].clone()));
    }
    for (label, pop) in cfg.labels.iter().zip(&cfg.populations) {
        if let Some(v) = pop.iter().find(|v| !v.is_finite()) {
            return Err(Error::Scenario(format!("agent `{label}` has a non-finite score {v}")));
        }
    }
    let mut table = Vec::new();
    for &n in &cfg.group_sizes {
        for &k in &cfg.interims {
            table.push(cell(cfg, n, k)?);
        }
    }
    Ok(table)
}
