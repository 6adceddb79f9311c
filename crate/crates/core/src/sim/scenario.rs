//! Scenario files.
//!
//! A scenario is a TOML document. Top-level keys configure the test and
//! the study:
//!
//! ```toml
//! group_size = 5        # N
//! interims = 5          # K
//! alpha = 0.05
//! beta = 0.0            # early accept level, 0 disables it
//! permutations = 10000  # m
//! replications = 5000   # M
//! seed = 1
//! delta = [0.0, 0.5]    # optional sweep over Δ
//! comparisons = [["A1", "A2"]]  # optional, default all pairs
//!
//! [[agents]]
//! label = "A1"
//! dist = { kind = "normal", mean = 0.0, var = 0.01 }
//!
//! [[agents]]
//! label = "A2"
//! dist = { kind = "normal-mixture", mean1 = { delta = -0.5 }, var1 = 0.01, mean2 = { delta = 0.5 }, var2 = 0.01 }
//! ```
//!
//! A distribution parameter is a number or `{ delta = a, offset = b }`,
//! meaning `a·Δ + b` at each sweep value. Distribution kinds are `normal`
//! (`mean`, `var`), `student` (`mean`, `dof`), `normal-mixture` and
//! `student-mixture` (`mean1`, `var1`/`dof1`, `mean2`, `var2`/`dof2`).
//!
//! A `[power_table]` table replaces the agents with two score populations
//! read from a CSV file (path relative to the scenario file) and a grid of
//! `group_sizes` and `interims`.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::engine::TestConfig;
use crate::error::{Error, Result};
use crate::graph::Comparison;
use crate::perm::{DEFAULT_ENUMERATION_CAP, DEFAULT_PERMUTATIONS};
use crate::sim::distribution::Family;
use crate::sim::montecarlo::{AgentSpec, ScenarioConfig};
use crate::sim::power::PowerTableConfig;

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Fixed(f64),
    Linear {
        delta: f64,
        #[serde(default)]
        offset: f64,
    },
}

impl Param {
    pub fn at(&self, delta: f64) -> f64 {
        match *self {
            Param::Fixed(v) => v,
            Param::Linear { delta: a, offset } => a * delta + offset,
        }
    }

    fn depends_on_delta(&self) -> bool {
        matches!(self, Param::Linear { .. })
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentTemplate {
    label: String,
    dist: Family<Param>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PowerTableSection {
    populations: PathBuf,
    group_sizes: Vec<usize>,
    interims: Vec<usize>,
}

fn default_alpha() -> f64 {
    crate::engine::DEFAULT_ALPHA
}

fn default_permutations() -> usize {
    DEFAULT_PERMUTATIONS
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    group_size: Option<usize>,
    interims: Option<usize>,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default)]
    beta: f64,
    #[serde(default = "default_permutations")]
    permutations: usize,
    replications: usize,
    #[serde(default)]
    seed: u64,
    delta: Option<Vec<f64>>,
    #[serde(default)]
    agents: Vec<AgentTemplate>,
    comparisons: Option<Vec<[String; 2]>>,
    power_table: Option<PowerTableSection>,
}

/// One point of a sweep; `delta` is `None` when the file has no sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub delta: Option<f64>,
    pub config: ScenarioConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Sweep(Vec<SweepPoint>),
    PowerTable(PowerTableConfig),
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
    match &file.power_table {
        Some(section) => power_scenario(&file, section, base_dir).map(Scenario::PowerTable),
        None => sweep_scenario(&file).map(Scenario::Sweep),
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text, path.parent().unwrap_or(Path::new(".")))
}

fn sweep_scenario(file: &ScenarioFile) -> Result<Vec<SweepPoint>> {
    let (Some(n), Some(k)) = (file.group_size, file.interims) else {
        return Err(Error::Scenario("`group_size` and `interims` are required".into()));
    };
    let test = TestConfig {
        group_size: n,
        interims: k,
        alpha: file.alpha,
        beta: file.beta,
        permutations: file.permutations,
        seed: file.seed,
        enumeration_cap: DEFAULT_ENUMERATION_CAP,
    };
    let labels: Vec<&str> = file.agents.iter().map(|a| a.label.as_str()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(Error::DuplicateAgent(l.to_string()));
        }
    }
    let comparisons = file
        .comparisons
        .as_ref()
        .map(|pairs| {
            pairs
                .iter()
                .map(|[a, b]| {
                    let find = |x: &String| {
                        labels
                            .iter()
                            .position(|l| l == x)
                            .ok_or_else(|| Error::UnknownAgent(x.clone()))
                    };
                    Ok(Comparison::new(find(a)?, find(b)?))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;

    let uses_delta = file.agents.iter().any(|a| {
        let mut any = false;
        a.dist.map(|p| any |= p.depends_on_delta());
        any
    });
    let deltas: Vec<Option<f64>> = match &file.delta {
        Some(d) if d.is_empty() => return Err(Error::Scenario("`delta` sweep is empty".into())),
        Some(d) => d.iter().map(|&x| Some(x)).collect(),
        None if uses_delta => {
            return Err(Error::Scenario("parameters refer to delta but no `delta` sweep is given".into()))
        }
        None => vec![None],
    };
    deltas
        .into_iter()
        .map(|delta| {
            let agents = file
                .agents
                .iter()
                .map(|a| AgentSpec::new(a.label.clone(), a.dist.map(|p| p.at(delta.unwrap_or(0.0)))))
                .collect();
            let mut config = ScenarioConfig::new(agents, test.clone(), file.replications);
            config.comparisons = comparisons.clone();
            config.validate()?;
            Ok(SweepPoint { delta, config })
        })
        .collect()
}

fn power_scenario(file: &ScenarioFile, section: &PowerTableSection, base_dir: &Path) -> Result<PowerTableConfig> {
    if !file.agents.is_empty() || file.delta.is_some() || file.comparisons.is_some() {
        return Err(Error::Scenario(
            "a power table scenario takes its agents from the population file".into(),
        ));
    }
    if file.beta != 0.0 {
        return Err(Error::Scenario("power tables run without early accept".into()));
    }
    let path = base_dir.join(&section.populations);
    let (labels, populations) = read_populations(&path)?;
    Ok(PowerTableConfig {
        labels,
        populations,
        group_sizes: section.group_sizes.clone(),
        interims: section.interims.clone(),
        alpha: file.alpha,
        permutations: file.permutations,
        replications: file.replications,
        seed: file.seed,
    })
}

/// Two-column CSV with the agent labels as header; columns may have
/// different lengths, shorter ones padded with empty cells.
pub fn read_populations(path: &Path) -> Result<([String; 2], [Vec<f64>; 2])> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let header = reader.headers()?.clone();
    if header.len() != 2 {
        return Err(Error::Scenario(format!(
            "population file {} must have exactly two columns, found {}",
            path.display(),
            header.len()
        )));
    }
    let labels = [header[0].to_string(), header[1].to_string()];
    let mut pops = [Vec::new(), Vec::new()];
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        for (c, pop) in pops.iter_mut().enumerate() {
            let cell = record.get(c).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row: i + 1,
                column: labels[c].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: labels[c].clone(),
                    value: cell.to_string(),
                });
            }
            pop.push(v);
        }
    }
    Ok((labels, pops))
}
