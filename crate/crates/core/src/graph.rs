use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered pair of agent indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Comparison {
    pub first: usize,
    pub second: usize,
}

impl Comparison {
    pub fn new(first: usize, second: usize) -> Self {
        Self { first, second }
    }

    pub fn involves(&self, agent: usize) -> bool {
        self.first == agent || self.second == agent
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcceptReason {
    EarlyAccept,
    EndOfBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum Status {
    Undecided,
    /// `larger` is the agent with the larger accumulated mean.
    Rejected { larger: usize, interim: usize },
    Accepted { interim: usize, reason: AcceptReason },
}

impl Status {
    pub fn is_undecided(&self) -> bool {
        matches!(self, Status::Undecided)
    }

    pub fn decided_at(&self) -> Option<usize> {
        match *self {
            Status::Undecided => None,
            Status::Rejected { interim, .. } | Status::Accepted { interim, .. } => Some(interim),
        }
    }
}

/// Comparison set `C₀` and the status of each comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGraph {
    comparisons: Vec<Comparison>,
    statuses: Vec<Status>,
}

impl ComparisonGraph {
    pub fn new(comparisons: Vec<Comparison>, agents: usize) -> Result<Self> {
        if comparisons.is_empty() {
            return Err(Error::EmptyComparisonSet);
        }
        for (i, c) in comparisons.iter().enumerate() {
            if c.first == c.second {
                return Err(Error::Config(format!("comparison {i} compares an agent with itself")));
            }
            if c.first >= agents || c.second >= agents {
                return Err(Error::Config(format!("comparison {i} names an unknown agent")));
            }
            let dup = comparisons[..i].iter().any(|d| {
                (d.first, d.second) == (c.first, c.second) || (d.first, d.second) == (c.second, c.first)
            });
            if dup {
                return Err(Error::Config(format!("comparison {i} appears twice")));
            }
        }
        let statuses = vec![Status::Undecided; comparisons.len()];
        Ok(Self {
            comparisons,
            statuses,
        })
    }

    /// Every unordered pair `(i, j)` with `i < j`.
    pub fn all_pairs(agents: usize) -> Result<Self> {
        let pairs = (0..agents)
            .flat_map(|i| (i + 1..agents).map(move |j| Comparison::new(i, j)))
            .collect();
        Self::new(pairs, agents)
    }

    pub fn len(&self) -> usize {
        self.comparisons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.comparisons.is_empty()
    }

    pub fn comparisons(&self) -> &[Comparison] {
        &self.comparisons
    }

    pub fn comparison(&self, j: usize) -> Comparison {
        self.comparisons[j]
    }

    pub fn statuses(&self) -> &[Status] {
        &self.statuses
    }

    pub fn status(&self, j: usize) -> Status {
        self.statuses[j]
    }

    /// Indices of the undecided set `C`, increasing.
    pub fn undecided(&self) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.statuses[j].is_undecided()).collect()
    }

    pub fn is_finished(&self) -> bool {
        self.statuses.iter().all(|s| !s.is_undecided())
    }

    /// Agents that still appear in an undecided comparison.
    pub fn active_agents(&self, agents: usize) -> Vec<bool> {
        let mut active = vec![false; agents];
        for j in self.undecided() {
            active[self.comparisons[j].first] = true;
            active[self.comparisons[j].second] = true;
        }
        active
    }

    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        self.comparisons
            .iter()
            .position(|c| (c.first, c.second) == (a, b) || (c.first, c.second) == (b, a))
    }

    pub(crate) fn decide(&mut self, j: usize, status: Status) {
        debug_assert!(self.statuses[j].is_undecided());
        self.statuses[j] = status;
    }
}
