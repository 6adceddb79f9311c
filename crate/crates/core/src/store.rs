use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores of one interim, indexed by agent. `None` for agents whose
/// comparisons were all decided before this interim.
pub type Batch = Vec<Option<Vec<f64>>>;

/// Per-agent, per-interim performance scores.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationStore {
    agents: Vec<String>,
    group_size: usize,
    max_interims: usize,
    batches: Vec<Batch>,
}

impl EvaluationStore {
    pub fn new(agents: Vec<String>, group_size: usize, max_interims: usize) -> Result<Self> {
        if agents.len() < 2 {
            return Err(Error::Config("at least two agents are required".into()));
        }
        for (i, a) in agents.iter().enumerate() {
            if agents[..i].contains(a) {
                return Err(Error::DuplicateAgent(a.clone()));
            }
        }
        if group_size == 0 || max_interims == 0 {
            return Err(Error::Config("group size and interim count must be positive".into()));
        }
        Ok(Self {
            agents,
            group_size,
            max_interims,
            batches: Vec::new(),
        })
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_index(&self, label: &str) -> Option<usize> {
        self.agents.iter().position(|a| a == label)
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn max_interims(&self) -> usize {
        self.max_interims
    }

    /// Number of interims recorded so far.
    pub fn interim(&self) -> usize {
        self.batches.len()
    }

    pub fn batches(&self) -> &[Batch] {
        &self.batches
    }

    /// Scores of `agent` at 1-based `interim`.
    pub fn scores(&self, agent: usize, interim: usize) -> Option<&[f64]> {
        self.batches.get(interim.checked_sub(1)?)?.get(agent)?.as_deref()
    }

    pub fn push(&mut self, batch: Batch) -> Result<()> {
        if self.batches.len() == self.max_interims {
            return Err(Error::Config(format!(
                "all {} interims already recorded",
                self.max_interims
            )));
        }
        if batch.len() != self.agents.len() {
            return Err(Error::LengthMismatch(format!(
                "batch holds {} agents, store has {}",
                batch.len(),
                self.agents.len()
            )));
        }
        for (agent, scores) in batch.iter().enumerate() {
            let Some(scores) = scores else { continue };
            if scores.len() != self.group_size {
                return Err(Error::LengthMismatch(format!(
                    "agent `{}` has {} scores, expected {}",
                    self.agents[agent],
                    scores.len(),
                    self.group_size
                )));
            }
            if let Some(x) = scores.iter().find(|x| !x.is_finite()) {
                return Err(Error::NonFinite {
                    row: 0,
                    column: self.agents[agent].clone(),
                    value: x.to_string(),
                });
            }
        }
        self.batches.push(batch);
        Ok(())
    }

    /// Evaluations each agent has consumed so far.
    pub fn seeds_used(&self) -> Vec<usize> {
        (0..self.agents.len())
            .map(|a| {
                self.batches
                    .iter()
                    .filter(|b| b[a].is_some())
                    .count()
                    * self.group_size
            })
            .collect()
    }

    /// Sum of every recorded score of `agent` up to `interim`.
    pub fn accumulated_sum(&self, agent: usize, interim: usize) -> f64 {
        (1..=interim)
            .filter_map(|i| self.scores(agent, i))
            .flatten()
            .sum()
    }

    /// Applies `x -> a x + b` to every stored score.
    pub fn map_scores(&mut self, f: impl Fn(f64) -> f64) {
        for batch in &mut self.batches {
            for scores in batch.iter_mut().flatten() {
                for x in scores.iter_mut() {
                    *x = f(*x);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_validates_shape() {
        let mut s = EvaluationStore::new(vec!["A".into(), "B".into()], 2, 2).unwrap();
        assert!(s.push(vec![Some(vec![1.0, 2.0])]).is_err());
        assert!(s.push(vec![Some(vec![1.0]), Some(vec![1.0, 2.0])]).is_err());
        assert!(s.push(vec![Some(vec![f64::NAN, 1.0]), Some(vec![1.0, 2.0])]).is_err());
        s.push(vec![Some(vec![1.0, 2.0]), Some(vec![3.0, 4.0])]).unwrap();
        s.push(vec![Some(vec![1.0, 2.0]), None]).unwrap();
        assert!(s.push(vec![None, None]).is_err());
        assert_eq!(s.seeds_used(), vec![4, 2]);
        assert_eq!(s.scores(1, 2), None);
        assert_eq!(s.accumulated_sum(0, 2), 6.0);
    }

    #[test]
    fn duplicate_agents_rejected() {
        assert!(matches!(
            EvaluationStore::new(vec!["A".into(), "A".into()], 1, 1),
            Err(Error::DuplicateAgent(_))
        ));
    }
}
