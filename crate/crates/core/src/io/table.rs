use std::fmt;

use crate::graph::{ComparisonGraph, Status};
use crate::store::EvaluationStore;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cell {
    /// The row agent was found better than the column agent.
    Larger,
    Smaller,
    Equal,
    Undecided,
    SelfPair,
    NotCompared,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Cell::Larger => "larger",
            Cell::Smaller => "smaller",
            Cell::Equal => "equal",
            Cell::Undecided => "undecided",
            Cell::SelfPair => "self",
            Cell::NotCompared => "-",
        })
    }
}

/// `L × L` decision matrix, row agent against column agent.
pub fn decision_matrix(graph: &ComparisonGraph, agents: usize) -> Vec<Vec<Cell>> {
    let mut m = vec![vec![Cell::NotCompared; agents]; agents];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Cell::SelfPair;
    }
    for (c, status) in graph.comparisons().iter().zip(graph.statuses()) {
        let (a, b) = (c.first, c.second);
        let (ab, ba) = match *status {
            Status::Undecided => (Cell::Undecided, Cell::Undecided),
            Status::Accepted { .. } => (Cell::Equal, Cell::Equal),
            Status::Rejected { larger, .. } if larger == a => (Cell::Larger, Cell::Smaller),
            Status::Rejected { .. } => (Cell::Smaller, Cell::Larger),
        };
        m[a][b] = ab;
        m[b][a] = ba;
    }
    m
}

/// Fixed-width decision table followed by the seeds each agent used.
pub fn render_decision_table(graph: &ComparisonGraph, store: &EvaluationStore) -> String {
    let agents = store.agents();
    let matrix = decision_matrix(graph, agents.len());
    let width = agents.iter().map(|a| a.chars().count()).max().unwrap_or(0).max("undecided".len());
    let mut out = format!("{:width$}", "");
    for a in agents {
        out.push_str(&format!("  {a:>width$}"));
    }
    out.push('\n');
    for (a, row) in agents.iter().zip(&matrix) {
        out.push_str(&format!("{a:width$}"));
        for cell in row {
            out.push_str(&format!("  {cell:>width$}"));
        }
        out.push('\n');
    }
    out.push_str("\nseeds used\n");
    for (a, n) in agents.iter().zip(store.seeds_used()) {
        out.push_str(&format!("{a:width$}  {n}\n"));
    }
    out
}
