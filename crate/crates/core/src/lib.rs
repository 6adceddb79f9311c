//! Adaptive, non-parametric, group-sequential comparison of stochastic
//! agents with family-wise error control.
//!
//! The crate is organised bottom-up:
//!
//! - [`perm`]: permutation sequences as sign classes, exact enumeration and
//!   keyed Monte Carlo sampling.
//! - [`stats`], [`boundary`]: permutation statistics, quantile budgets and
//!   order-statistic boundaries.
//! - [`engine`]: the interim-by-interim step-down test with optional early
//!   accept; [`two_agent`] and [`step_down`] are the two-agent and
//!   single-interim special cases written out directly.
//! - [`sim`]: Monte Carlo harness for error rates, power and asymptotics.
//! - [`io`]: batch CSV ingestion, persisted state and decision tables.

pub mod boundary;
pub mod engine;
pub mod error;
pub mod graph;
pub mod io;
pub mod perm;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod step_down;
pub mod store;
pub mod two_agent;

pub use boundary::{Budget, BoundaryLedger, InterimBoundaries};
pub use engine::{run_full_test, AdaStop, BatchSource, InterimDecisionReport, TestConfig, TestOutcome};
pub use error::{Error, Result};
pub use graph::{AcceptReason, Comparison, ComparisonGraph, Status};
pub use perm::{PermutationPool, PermutationSequence, PoolMode, SignClass};
pub use store::{Batch, EvaluationStore};
pub use io::TestState;
pub use sim::{DistributionSpec, MonteCarloReport, ScenarioConfig};
