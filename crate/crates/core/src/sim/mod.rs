//! Monte Carlo validation harness: synthetic agents, error-rate and power
//! estimation, and large-sample oracles.

pub mod asymptotic;
pub mod distribution;
pub mod montecarlo;
pub mod power;
pub mod scenario;

pub use asymptotic::{asymptotic_boundaries, randomization_cdf_check, scaled_first_boundary, tau, CdfCheck};
pub use distribution::{DistributionSpec, Family};
pub use montecarlo::{estimate_fwe_and_power, run_replication, AgentSpec, MonteCarloReport, ScenarioConfig};
pub use power::{power_table, PowerCell, PowerTableConfig};
pub use scenario::{load_scenario, parse_scenario, Scenario, SweepPoint};
