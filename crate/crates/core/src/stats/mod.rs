//! Stationary-law estimation, exact finite-server oracles and two-sample
//! comparisons.

mod empirical;
mod erlang;
mod queue;
mod sweep;

pub use empirical::{compare, compare_with, ks_against_cdf, ks_distance, w1_distance, Bootstrap, ComparisonReport, EmpiricalLaw, DEFAULT_RESAMPLES};
pub use erlang::{erlang_oracle, frequencies, total_variation};
pub(crate) use queue::collect_laws;
pub use queue::{estimate_queue_stationary, lhat_bound, Functional, Sampling, RECOMMENDED_BURN_IN};
pub use sweep::{convergence_sweep, convergence_sweep_against, SweepConfig, SweepRow, SweepTable, TrendStatistic};
