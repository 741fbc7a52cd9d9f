//! Regularity and consistency diagnostics on simulated paths.

mod audit;
mod fluid;
mod tightness;

pub use audit::{identity_audit, AuditOptions, AuditReport};
pub use fluid::{fluid_deviation, log_log_slope, FluidDeviation};
pub use tightness::{tightness_profile, NormSummary, ProfileEntry, TightnessProfile, WindowNorms};

#[cfg(test)]
mod tests;
