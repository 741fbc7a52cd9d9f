//! Discrete-event simulation of the `N`-server FCFS queue.

mod config;
mod path;
mod sim;

pub use config::{InitCondition, SimConfig};
pub use path::{fluid_scale, EventKind, EventRecord, FluidPath, InvariantReport, JobRecord, QueuePath, QueueSample, ScaledPath};
pub use sim::{run, RenewalWorkload, ScriptedWorkload, Simulator, Workload};

#[cfg(test)]
mod tests;
