use serde::{Deserialize, Serialize};

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::kernels::RGrid;

/// Starting state of a queue run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitCondition {
    /// `N` jobs in service with equilibrium ages, empty buffer, stationary
    /// arrival delay.
    #[default]
    Star,
    /// Empty system; the arrival renewal process starts fresh.
    Empty,
    /// Given occupancy and in-service ages. Remaining services are drawn from
    /// the age-conditional law; the arrival delay is `residual_arrival` if
    /// given, else a fresh inter-arrival time.
    Explicit {
        in_system: usize,
        ages: Vec<f64>,
        #[serde(default)]
        residual_arrival: Option<f64>,
    },
}

fn default_grid() -> RGrid {
    RGrid::standard()
}

fn yes() -> bool {
    true
}

/// Parameters of one `N`-server run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub servers: usize,
    /// slack in the arrival rate `N - beta sqrt(N)`
    pub beta: f64,
    /// unit-mean base inter-arrival law
    pub arrival: DistributionSpec,
    /// unit-mean service law
    pub service: DistributionSpec,
    pub horizon: f64,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default = "default_grid")]
    pub r_grid: RGrid,
    #[serde(default)]
    pub init: InitCondition,
    #[serde(default)]
    pub seed: u64,
    /// keep the per-event log and per-job records
    #[serde(default)]
    pub record_events: bool,
    /// evaluate the occupancy function at sample times
    #[serde(default = "yes")]
    pub compute_z: bool,
}

impl SimConfig {
    pub fn new(servers: usize, beta: f64, service: DistributionSpec, horizon: f64) -> Self {
        SimConfig {
            servers,
            beta,
            arrival: DistributionSpec::exponential(1.0),
            service,
            horizon,
            sample_times: Vec::new(),
            r_grid: RGrid::standard(),
            init: InitCondition::Star,
            seed: 0,
            record_events: false,
            compute_z: true,
        }
    }

    pub fn arrival_rate(&self) -> f64 {
        let n = self.servers as f64;
        n - self.beta * n.sqrt()
    }

    /// Samples at `0, dt, 2 dt, ...` up to the horizon.
    pub fn sample_every(mut self, dt: f64) -> Self {
        let m = (self.horizon / dt + 1e-9).floor() as usize;
        self.sample_times = (0..=m).map(|i| i as f64 * dt).collect();
        self
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: InitCondition) -> Self {
        self.init = init;
        self
    }

    pub fn with_arrival(mut self, arrival: DistributionSpec) -> Self {
        self.arrival = arrival;
        self
    }

    pub fn with_grid(mut self, grid: RGrid) -> Self {
        self.r_grid = grid;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_events = true;
        self
    }

    pub fn without_z(mut self) -> Self {
        self.compute_z = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.servers == 0 {
            return Err(Error::Config("servers must be positive".into()));
        }
        if !(self.beta.is_finite()) {
            return Err(Error::Config("beta must be finite".into()));
        }
        if !(self.arrival_rate() > 0.0) {
            return Err(Error::Config(format!(
                "arrival rate N - beta sqrt(N) = {} must be positive",
                self.arrival_rate()
            )));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config("horizon must be finite and nonnegative".into()));
        }
        if self.sample_times.iter().any(|t| !(*t >= 0.0 && *t <= self.horizon)) {
            return Err(Error::Config("sample times must lie in [0, horizon]".into()));
        }
        if self.sample_times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Config("sample times must be nondecreasing".into()));
        }
        if let InitCondition::Explicit { in_system, ages, residual_arrival } = &self.init {
            if ages.len() != (*in_system).min(self.servers) {
                return Err(Error::Config(format!(
                    "explicit init with {in_system} jobs needs {} in-service ages, got {}",
                    (*in_system).min(self.servers),
                    ages.len()
                )));
            }
            if ages.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                return Err(Error::Config("ages must be finite and nonnegative".into()));
            }
            if residual_arrival.is_some_and(|r| !(r >= 0.0)) {
                return Err(Error::Config("residual arrival time must be nonnegative".into()));
            }
        }
        Ok(())
    }
}
