use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::empirical::EmpiricalLaw;
use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::kernels::{h1_norm, RGrid};
use crate::queue::{SimConfig, Simulator};
use crate::rng::{rng_from_seed, seed_split};

/// Burn-in recommended before treating a queue state as stationary, in
/// mean service times.
pub const RECOMMENDED_BURN_IN: f64 = 50.0;

/// One-dimensional functional of the scaled state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    /// unscaled number in system
    QueueLength,
    #[serde(rename = "x_hat")]
    X,
    #[serde(rename = "x_hat_plus")]
    XPositive,
    /// occupancy deviation at a point, interpolated on the r-grid
    #[serde(rename = "z_hat")]
    Z { r: f64 },
    /// H1 norm of the occupancy deviation on the r-grid
    H1Norm,
}

impl Functional {
    pub fn needs_z(&self) -> bool {
        matches!(self, Functional::Z { .. } | Functional::H1Norm)
    }

    /// Value from the scaled state; `z`, `dz` may be empty when unused.
    pub fn evaluate(&self, unscaled: f64, x_hat: f64, z: &[f64], dz: &[f64], grid: &RGrid) -> Result<f64> {
        Ok(match *self {
            Functional::QueueLength => unscaled,
            Functional::X => x_hat,
            Functional::XPositive => x_hat.max(0.0),
            Functional::Z { r } => {
                if z.len() != grid.len() {
                    return Err(Error::Shape("occupancy values missing for a Z functional".into()));
                }
                grid.interpolate(z, r)
            }
            Functional::H1Norm => h1_norm(z, dz, grid)?,
        })
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::QueueLength => write!(f, "queue_length"),
            Functional::X => write!(f, "x_hat"),
            Functional::XPositive => write!(f, "x_hat_plus"),
            Functional::Z { r } => write!(f, "z_hat({r})"),
            Functional::H1Norm => write!(f, "h1_norm"),
        }
    }
}

/// How stationary draws are collected: `per_run` draws spaced by
/// `spacing` after `burn_in`, in as many independent runs as needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub burn_in: f64,
    #[serde(default)]
    pub spacing: f64,
    #[serde(default = "one")]
    pub per_run: usize,
    pub draws: usize,
}

fn one() -> usize {
    1
}

impl Sampling {
    /// One draw per independent run at time `burn_in`.
    pub fn replications(burn_in: f64, draws: usize) -> Self {
        Sampling { burn_in, spacing: 0.0, per_run: 1, draws }
    }

    /// All draws from a single path.
    pub fn long_path(burn_in: f64, spacing: f64, draws: usize) -> Self {
        Sampling { burn_in, spacing, per_run: draws, draws }
    }

    pub fn runs(&self) -> usize {
        self.draws.div_ceil(self.per_run.max(1))
    }

    pub fn horizon(&self) -> f64 {
        self.burn_in + (self.per_run.max(1) - 1) as f64 * self.spacing
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.per_run.max(1)).map(|j| self.burn_in + j as f64 * self.spacing).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws == 0 || self.per_run == 0 {
            return Err(Error::Config("sampling needs at least one draw per run".into()));
        }
        if !(self.burn_in >= 0.0) || (self.per_run > 1 && !(self.spacing > 0.0)) {
            return Err(Error::Config("burn-in must be nonnegative and spacing positive".into()));
        }
        Ok(())
    }
}

/// Mean lag-one autocorrelation of consecutive draws within runs.
pub(crate) fn within_run_autocorrelation(runs: &[Vec<f64>]) -> Option<f64> {
    let acs: Vec<f64> = runs
        .iter()
        .filter(|r| r.len() >= 3)
        .filter_map(|r| {
            let m = r.iter().sum::<f64>() / r.len() as f64;
            let var: f64 = r.iter().map(|v| (v - m) * (v - m)).sum();
            (var > 0.0).then(|| r.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum::<f64>() / var)
        })
        .collect();
    (!acs.is_empty()).then(|| acs.iter().sum::<f64>() / acs.len() as f64)
}

/// Groups per-run functional values into one law per functional.
pub(crate) fn collect_laws(functionals: &[Functional], per_run: Vec<Vec<Vec<f64>>>, draws: usize) -> Result<Vec<EmpiricalLaw>> {
    let runs = per_run.len();
    functionals
        .iter()
        .enumerate()
        .map(|(f, func)| {
            let by_run: Vec<Vec<f64>> = per_run.iter().map(|r| r.iter().map(|v| v[f]).collect()).collect();
            let values: Vec<f64> = by_run.iter().flatten().copied().take(draws).collect();
            let mut law = EmpiricalLaw::new(func.to_string(), values, runs)?;
            law.autocorrelation = within_run_autocorrelation(&by_run);
            Ok(law)
        })
        .collect()
}

/// Stationary draws of each functional for the `N`-server queue. Runs use
/// seeds split from `config.seed` and are collected in run order.
pub fn estimate_queue_stationary(config: &SimConfig, sampling: &Sampling, functionals: &[Functional]) -> Result<Vec<EmpiricalLaw>> {
    sampling.validate()?;
    let mut cfg = config.clone();
    cfg.horizon = sampling.horizon();
    cfg.sample_times = sampling.times();
    cfg.record_events = false;
    cfg.compute_z = functionals.iter().any(Functional::needs_z);
    let sim = Simulator::new(cfg)?;
    let grid = &config.r_grid;
    let per_run: Vec<Vec<Vec<f64>>> = (0..sampling.runs())
        .into_par_iter()
        .map(|r| {
            let path = sim.run_with_seed(seed_split(config.seed, r as u64));
            let scaled = path.scaled();
            (0..scaled.len())
                .map(|i| {
                    functionals
                        .iter()
                        .map(|f| f.evaluate(scaled.x[i] as f64, scaled.x_hat[i], &scaled.z_hat[i], &scaled.dz_hat[i], grid))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    collect_laws(functionals, per_run, sampling.draws)
}

/// Draws of `sup_{t <= T} (A(t) - sum_i D_i(t)) / sqrt(N)` where `A` is the
/// stationary arrival renewal process and each `D_i` an independent
/// stationary renewal process of service times.
pub fn lhat_bound(config: &SimConfig, horizon: f64, replications: usize) -> Result<EmpiricalLaw> {
    let n = config.servers;
    if n == 0 {
        return Err(Error::Config("servers must be positive".into()));
    }
    let service = DistributionBundle::new(config.service.clone())?;
    let arrival = DistributionBundle::new(config.arrival.clone())?;
    let lambda = config.arrival_rate().max(0.0);
    let root = (n as f64).sqrt();
    let values: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(seed_split(config.seed, r as u64));
            let mut departures: BinaryHeap<Reverse<Epoch>> =
                (0..n).map(|_| Reverse(Epoch(service.sample_residual(&mut rng)))).collect();
            let mut best = 0i64;
            if lambda == 0.0 {
                return 0.0;
            }
            let mut diff = 0i64;
            let mut next = arrival.sample_residual(&mut rng) / lambda;
            while next <= horizon {
                while let Some(&Reverse(Epoch(d))) = departures.peek() {
                    if d >= next {
                        break;
                    }
                    departures.pop();
                    departures.push(Reverse(Epoch(d + service.sample_service(&mut rng))));
                    diff -= 1;
                }
                diff += 1;
                best = best.max(diff);
                next += arrival.sample_service(&mut rng) / lambda;
            }
            best as f64 / root
        })
        .collect();
    EmpiricalLaw::new("lhat", values, replications)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Epoch(f64);

impl Eq for Epoch {}

impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
