use serde::{Deserialize, Serialize};

use super::empirical::{compare_with, ComparisonReport, EmpiricalLaw, DEFAULT_RESAMPLES};
use super::queue::{estimate_queue_stationary, Functional, Sampling};
use crate::diffusion::{estimate_diffusion_stationary, DiffusionConfig};
use crate::dist::{DistributionBundle, DistributionSpec};
use crate::error::{Error, Result};
use crate::kernels::RGrid;
use crate::queue::SimConfig;
use crate::rng::seed_split;

fn exponential() -> DistributionSpec {
    DistributionSpec::exponential(1.0)
}

fn default_dt() -> f64 {
    0.02
}

fn default_cells() -> usize {
    256
}

fn default_resamples() -> usize {
    DEFAULT_RESAMPLES
}

fn default_grid() -> RGrid {
    RGrid::standard()
}

/// Queue-versus-limit comparison over a list of server counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub service: DistributionSpec,
    #[serde(default = "exponential")]
    pub arrival: DistributionSpec,
    pub beta: f64,
    pub servers: Vec<usize>,
    pub functionals: Vec<Functional>,
    pub queue_sampling: Sampling,
    pub diffusion_sampling: Sampling,
    /// time step of the limit-process solver
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_cells")]
    pub noise_cells: usize,
    #[serde(default = "default_grid")]
    pub r_grid: RGrid,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_resamples")]
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub servers: usize,
    pub seed: u64,
    pub report: ComparisonReport,
}

/// Whether KS shrinks along the server list, and whether every step down
/// exceeds the combined bootstrap standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendStatistic {
    pub functional: String,
    pub ks: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub decreasing: bool,
    pub beyond_noise: bool,
    /// smallest `(ks_i - ks_{i+1}) / sqrt(se_i^2 + se_{i+1}^2)`
    pub min_z: f64,
}

impl TrendStatistic {
    pub fn from_reports(functional: &str, reports: &[&ComparisonReport]) -> Option<Self> {
        if reports.len() < 2 {
            return None;
        }
        let ks: Vec<f64> = reports.iter().map(|r| r.ks).collect();
        let std_errors: Vec<f64> = reports.iter().map(|r| r.ks_bootstrap.std_error).collect();
        let mut min_z = f64::INFINITY;
        for i in 0..ks.len() - 1 {
            let se = std_errors[i].hypot(std_errors[i + 1]);
            min_z = min_z.min((ks[i] - ks[i + 1]) / se);
        }
        Some(TrendStatistic {
            functional: functional.to_string(),
            decreasing: ks.windows(2).all(|w| w[1] < w[0]),
            beyond_noise: min_z > 1.0,
            ks,
            std_errors,
            min_z,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub trends: Vec<TrendStatistic>,
    pub diffusion_draws: usize,
}

impl SweepConfig {
    /// Diffusion configuration matching the sweep's laws; `sigma` is the
    /// standard deviation of the base inter-arrival law.
    pub fn diffusion_config(&self) -> Result<DiffusionConfig> {
        let sigma = DistributionBundle::new(self.arrival.clone())?.variance().sqrt();
        if !sigma.is_finite() {
            return Err(Error::Config("inter-arrival law needs a finite variance".into()));
        }
        Ok(DiffusionConfig::new(self.service.clone(), self.beta, self.diffusion_sampling.horizon())
            .with_sigma(sigma)
            .with_dt(self.dt)
            .with_cells(self.noise_cells)
            .with_grid(self.r_grid.clone())
            .with_seed(seed_split(self.seed, u64::MAX)))
    }

    pub fn queue_config(&self, servers: usize) -> SimConfig {
        SimConfig::new(servers, self.beta, self.service.clone(), self.queue_sampling.horizon())
            .with_arrival(self.arrival.clone())
            .with_grid(self.r_grid.clone())
            .with_seed(seed_split(self.seed, servers as u64))
    }
}

pub fn convergence_sweep(config: &SweepConfig) -> Result<SweepTable> {
    let diffusion = estimate_diffusion_stationary(&config.diffusion_config()?, &config.diffusion_sampling, &config.functionals)?;
    convergence_sweep_against(config, &diffusion)
}

/// Sweep against precomputed limit-process laws, one per functional.
pub fn convergence_sweep_against(config: &SweepConfig, diffusion: &[EmpiricalLaw]) -> Result<SweepTable> {
    if diffusion.len() != config.functionals.len() {
        return Err(Error::Shape(format!("{} limit laws for {} functionals", diffusion.len(), config.functionals.len())));
    }
    let mut rows = Vec::new();
    for &n in &config.servers {
        let qc = config.queue_config(n);
        let laws = estimate_queue_stationary(&qc, &config.queue_sampling, &config.functionals)?;
        for (q, d) in laws.iter().zip(diffusion) {
            let report = compare_with(q, d, config.resamples, seed_split(config.seed, n as u64 ^ 0xB007))?;
            rows.push(SweepRow { servers: n, seed: qc.seed, report });
        }
    }
    let trends = config
        .functionals
        .iter()
        .filter_map(|f| {
            let label = f.to_string();
            let reports: Vec<&ComparisonReport> = rows.iter().filter(|r| r.report.label == label).map(|r| &r.report).collect();
            TrendStatistic::from_reports(&label, &reports)
        })
        .collect();
    Ok(SweepTable { rows, trends, diffusion_draws: diffusion.first().map_or(0, EmpiricalLaw::len) })
}
