use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cms::{march, residuals, CmsInput};
use super::noise::{draw_brownian, draw_field, mm_integral, ConvolutionPlan, GaussianDrivers, NoiseGrid};
use crate::dist::{DistributionBundle, DistributionSpec};
use crate::error::{Error, Result};
use crate::kernels::RGrid;
use crate::rng::{rng_from_seed, seed_split};

/// A point of the state space: `x0` and the occupancy function with its
/// derivative on the configuration's r-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub x0: f64,
    pub z0: Vec<f64>,
    pub dz0: Vec<f64>,
}

/// Law of the starting state, independent of the drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionInit {
    /// `x0 = 0`, `z0 = 0`.
    #[default]
    Zero,
    /// A fixed state.
    State(InitialState),
    /// Uniform draw from a stored sample of states.
    Sampled(Vec<InitialState>),
}

fn default_dt() -> f64 {
    1e-3
}

fn default_cells() -> usize {
    256
}

fn default_grid() -> RGrid {
    RGrid::standard()
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffusionConfig {
    pub service: DistributionSpec,
    pub beta: f64,
    /// standard deviation of the unit-mean inter-arrival law
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub horizon: f64,
    /// equal-mass cells of the white-noise field
    #[serde(default = "default_cells")]
    pub noise_cells: usize,
    #[serde(default = "default_grid")]
    pub r_grid: RGrid,
    #[serde(default)]
    pub sample_times: Vec<f64>,
    #[serde(default)]
    pub init: DiffusionInit,
    #[serde(default)]
    pub seed: u64,
    /// assemble `Z` and `Z'` at sample times
    #[serde(default = "yes")]
    pub compute_z: bool,
    /// recompute the solver residuals with a refined quadrature
    #[serde(default = "yes")]
    pub residuals: bool,
}

impl DiffusionConfig {
    pub fn new(service: DistributionSpec, beta: f64, horizon: f64) -> Self {
        DiffusionConfig {
            service,
            beta,
            sigma: 1.0,
            dt: default_dt(),
            horizon,
            noise_cells: default_cells(),
            r_grid: RGrid::standard(),
            sample_times: Vec::new(),
            init: DiffusionInit::Zero,
            seed: 0,
            compute_z: true,
            residuals: true,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.noise_cells = cells;
        self
    }

    pub fn with_grid(mut self, grid: RGrid) -> Self {
        self.r_grid = grid;
        self
    }

    pub fn with_samples(mut self, times: Vec<f64>) -> Self {
        self.sample_times = times;
        self
    }

    pub fn with_init(mut self, init: DiffusionInit) -> Self {
        self.init = init;
        self
    }

    /// Skip `Z` assembly and the residual pass.
    pub fn fast(mut self) -> Self {
        self.compute_z = false;
        self.residuals = false;
        self
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.steps() == 0 {
            return Err(Error::Config(format!("horizon {} gives no time steps", self.horizon)));
        }
        if !self.beta.is_finite() || !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config("beta must be finite and sigma nonnegative".into()));
        }
        let states: &[InitialState] = match &self.init {
            DiffusionInit::Zero => &[],
            DiffusionInit::State(s) => std::slice::from_ref(s),
            DiffusionInit::Sampled(v) if v.is_empty() => {
                return Err(Error::Config("sampled initial law has no states".into()));
            }
            DiffusionInit::Sampled(v) => v,
        };
        for s in states {
            if s.z0.len() != self.r_grid.len() || s.dz0.len() != self.r_grid.len() {
                return Err(Error::Shape(format!(
                    "initial state has {} / {} values on a {}-node grid",
                    s.z0.len(),
                    s.dz0.len(),
                    self.r_grid.len()
                )));
            }
            let lower = s.x0.min(0.0);
            if (s.z0[0] - lower).abs() > 1e-9 * (1.0 + lower.abs()) {
                return Err(Error::Config(format!("z0(0)={} differs from min(x0, 0)={lower}", s.z0[0])));
            }
        }
        Ok(())
    }
}

/// Scalar summaries of the drivers of one path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverSummary {
    pub steps: usize,
    pub cells: usize,
    pub noise_mass: f64,
    pub brownian_end: f64,
    pub h_one_end: f64,
    pub h_hazard_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionSample {
    pub t: f64,
    pub x: f64,
    pub k: f64,
    pub e: f64,
    pub z: Vec<f64>,
    pub dz: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffusionPath {
    pub beta: f64,
    pub sigma: f64,
    pub seed: u64,
    pub dt: f64,
    pub r_grid: RGrid,
    pub x0: f64,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub e: Vec<f64>,
    pub samples: Vec<DiffusionSample>,
    pub drivers: DriverSummary,
    /// max residuals of the two solver equations, if computed
    pub residuals: Option<(f64, f64)>,
    /// max over samples of `|Z_t(0) - min(X_t, 0)|`
    pub boundary_error: f64,
}

impl DiffusionPath {
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// `X` at the end of the horizon.
    pub fn x_end(&self) -> f64 {
        self.x[self.x.len() - 1]
    }

    /// Same columns as the scaled queue path; `x`, `k`, `e` are real here.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let m = self.r_grid.len();
        let mut header = String::from("t,x,k,e,x_hat");
        let has_z = self.samples.first().is_some_and(|s| !s.z.is_empty());
        if has_z {
            for i in 0..m {
                header.push_str(&format!(",z_hat_{i}"));
            }
            for i in 0..m {
                header.push_str(&format!(",dz_hat_{i}"));
            }
        }
        writeln!(w, "{header}")?;
        for s in &self.samples {
            let mut row = format!("{},{},{},{},{}", s.t, s.x, s.k, s.e, s.x);
            if has_z {
                for v in s.z.iter().chain(&s.dz) {
                    row.push_str(&format!(",{v}"));
                }
            }
            writeln!(w, "{row}")?;
        }
        Ok(())
    }
}

/// Everything about a configuration that does not depend on the random
/// draw: resolved law, noise grid, kernel spectra and density lags.
pub struct DiffusionModel {
    config: DiffusionConfig,
    bundle: DistributionBundle,
    noise: NoiseGrid,
    steps: usize,
    plan: ConvolutionPlan,
    zbar_edge: f64,
}

impl DiffusionModel {
    pub fn new(config: DiffusionConfig) -> Result<Self> {
        config.validate()?;
        let bundle = DistributionBundle::new(config.service.clone())?;
        if (bundle.mean() - 1.0).abs() > 1e-8 {
            return Err(Error::Config(format!("service law must have unit mean, got {}", bundle.mean())));
        }
        let diag = 0.5 * bundle.pdf(0.0) * config.dt;
        if !(diag < 1.0) {
            return Err(Error::StepSize(format!("g(0) dt / 2 = {diag} must be below 1")));
        }
        let noise = NoiseGrid::quantile(&bundle, config.noise_cells)?;
        let steps = config.steps();
        let plan = ConvolutionPlan::new(&bundle, &noise, config.dt, steps);
        let zbar_edge = bundle.zbar(config.r_grid.r_max());
        Ok(DiffusionModel { config, bundle, noise, steps, plan, zbar_edge })
    }

    pub fn config(&self) -> &DiffusionConfig {
        &self.config
    }

    pub fn bundle(&self) -> &DistributionBundle {
        &self.bundle
    }

    pub fn noise(&self) -> &NoiseGrid {
        &self.noise
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn drivers(&self, seed: u64) -> GaussianDrivers {
        let mut rb = rng_from_seed(seed_split(seed, 0));
        let mut rw = rng_from_seed(seed_split(seed, 1));
        let brownian = draw_brownian(self.config.dt, self.steps, &mut rb);
        let field = draw_field(&self.noise, self.config.dt, self.steps, &mut rw);
        self.assemble_drivers(brownian, field)
    }

    /// Drivers from given Brownian values and cell-major field increments.
    pub fn assemble_drivers(&self, brownian: Vec<f64>, field: Vec<f64>) -> GaussianDrivers {
        let (h_one, h_hazard) = self.plan.convolve(&field);
        GaussianDrivers {
            dt: self.config.dt,
            steps: self.steps,
            brownian,
            field,
            cells: self.noise.cells(),
            h_one,
            h_hazard,
        }
    }

    /// Couples a fine draw to this (coarser) model by summing the fine
    /// increments over each coarse time cell.
    pub fn coarsen(&self, fine: &GaussianDrivers) -> Result<GaussianDrivers> {
        if fine.cells != self.noise.cells() || !fine.steps.is_multiple_of(self.steps) {
            return Err(Error::Shape(format!(
                "cannot coarsen {} steps x {} cells onto {} steps x {} cells",
                fine.steps,
                fine.cells,
                self.steps,
                self.noise.cells()
            )));
        }
        let ratio = fine.steps / self.steps;
        let brownian = fine.brownian.iter().step_by(ratio).copied().collect();
        let field = fine.field.chunks(ratio).map(|c| c.iter().sum()).collect();
        Ok(self.assemble_drivers(brownian, field))
    }

    fn initial_state(&self, seed: u64) -> Option<InitialState> {
        match &self.config.init {
            DiffusionInit::Zero => None,
            DiffusionInit::State(s) => Some(s.clone()),
            DiffusionInit::Sampled(v) => {
                let mut rng = rng_from_seed(seed_split(seed, 2));
                Some(v[rng.random_range(0..v.len())].clone())
            }
        }
    }

    fn z0_at(&self, state: Option<&InitialState>, u: f64) -> f64 {
        let Some(s) = state else { return 0.0 };
        let grid = &self.config.r_grid;
        if u <= grid.r_max() {
            grid.interpolate(&s.z0, u)
        } else if self.zbar_edge > 0.0 {
            s.z0[s.z0.len() - 1] * self.bundle.zbar(u) / self.zbar_edge
        } else {
            0.0
        }
    }

    fn dz0_at(&self, state: Option<&InitialState>, u: f64) -> f64 {
        let Some(s) = state else { return 0.0 };
        let grid = &self.config.r_grid;
        if u <= grid.r_max() {
            grid.interpolate(&s.dz0, u)
        } else if self.zbar_edge > 0.0 {
            -s.z0[s.z0.len() - 1] * self.bundle.sf(u) / self.zbar_edge
        } else {
            0.0
        }
    }

    fn sample_index(&self, t: f64) -> Result<usize> {
        let k = (t / self.config.dt).round();
        if !(t >= 0.0) || k as usize > self.steps {
            return Err(Error::Range(format!("sample time {t} outside [0, {}]", self.steps as f64 * self.config.dt)));
        }
        Ok(k as usize)
    }

    pub fn run(&self, seed: u64) -> Result<DiffusionPath> {
        self.run_with_drivers(&self.drivers(seed), seed)
    }

    pub fn run_with_drivers(&self, drivers: &GaussianDrivers, seed: u64) -> Result<DiffusionPath> {
        let cfg = &self.config;
        let dt = cfg.dt;
        let n = self.steps;
        if drivers.steps != n || drivers.cells != self.noise.cells() {
            return Err(Error::Shape("drivers do not match the model grid".into()));
        }
        let state = self.initial_state(seed);
        let x0 = state.as_ref().map_or(0.0, |s| s.x0);
        let eta: Vec<f64> = (0..=n).map(|k| cfg.sigma * drivers.brownian[k] - cfg.beta * k as f64 * dt).collect();
        let mut zeta: Vec<f64> = (0..=n).map(|k| self.z0_at(state.as_ref(), k as f64 * dt) - drivers.h_one[k]).collect();
        zeta[0] = x0.min(0.0);
        let input = CmsInput { dt, eta, zeta, x0 };
        let (kappa, x) = march(&input, &self.bundle)?;
        let res = cfg.residuals.then(|| residuals(&input, &self.bundle, &kappa, &x, 4));

        let mut samples = Vec::with_capacity(cfg.sample_times.len());
        let mut boundary_error: f64 = 0.0;
        for &t in &cfg.sample_times {
            let idx = self.sample_index(t)?;
            let (z, dz) = if cfg.compute_z { self.assemble_z(drivers, state.as_ref(), &kappa, idx)? } else { (Vec::new(), Vec::new()) };
            if let Some(z0) = z.first() {
                boundary_error = boundary_error.max((z0 - x[idx].min(0.0)).abs());
            }
            samples.push(DiffusionSample { t: idx as f64 * dt, x: x[idx], k: kappa[idx], e: input.eta[idx], z, dz });
        }
        Ok(DiffusionPath {
            beta: cfg.beta,
            sigma: cfg.sigma,
            seed,
            dt,
            r_grid: cfg.r_grid.clone(),
            x0,
            x,
            k: kappa,
            e: input.eta,
            samples,
            drivers: DriverSummary {
                steps: n,
                cells: drivers.cells,
                noise_mass: self.noise.total_mass(),
                brownian_end: drivers.brownian[n],
                h_one_end: drivers.h_one[n],
                h_hazard_end: drivers.h_hazard[n],
            },
            residuals: res,
            boundary_error,
        })
    }

    /// `Z_t` and `Z'_t` on the r-grid at time index `idx`.
    fn assemble_z(&self, drivers: &GaussianDrivers, state: Option<&InitialState>, kappa: &[f64], idx: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut z = Vec::with_capacity(self.config.r_grid.len());
        let mut dz = Vec::with_capacity(self.config.r_grid.len());
        for &r in self.config.r_grid.nodes() {
            let (a, b) = self.occupancy_pair(drivers, state, kappa, idx, r)?;
            z.push(a);
            dz.push(b);
        }
        Ok((z, dz))
    }

    /// `(Z_t(r), Z'_t(r))` at time index `idx` of a path solved from `drivers`.
    pub fn occupancy_at(&self, drivers: &GaussianDrivers, path: &DiffusionPath, idx: usize, r: f64) -> Result<(f64, f64)> {
        let state = self.initial_state(path.seed);
        self.occupancy_pair(drivers, state.as_ref(), &path.k, idx, r)
    }

    /// `Z_t`, `Z'_t` on the whole r-grid for a solved path.
    pub fn occupancy_grid(&self, drivers: &GaussianDrivers, path: &DiffusionPath, idx: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let state = self.initial_state(path.seed);
        self.assemble_z(drivers, state.as_ref(), &path.k, idx)
    }

    fn occupancy_pair(&self, drivers: &GaussianDrivers, state: Option<&InitialState>, kappa: &[f64], idx: usize, r: f64) -> Result<(f64, f64)> {
        let dt = self.config.dt;
        let t = idx as f64 * dt;
        let b = &self.bundle;
        // trapezoid in u over [0, t]; kappa vanishes at u = 0
        let trap = |f: &dyn Fn(f64) -> f64| -> f64 {
            if idx == 0 {
                return 0.0;
            }
            let mut s = 0.5 * f(t) * kappa[idx];
            for (j, kj) in kappa.iter().enumerate().take(idx).skip(1) {
                s += f(j as f64 * dt) * kj;
            }
            s * dt
        };
        let k_t = kappa[idx];
        let m_one = if r == 0.0 {
            drivers.h_one[idx]
        } else {
            mm_integral(drivers, &self.noise, |x, s| b.survival_ratio(x, t + r - s), t)?
        };
        let m_h = if r == 0.0 {
            drivers.h_hazard[idx]
        } else {
            mm_integral(drivers, &self.noise, |x, s| b.density_ratio(x, t + r - s), t)?
        };
        let conv_g = trap(&|u| b.pdf(t - u + r));
        let conv_gp = trap(&|u| b.pdf_prime(t - u + r));
        let z = self.z0_at(state, t + r) - m_one + b.sf(r) * k_t - conv_g;
        let dz = self.dz0_at(state, t + r) + m_h - k_t * b.pdf(r) - conv_gp;
        Ok((z, dz))
    }

    /// Index of the time node nearest `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.sample_index(t)
    }
}

/// Draws drivers for `config` with the configuration seed.
pub fn simulate_drivers(config: &DiffusionConfig) -> Result<GaussianDrivers> {
    Ok(DiffusionModel::new(config.clone())?.drivers(config.seed))
}

pub fn run_diffusion(config: &DiffusionConfig) -> Result<DiffusionPath> {
    DiffusionModel::new(config.clone())?.run(config.seed)
}
