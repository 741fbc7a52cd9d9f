//! Numerical simulation of the limit process: Gaussian drivers, white-noise
//! convolutions, the centered many-server map and occupancy assembly.

mod cms;
mod model;
mod noise;
mod scalar;
mod stationary;

pub use cms::{density_lags, residuals, solve_cms, CmsInput, CmsSolution};
pub use model::{
    run_diffusion, simulate_drivers, DiffusionConfig, DiffusionInit, DiffusionModel, DiffusionPath, DiffusionSample,
    DriverSummary, InitialState,
};
pub use noise::{mm_integral, GaussianDrivers, NoiseGrid};
pub use scalar::ScalarDiffusion;
pub use stationary::estimate_diffusion_stationary;
