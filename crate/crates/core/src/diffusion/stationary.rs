use rayon::prelude::*;

use super::model::{DiffusionConfig, DiffusionModel};
use crate::error::{Error, Result};
use crate::rng::seed_split;
use crate::stats::{collect_laws, EmpiricalLaw, Functional, Sampling};

/// Draws of each functional of the limit process after `burn_in`, over
/// independent runs with seeds split from `config.seed`.
///
/// `Z` functionals cost one white-noise sum per draw and r-node; the H1 norm
/// needs the whole grid and is slow.
pub fn estimate_diffusion_stationary(config: &DiffusionConfig, sampling: &Sampling, functionals: &[Functional]) -> Result<Vec<EmpiricalLaw>> {
    sampling.validate()?;
    if functionals.contains(&Functional::QueueLength) {
        return Err(Error::Usage("the limit process has no unscaled queue length".into()));
    }
    let mut cfg = config.clone().fast();
    cfg.horizon = sampling.horizon();
    cfg.sample_times = Vec::new();
    let model = DiffusionModel::new(cfg)?;
    let indices = sampling.times().iter().map(|&t| model.index_of(t)).collect::<Result<Vec<_>>>()?;
    let grid = &config.r_grid;
    let per_run: Vec<Vec<Vec<f64>>> = (0..sampling.runs())
        .into_par_iter()
        .map(|r| {
            let seed = seed_split(config.seed, r as u64);
            let drivers = model.drivers(seed);
            let path = model.run_with_drivers(&drivers, seed)?;
            indices
                .iter()
                .map(|&idx| {
                    let x = path.x[idx];
                    functionals
                        .iter()
                        .map(|f| match *f {
                            Functional::Z { r } => Ok(model.occupancy_at(&drivers, &path, idx, r)?.0),
                            Functional::H1Norm => {
                                let (z, dz) = model.occupancy_grid(&drivers, &path, idx)?;
                                f.evaluate(x, x, &z, &dz, grid)
                            }
                            _ => f.evaluate(x, x, &[], &[], grid),
                        })
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    collect_laws(functionals, per_run, sampling.draws)
}
