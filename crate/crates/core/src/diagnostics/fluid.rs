use serde::Serialize;

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::kernels::{l2_norm_window, RGrid};
use crate::queue::FluidPath;

/// Per-sample distances of a fluid-scaled path from the fluid limit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluidDeviation {
    pub times: Vec<f64>,
    /// `|X / N - 1|`
    pub x: Vec<f64>,
    /// grid L2 distance of `Z / N` to `Zbar`
    pub z_l2: Vec<f64>,
    /// `|E / N - (lambda / N) t|`
    pub e: Vec<f64>,
}

/// `arrival_ratio` is `lambda / N`.
pub fn fluid_deviation(path: &FluidPath, grid: &RGrid, bundle: &DistributionBundle, arrival_ratio: f64) -> Result<FluidDeviation> {
    let fluid: Vec<f64> = grid.nodes().iter().map(|&r| if r == 0.0 { bundle.mean() } else { bundle.zbar(r) }).collect();
    let mut z_l2 = Vec::with_capacity(path.times.len());
    for z in &path.z_bar {
        if z.len() != grid.len() {
            return Err(Error::Shape(format!("occupancy has {} values on a {}-node grid", z.len(), grid.len())));
        }
        let diff: Vec<f64> = z.iter().zip(&fluid).map(|(a, b)| a - b).collect();
        z_l2.push(l2_norm_window(&diff, grid, grid.r_max())?);
    }
    Ok(FluidDeviation {
        times: path.times.clone(),
        x: path.x_bar.iter().map(|x| (x - 1.0).abs()).collect(),
        z_l2,
        e: path.e_bar.iter().zip(&path.times).map(|(e, t)| (e - arrival_ratio * t).abs()).collect(),
    })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Shape("slope needs two or more matching points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Usage("log-log slope needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Ok(sxy / sxx)
}
