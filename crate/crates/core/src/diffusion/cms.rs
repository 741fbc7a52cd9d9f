use serde::Serialize;

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};

/// Inputs of the centered many-server map on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CmsInput {
    pub dt: f64,
    pub eta: Vec<f64>,
    pub zeta: Vec<f64>,
    pub x0: f64,
}

/// Output `(kappa, x)` with the residuals of both defining equations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmsSolution {
    pub kappa: Vec<f64>,
    pub x: Vec<f64>,
    pub residual_boundary: f64,
    pub residual_entry: f64,
}

impl CmsSolution {
    pub fn kappa_sup(&self) -> f64 {
        self.kappa.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl CmsInput {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", self.dt)));
        }
        if self.eta.len() != self.zeta.len() || self.eta.is_empty() {
            return Err(Error::Shape(format!(
                "eta has {} nodes, zeta has {}",
                self.eta.len(),
                self.zeta.len()
            )));
        }
        if self.eta[0] != 0.0 {
            return Err(Error::Config(format!("eta(0) must be 0, got {}", self.eta[0])));
        }
        let lower = self.x0.min(0.0);
        if (self.zeta[0] - lower).abs() > 1e-9 * (1.0 + lower.abs()) {
            return Err(Error::Config(format!("zeta(0)={} differs from min(x0, 0)={lower}", self.zeta[0])));
        }
        Ok(())
    }
}

/// Density sampled at lags `0, dt, ..., n dt`.
pub fn density_lags(bundle: &DistributionBundle, dt: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|j| bundle.pdf(j as f64 * dt)).collect()
}

/// Forward trapezoidal solve. At each node the unknown enters through the
/// diagonal weight `g(0) dt / 2`, leaving a scalar piecewise-linear
/// equation solved by splitting on the sign of `x`.
pub fn solve_cms(input: &CmsInput, bundle: &DistributionBundle) -> Result<CmsSolution> {
    let (kappa, x) = march(input, bundle)?;
    let (residual_boundary, residual_entry) = residuals(input, bundle, &kappa, &x, 4);
    Ok(CmsSolution { kappa, x, residual_boundary, residual_entry })
}

/// The forward solve alone, without the residual pass.
pub(crate) fn march(input: &CmsInput, bundle: &DistributionBundle) -> Result<(Vec<f64>, Vec<f64>)> {
    input.validate()?;
    let n = input.eta.len() - 1;
    let dt = input.dt;
    let lags = density_lags(bundle, dt, n);
    let diag = 0.5 * lags[0] * dt;
    if !(diag < 1.0) {
        return Err(Error::StepSize(format!("g(0) dt / 2 = {diag} must be below 1")));
    }
    let x0_pos = input.x0.max(0.0);
    let mut kappa = vec![0.0; n + 1];
    let mut x = vec![0.0; n + 1];
    x[0] = input.x0;
    for k in 1..=n {
        let partial: f64 = (1..k).map(|j| lags[k - j] * kappa[j]).sum::<f64>() * dt;
        let a = input.zeta[k] - partial + (1.0 - diag) * (input.eta[k] + x0_pos);
        let xk = if a >= 0.0 { a / (1.0 - diag) } else { a };
        x[k] = xk;
        kappa[k] = input.eta[k] - xk.max(0.0) + x0_pos;
    }
    Ok((kappa, x))
}

/// Max residuals of both equations, with the convolution recomputed by
/// composite Simpson on `refine` sub-cells of the piecewise-linear `kappa`.
pub fn residuals(input: &CmsInput, bundle: &DistributionBundle, kappa: &[f64], x: &[f64], refine: usize) -> (f64, f64) {
    let n = kappa.len() - 1;
    let refine = refine.max(1) * 2;
    let h = input.dt / refine as f64;
    let fine: Vec<f64> = (0..=n * refine).map(|j| bundle.pdf(j as f64 * h)).collect();
    let weights: Vec<f64> = (0..=refine)
        .map(|j| if j == 0 || j == refine { 1.0 } else if j % 2 == 1 { 4.0 } else { 2.0 })
        .map(|w| w * h / 3.0)
        .collect();
    let x0_pos = input.x0.max(0.0);
    let mut boundary: f64 = 0.0;
    let mut entry: f64 = 0.0;
    for k in 0..=n {
        let mut conv = 0.0;
        for j in 0..k {
            let (a, b) = (kappa[j], kappa[j + 1]);
            for (q, w) in weights.iter().enumerate() {
                let frac = q as f64 / refine as f64;
                let lag = (k - j) * refine - q;
                conv += w * fine[lag] * (a + (b - a) * frac);
            }
        }
        boundary = boundary.max((x[k].min(0.0) - input.zeta[k] - kappa[k] + conv).abs());
        entry = entry.max((kappa[k] - input.eta[k] + x[k].max(0.0) - x0_pos).abs());
    }
    (boundary, entry)
}
