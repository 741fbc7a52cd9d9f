//! Age-shift operators and the map from in-service ages to the
//! residual-occupancy function `r -> sum_j Gbar(a_j + r) / Gbar(a_j)`.

mod grid;

pub use grid::RGrid;

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};

/// Ages of the jobs currently in service.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgeVector(pub Vec<f64>);

impl AgeVector {
    pub fn new(ages: Vec<f64>) -> Self {
        AgeVector(ages)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }
}

impl From<Vec<f64>> for AgeVector {
    fn from(v: Vec<f64>) -> Self {
        AgeVector(v)
    }
}

/// Age shift `f(x + t) Gbar(x + t) / Gbar(x)`.
pub fn phi(bundle: &DistributionBundle, t: f64, f: impl Fn(f64) -> f64, x: f64) -> f64 {
    if t <= 0.0 {
        return f(x);
    }
    f(x + t) * bundle.survival_ratio(x, t)
}

/// Time-dependent shift `f(x + (t - s)^+) Gbar(x + (t - s)^+) / Gbar(x)`.
pub fn psi(bundle: &DistributionBundle, t: f64, f: impl Fn(f64) -> f64, x: f64, s: f64) -> f64 {
    phi(bundle, (t - s).max(0.0), f, x)
}

/// `r_k -> sum_j Gbar(a_j + r_k) / Gbar(a_j)`; equals the age count at `r = 0`.
pub fn t_map(bundle: &DistributionBundle, ages: &AgeVector, grid: &RGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for &a in ages.iter() {
        for (o, &r) in out.iter_mut().zip(grid.nodes()) {
            *o += bundle.survival_ratio(a, r);
        }
    }
    out
}

/// `r_k -> -sum_j g(a_j + r_k) / Gbar(a_j)`.
pub fn t_map_derivative(bundle: &DistributionBundle, ages: &AgeVector, grid: &RGrid) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    for &a in ages.iter() {
        for (o, &r) in out.iter_mut().zip(grid.nodes()) {
            *o -= bundle.density_ratio(a, r);
        }
    }
    out
}

fn check_len(grid: &RGrid, seqs: &[&[f64]]) -> Result<()> {
    for s in seqs {
        if s.len() != grid.len() {
            return Err(Error::Shape(format!("sequence of length {} on a grid of {} nodes", s.len(), grid.len())));
        }
    }
    Ok(())
}

/// Trapezoidal `<f, g>_{L2} + <f', g'>_{L2}` over the grid.
pub fn h1_inner(f: &[f64], df: &[f64], g: &[f64], dg: &[f64], grid: &RGrid) -> Result<f64> {
    check_len(grid, &[f, df, g, dg])?;
    Ok(grid
        .weights()
        .iter()
        .enumerate()
        .map(|(k, w)| w * (f[k] * g[k] + df[k] * dg[k]))
        .sum())
}

pub fn h1_norm(f: &[f64], df: &[f64], grid: &RGrid) -> Result<f64> {
    Ok(h1_inner(f, df, f, df, grid)?.max(0.0).sqrt())
}

/// Trapezoidal L2 norm over `[0, upper]` (nodes beyond `upper` ignored).
pub fn l2_norm_window(f: &[f64], grid: &RGrid, upper: f64) -> Result<f64> {
    check_len(grid, &[f])?;
    let nodes = grid.nodes();
    let mut acc = 0.0;
    for k in 1..nodes.len() {
        if nodes[k] > upper + 1e-12 {
            break;
        }
        acc += 0.5 * (nodes[k] - nodes[k - 1]) * (f[k] * f[k] + f[k - 1] * f[k - 1]);
    }
    Ok(acc.sqrt())
}

/// Bound on the squared H1 norm beyond `r_max` of a function whose value
/// at `r_max` is `edge` and which decays like the integrated survival
/// `int_r^inf Gbar` from there on.
pub fn tail_envelope(bundle: &DistributionBundle, edge: f64, r_max: f64) -> f64 {
    let z = bundle.zbar(r_max);
    if z <= 0.0 || edge == 0.0 {
        return 0.0;
    }
    // int Zbar^2 <= Zbar(r_max) int Zbar and int Gbar^2 <= Gbar(r_max) Zbar(r_max)
    let span = bundle.inverse_ln_sf(-30.0).max(r_max) - r_max;
    let int_z = crate::numeric::quad::integrate(|r| bundle.zbar(r), r_max, r_max + span, 1e-12);
    edge * edge * (int_z / z + bundle.sf(r_max) / z)
}

#[cfg(test)]
mod tests;
