use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};

/// Partition of `[0, inf)` into cells of equal `g`-measure. Kernels are
/// evaluated at the `g`-barycenter of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGrid {
    /// cell boundaries, `edges[0] = 0`, last edge `+inf`
    pub edges: Vec<f64>,
    pub barycenters: Vec<f64>,
    /// `g`-measure of each cell
    pub mass: Vec<f64>,
}

impl NoiseGrid {
    pub fn quantile(bundle: &DistributionBundle, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Config("noise grid needs at least one cell".into()));
        }
        let m = cells as f64;
        let mut edges: Vec<f64> = (0..cells).map(|i| bundle.service_from_uniform(1.0 - i as f64 / m)).collect();
        edges[0] = 0.0;
        edges.push(f64::INFINITY);
        // int_a^b x g = [x Gbar + Zbar]_b^a
        let moment = |x: f64| if x.is_infinite() { 0.0 } else { x * bundle.sf(x) + bundle.zbar(x) };
        let mut barycenters = Vec::with_capacity(cells);
        let mut mass = Vec::with_capacity(cells);
        for i in 0..cells {
            let (a, b) = (edges[i], edges[i + 1]);
            let w = bundle.sf(a) - if b.is_infinite() { 0.0 } else { bundle.sf(b) };
            let c = (moment(a) - moment(b)) / w;
            mass.push(w);
            barycenters.push(c.clamp(a, if b.is_infinite() { f64::MAX } else { b }));
        }
        Ok(NoiseGrid { edges, barycenters, mass })
    }

    pub fn cells(&self) -> usize {
        self.mass.len()
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Largest finite cell width.
    pub fn max_finite_width(&self) -> f64 {
        self.edges.windows(2).filter(|w| w[1].is_finite()).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Brownian path and discretized space-time white noise for one
/// replication, with the two stochastic convolutions used by the model.
#[derive(Debug, Clone)]
pub struct GaussianDrivers {
    pub dt: f64,
    pub steps: usize,
    /// `B(t_k)`, `k = 0..=steps`
    pub brownian: Vec<f64>,
    /// cell-major increments: `field[i * steps + k]` has variance `mass_i dt`
    pub field: Vec<f64>,
    pub cells: usize,
    /// `H_{t_k}(1)`
    pub h_one: Vec<f64>,
    /// `H_{t_k}(h)`
    pub h_hazard: Vec<f64>,
}

impl GaussianDrivers {
    pub fn increment(&self, cell: usize, step: usize) -> f64 {
        self.field[cell * self.steps + step]
    }

    /// Time `t_k = k dt`.
    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

/// Precomputed kernel spectra for the convolutions `H(1)` and `H(h)`.
pub(crate) struct ConvolutionPlan {
    len: usize,
    steps: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    one: Vec<Vec<Complex64>>,
    hazard: Vec<Vec<Complex64>>,
}

impl ConvolutionPlan {
    pub fn new(bundle: &DistributionBundle, noise: &NoiseGrid, dt: f64, steps: usize) -> Self {
        let len = (2 * steps + 2).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let spectrum = |f: &dyn Fn(usize) -> f64| {
            let mut buf: Vec<Complex64> = (0..len).map(|m| Complex64::new(if m >= 1 && m <= steps { f(m) } else { 0.0 }, 0.0)).collect();
            forward.process(&mut buf);
            buf
        };
        let mut one = Vec::with_capacity(noise.cells());
        let mut hazard = Vec::with_capacity(noise.cells());
        for &x in &noise.barycenters {
            // lag m covers a cell whose midpoint lies (m - 1/2) dt in the past
            one.push(spectrum(&|m| bundle.survival_ratio(x, (m as f64 - 0.5) * dt)));
            hazard.push(spectrum(&|m| bundle.density_ratio(x, (m as f64 - 0.5) * dt)));
        }
        ConvolutionPlan { len, steps, forward, inverse, one, hazard }
    }

    /// `(H(1), H(h))` on the time grid from cell-major increments.
    pub fn convolve(&self, field: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut acc_one = vec![Complex64::new(0.0, 0.0); self.len];
        let mut acc_h = vec![Complex64::new(0.0, 0.0); self.len];
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len];
        for (i, row) in field.chunks(self.steps).enumerate() {
            for (b, w) in buf.iter_mut().zip(row) {
                *b = Complex64::new(*w, 0.0);
            }
            for b in buf[row.len()..].iter_mut() {
                *b = Complex64::new(0.0, 0.0);
            }
            self.forward.process(&mut buf);
            for ((a, k), b) in acc_one.iter_mut().zip(&self.one[i]).zip(&buf) {
                *a += k * b;
            }
            for ((a, k), b) in acc_h.iter_mut().zip(&self.hazard[i]).zip(&buf) {
                *a += k * b;
            }
        }
        self.inverse.process(&mut acc_one);
        self.inverse.process(&mut acc_h);
        let scale = 1.0 / self.len as f64;
        // output index n holds sum_{k < n} kernel(n - k) W(k)
        let take = |v: &[Complex64]| (0..=self.steps).map(|n| if n == 0 { 0.0 } else { v[n].re * scale }).collect();
        (take(&acc_one), take(&acc_h))
    }
}

pub(crate) fn draw_field<R: Rng + ?Sized>(noise: &NoiseGrid, dt: f64, steps: usize, rng: &mut R) -> Vec<f64> {
    let mut field = Vec::with_capacity(noise.cells() * steps);
    for &m in &noise.mass {
        let sd = (m * dt).sqrt();
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            field.push(sd * z);
        }
    }
    field
}

pub(crate) fn draw_brownian<R: Rng + ?Sized>(dt: f64, steps: usize, rng: &mut R) -> Vec<f64> {
    let sd = dt.sqrt();
    let mut b = Vec::with_capacity(steps + 1);
    b.push(0.0);
    let mut acc = 0.0;
    for _ in 0..steps {
        let z: f64 = rng.sample(StandardNormal);
        acc += sd * z;
        b.push(acc);
    }
    b
}

/// `sum_{i, k : t_{k+1} <= t} kernel(x_i, s_k) W(i, k)` with `s_k` the
/// midpoint of time cell `k` and `x_i` the barycenter of space cell `i`.
pub fn mm_integral(drivers: &GaussianDrivers, noise: &NoiseGrid, kernel: impl Fn(f64, f64) -> f64, t: f64) -> Result<f64> {
    let horizon = drivers.time(drivers.steps);
    if t < 0.0 || t > horizon * (1.0 + 1e-12) + 1e-12 {
        return Err(Error::Range(format!("t={t} outside [0, {horizon}]")));
    }
    let upto = ((t / drivers.dt) + 1e-9).floor() as usize;
    let upto = upto.min(drivers.steps);
    let mut total = 0.0;
    for (i, &x) in noise.barycenters.iter().enumerate() {
        let row = &drivers.field[i * drivers.steps..i * drivers.steps + upto];
        for (k, w) in row.iter().enumerate() {
            total += kernel(x, (k as f64 + 0.5) * drivers.dt) * w;
        }
    }
    Ok(total)
}
