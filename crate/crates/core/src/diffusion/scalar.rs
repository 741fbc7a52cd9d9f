use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::numeric::special::normal_cdf;
use crate::rng::{rng_from_seed, seed_split};

/// One-dimensional reduction valid for exponential service:
/// `dX = (-beta - min(X, 0)) dt + sqrt(1 + sigma^2) dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarDiffusion {
    pub beta: f64,
    pub sigma: f64,
}

impl ScalarDiffusion {
    pub fn new(beta: f64, sigma: f64) -> Self {
        ScalarDiffusion { beta, sigma }
    }

    fn volatility(&self) -> f64 {
        (1.0 + self.sigma * self.sigma).sqrt()
    }

    pub fn drift(&self, x: f64) -> f64 {
        -self.beta - x.min(0.0)
    }

    /// Euler-Maruyama value at `t` from `x0`.
    pub fn simulate<R: Rng + ?Sized>(&self, x0: f64, t: f64, dt: f64, rng: &mut R) -> f64 {
        let steps = (t / dt).round().max(1.0) as usize;
        let h = t / steps as f64;
        let sd = self.volatility() * h.sqrt();
        let mut x = x0;
        for _ in 0..steps {
            let z: f64 = rng.sample(StandardNormal);
            x += self.drift(x) * h + sd * z;
        }
        x
    }

    /// Independent Euler-Maruyama draws of `X_t`, one seed per draw.
    pub fn marginal(&self, x0: f64, t: f64, dt: f64, draws: usize, seed: u64) -> Vec<f64> {
        (0..draws)
            .into_par_iter()
            .map(|i| self.simulate(x0, t, dt, &mut rng_from_seed(seed_split(seed, i as u64))))
            .collect()
    }

    /// Masses of the stationary law on `(-inf, 0)` and `[0, inf)`, unnormalized.
    fn masses(&self) -> (f64, f64) {
        let c = 2.0 / (1.0 + self.sigma * self.sigma);
        let b = self.beta;
        let neg = (0.5 * c * b * b).exp() * (2.0 * std::f64::consts::PI / c).sqrt() * normal_cdf(c.sqrt() * b);
        let pos = if b > 0.0 { 1.0 / (c * b) } else { f64::INFINITY };
        (neg, pos)
    }

    /// Stationary distribution function; requires `beta > 0`.
    pub fn stationary_cdf(&self, x: f64) -> f64 {
        let c = 2.0 / (1.0 + self.sigma * self.sigma);
        let b = self.beta;
        let (neg, pos) = self.masses();
        let total = neg + pos;
        if x < 0.0 {
            (0.5 * c * b * b).exp() * (2.0 * std::f64::consts::PI / c).sqrt() * normal_cdf(c.sqrt() * (x + b)) / total
        } else {
            (neg + (1.0 - (-c * b * x).exp()) / (c * b)) / total
        }
    }

    /// Stationary `P(X > 0)`.
    pub fn stationary_positive_mass(&self) -> f64 {
        let (neg, pos) = self.masses();
        pos / (neg + pos)
    }

    pub fn stationary_density(&self, x: f64) -> f64 {
        let c = 2.0 / (1.0 + self.sigma * self.sigma);
        let b = self.beta;
        let (neg, pos) = self.masses();
        let un = if x >= 0.0 { (-c * b * x).exp() } else { (-c * (b * x + 0.5 * x * x)).exp() };
        un / (neg + pos)
    }
}
