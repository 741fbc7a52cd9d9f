use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, seed_split};

/// Sorted one-dimensional sample of a labelled functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    pub label: String,
    /// number of independent runs the sample came from
    pub replications: usize,
    /// mean lag-one autocorrelation within runs, when runs hold several draws
    #[serde(default)]
    pub autocorrelation: Option<f64>,
    values: Vec<f64>,
}

impl EmpiricalLaw {
    /// Sorts `values`; NaN is rejected.
    pub fn new(label: impl Into<String>, mut values: Vec<f64>, replications: usize) -> Result<Self> {
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Usage("empirical sample contains NaN".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalLaw { label: label.into(), replications, autocorrelation: None, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Right-continuous ECDF `#{v <= x} / n`.
    pub fn ecdf(&self, x: f64) -> f64 {
        self.values.partition_point(|&v| v <= x) as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.len() as f64).sqrt()
    }

    /// Type-7 linear-interpolation quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        quantile_sorted(&self.values, p)
    }

    /// Applies `f` to every value and relabels.
    pub fn map(&self, label: impl Into<String>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = EmpiricalLaw::new(label, self.values.iter().map(|&v| f(v)).collect(), self.replications)?;
        out.autocorrelation = self.autocorrelation;
        Ok(out)
    }

    /// Percentile bootstrap of the mean.
    pub fn bootstrap_mean(&self, resamples: usize, seed: u64) -> Bootstrap {
        bootstrap(resamples, seed, |rng| {
            let n = self.len();
            (0..n).map(|_| self.values[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .with_point(self.mean())
    }
}

pub(crate) fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap summary of a statistic: point value, standard error and
/// 95% percentile interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub point: f64,
    pub std_error: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bootstrap {
    fn with_point(mut self, point: f64) -> Self {
        self.point = point;
        self
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.upper - self.lower)
    }
}

fn bootstrap(resamples: usize, seed: u64, stat: impl Fn(&mut crate::rng::SimRng) -> f64 + Sync) -> Bootstrap {
    let mut reps: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|i| stat(&mut rng_from_seed(seed_split(seed, i as u64))))
        .collect();
    reps.sort_by(f64::total_cmp);
    let n = reps.len().max(1) as f64;
    let m = reps.iter().sum::<f64>() / n;
    let var = reps.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0).max(1.0);
    Bootstrap { point: m, std_error: var.sqrt(), lower: quantile_sorted(&reps, 0.025), upper: quantile_sorted(&reps, 0.975) }
}

/// Two-sample Kolmogorov-Smirnov distance of sorted samples.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    sup
}

/// One-sample Kolmogorov-Smirnov distance of a sorted sample from a
/// continuous CDF.
pub fn ks_against_cdf(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |sup: f64, (i, &x)| {
        let f = cdf(x);
        sup.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Wasserstein-1 distance `int |F_a - F_b|` of sorted samples.
pub fn w1_distance(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        if let Some(p) = prev {
            total += (i as f64 / na - j as f64 / nb).abs() * (x - p);
        }
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        prev = Some(x);
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub label: String,
    pub n_a: usize,
    pub n_b: usize,
    pub ks: f64,
    pub w1: f64,
    pub mean_delta: f64,
    pub variance_delta: f64,
    pub ks_bootstrap: Bootstrap,
    pub w1_bootstrap: Bootstrap,
    pub resamples: usize,
}

pub const DEFAULT_RESAMPLES: usize = 1000;

pub fn compare(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<ComparisonReport> {
    compare_with(a, b, DEFAULT_RESAMPLES, 0)
}

/// KS and W1 between two laws of the same functional, with percentile
/// bootstrap intervals from independent resampling of both samples.
pub fn compare_with(a: &EmpiricalLaw, b: &EmpiricalLaw, resamples: usize, seed: u64) -> Result<ComparisonReport> {
    if a.label != b.label {
        return Err(Error::Usage(format!("cannot compare `{}` with `{}`", a.label, b.label)));
    }
    if a.is_empty() || b.is_empty() {
        return Err(Error::Usage("cannot compare an empty sample".into()));
    }
    let (va, vb) = (a.values(), b.values());
    let resample = |rng: &mut crate::rng::SimRng, v: &[f64]| {
        let mut out: Vec<f64> = (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).collect();
        out.sort_by(f64::total_cmp);
        out
    };
    let pairs: Vec<(f64, f64)> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(seed_split(seed, i as u64));
            let (ra, rb) = (resample(&mut rng, va), resample(&mut rng, vb));
            (ks_distance(&ra, &rb), w1_distance(&ra, &rb))
        })
        .collect();
    let summarize = |mut reps: Vec<f64>, point: f64| {
        reps.sort_by(f64::total_cmp);
        let n = reps.len().max(1) as f64;
        let m = reps.iter().sum::<f64>() / n;
        let var = reps.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0).max(1.0);
        Bootstrap { point, std_error: var.sqrt(), lower: quantile_sorted(&reps, 0.025), upper: quantile_sorted(&reps, 0.975) }
    };
    let ks = ks_distance(va, vb);
    let w1 = w1_distance(va, vb);
    Ok(ComparisonReport {
        label: a.label.clone(),
        n_a: a.len(),
        n_b: b.len(),
        ks,
        w1,
        mean_delta: a.mean() - b.mean(),
        variance_delta: a.variance() - b.variance(),
        ks_bootstrap: summarize(pairs.iter().map(|p| p.0).collect(), ks),
        w1_bootstrap: summarize(pairs.iter().map(|p| p.1).collect(), w1),
        resamples,
    })
}
