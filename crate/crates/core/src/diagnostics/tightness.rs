use serde::Serialize;

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::kernels::{h1_norm, l2_norm_window, tail_envelope, RGrid};
use crate::queue::ScaledPath;
use crate::stats::EmpiricalLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSummary {
    pub mean: f64,
    pub std_error: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
}

impl NormSummary {
    fn of(values: Vec<f64>) -> Result<Self> {
        let law = EmpiricalLaw::new("norm", values, 0)?;
        Ok(NormSummary {
            mean: law.mean(),
            std_error: law.std_error(),
            q50: law.quantile(0.5),
            q90: law.quantile(0.9),
            q99: law.quantile(0.99),
        })
    }
}

/// Norms over `(0, upper)` and the truncated tail `(upper, r_max)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowNorms {
    pub upper: f64,
    pub z: NormSummary,
    pub dz: NormSummary,
    pub tail: NormSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileEntry {
    pub servers: usize,
    pub t: f64,
    pub replications: usize,
    pub windows: Vec<WindowNorms>,
    pub h1: NormSummary,
    /// analytic bound on the H1 norm beyond the grid edge
    pub beyond_grid: NormSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessProfile {
    pub nodes: Vec<f64>,
    /// pooled `E[Zhat(r)^2]` over all samples
    pub mean_square: Vec<f64>,
    pub mean_square_se: Vec<f64>,
    /// reference envelope `int_r^inf Gbar`
    pub reference: Vec<f64>,
    /// smallest `c` with `mean_square <= c * reference` on the grid
    pub envelope_constant: f64,
    /// max over r of `(mean_square - reference) / se`; at most 3 means the
    /// reference envelope holds within noise
    pub reference_excess: f64,
    pub entries: Vec<ProfileEntry>,
    /// per ladder value: mean tail norm at the largest `N` exceeds the one
    /// at the smallest `N` by more than three standard errors
    pub tail_grows_with_n: Vec<bool>,
}

fn check_grid(paths: &[ScaledPath]) -> Result<&RGrid> {
    let first = paths.first().ok_or_else(|| Error::Usage("tightness profile needs at least one path".into()))?;
    for p in paths {
        if p.r_grid != first.r_grid {
            return Err(Error::Shape("paths do not share one r-grid".into()));
        }
        if p.z_hat.iter().chain(&p.dz_hat).any(|z| z.len() != first.r_grid.len()) {
            return Err(Error::Shape("occupancy values do not match the r-grid".into()));
        }
    }
    Ok(&first.r_grid)
}

/// Windowed norm profile over a ladder of window ends, grouped by server
/// count and sample time, with the pooled mean-square profile.
pub fn tightness_profile(paths: &[ScaledPath], ladder: &[f64], service: &DistributionBundle) -> Result<TightnessProfile> {
    let grid = check_grid(paths)?;
    let r_max = grid.r_max();
    let m = grid.len();

    let mut keys: Vec<(usize, u64)> = Vec::new();
    for p in paths {
        for &t in &p.times {
            if !keys.contains(&(p.servers, t.to_bits())) {
                keys.push((p.servers, t.to_bits()));
            }
        }
    }

    let mut sum_sq = vec![0.0; m];
    let mut sum_quad = vec![0.0; m];
    let mut count = 0usize;
    let mut entries = Vec::with_capacity(keys.len());
    for &(servers, bits) in &keys {
        let samples: Vec<(&Vec<f64>, &Vec<f64>)> = paths
            .iter()
            .filter(|p| p.servers == servers)
            .flat_map(|p| p.times.iter().zip(p.z_hat.iter().zip(&p.dz_hat)).filter(|(t, _)| t.to_bits() == bits).map(|(_, zd)| zd))
            .collect();
        let mut windows = Vec::with_capacity(ladder.len());
        for &upper in ladder {
            let mut zn = Vec::with_capacity(samples.len());
            let mut dn = Vec::with_capacity(samples.len());
            let mut tn = Vec::with_capacity(samples.len());
            for (z, dz) in &samples {
                let inner = l2_norm_window(z, grid, upper)?;
                let full = l2_norm_window(z, grid, r_max)?;
                zn.push(inner);
                dn.push(l2_norm_window(dz, grid, upper)?);
                tn.push((full * full - inner * inner).max(0.0).sqrt());
            }
            windows.push(WindowNorms { upper, z: NormSummary::of(zn)?, dz: NormSummary::of(dn)?, tail: NormSummary::of(tn)? });
        }
        let mut h1 = Vec::with_capacity(samples.len());
        let mut beyond = Vec::with_capacity(samples.len());
        for (z, dz) in &samples {
            h1.push(h1_norm(z, dz, grid)?);
            beyond.push(tail_envelope(service, z[m - 1], r_max).sqrt());
            for i in 0..m {
                sum_sq[i] += z[i] * z[i];
                sum_quad[i] += z[i].powi(4);
            }
            count += 1;
        }
        entries.push(ProfileEntry {
            servers,
            t: f64::from_bits(bits),
            replications: samples.len(),
            windows,
            h1: NormSummary::of(h1)?,
            beyond_grid: NormSummary::of(beyond)?,
        });
    }

    let c = count.max(1) as f64;
    let mean_square: Vec<f64> = sum_sq.iter().map(|s| s / c).collect();
    let mean_square_se: Vec<f64> = sum_quad.iter().zip(&mean_square).map(|(q, ms)| ((q / c - ms * ms).max(0.0) / c).sqrt()).collect();
    let reference: Vec<f64> = grid.nodes().iter().map(|&r| service.zbar(r)).collect();
    let envelope_constant = mean_square
        .iter()
        .zip(&reference)
        .filter(|(_, r)| **r > 0.0)
        .map(|(ms, r)| ms / r)
        .fold(0.0, f64::max);
    let reference_excess = mean_square
        .iter()
        .zip(&reference)
        .zip(&mean_square_se)
        .map(|((ms, r), se)| if *se > 0.0 { (ms - r) / se } else if ms > r { f64::INFINITY } else { f64::NEG_INFINITY })
        .fold(f64::NEG_INFINITY, f64::max);

    let tail_grows_with_n = (0..ladder.len())
        .map(|w| {
            let lo = entries.iter().min_by_key(|e| e.servers);
            let hi = entries.iter().max_by_key(|e| e.servers);
            match (lo, hi) {
                (Some(a), Some(b)) if a.servers != b.servers => {
                    let (ta, tb) = (a.windows[w].tail, b.windows[w].tail);
                    tb.mean - ta.mean > 3.0 * ta.std_error.hypot(tb.std_error)
                }
                _ => false,
            }
        })
        .collect();

    Ok(TightnessProfile {
        nodes: grid.nodes().to_vec(),
        mean_square,
        mean_square_se,
        reference,
        envelope_constant,
        reference_excess,
        entries,
        tail_grows_with_n,
    })
}
