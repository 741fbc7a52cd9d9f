use serde::{Deserialize, Serialize};

use crate::dist::DistributionBundle;
use crate::error::{Error, Result};
use crate::queue::QueuePath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditOptions {
    /// largest Simpson step along each job's age line
    pub step: f64,
    /// pass threshold on the relative discrepancy
    pub tolerance: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { step: 0.05, tolerance: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub servers: usize,
    pub times: Vec<f64>,
    pub step: f64,
    /// max over r of `|Zhat_direct - Zhat_rebuilt|`, per sample time
    pub discrepancy: Vec<f64>,
    pub max_discrepancy: f64,
    /// `max(1, sup |Zhat|)` over audited samples
    pub scale: f64,
    pub relative: f64,
    /// for exponential service, max relative gap to `e^{-r} min(X, N)`
    pub exponential_collapse: Option<f64>,
    pub passed: bool,
}

/// Rebuilds the occupancy at each sample time from the job log, as
/// initial occupancy shifted by `t`, minus the compensated departures
/// weighted by `Gbar(a + t + r - s) / Gbar(a)`, plus the survivals of the
/// jobs that entered in `(0, t]`, and compares with the sampled values.
pub fn identity_audit(path: &QueuePath, service: &DistributionBundle, options: &AuditOptions) -> Result<AuditReport> {
    let jobs = path.jobs().ok_or_else(|| Error::Usage("identity audit needs a path run with record_events".into()))?;
    if path.samples.first().is_some_and(|s| s.z.len() != path.r_grid.len()) {
        return Err(Error::Usage("identity audit needs occupancy values at sample times".into()));
    }
    let initial = path.initial_ages()?;
    let root = (path.servers as f64).sqrt();
    let nodes = path.r_grid.nodes();
    let mut discrepancy = Vec::with_capacity(path.samples.len());
    let mut scale: f64 = 1.0;
    let mut collapse: f64 = 0.0;
    let exponential = service.is_exponential();
    for s in &path.samples {
        let t = s.t;
        let mut worst: f64 = 0.0;
        for (i, &r) in nodes.iter().enumerate() {
            let shifted: f64 = initial.iter().map(|&a| service.survival_ratio(a, t + r)).sum();
            let martingale = path.compensated_departure(service, |a, u| service.survival_ratio(a, t + r - u), t, options.step)?;
            let entered: f64 = jobs
                .iter()
                .filter(|j| j.entered() && j.entry > 0.0 && j.entry <= t)
                .map(|j| service.sf(t - j.entry + r))
                .sum();
            let rebuilt = shifted - martingale + entered;
            worst = worst.max((s.z[i] - rebuilt).abs() / root);
            scale = scale.max(((s.z[i] - path.servers as f64 * path.fluid_z[i]) / root).abs());
            if exponential {
                let occupied = s.x.min(path.servers as u64) as f64;
                let expect = (-r).exp() * occupied;
                collapse = collapse.max((s.z[i] - expect).abs() / expect.abs().max(1.0));
            }
        }
        discrepancy.push(worst);
    }
    let max_discrepancy = discrepancy.iter().fold(0.0f64, |m, v| m.max(*v));
    let relative = max_discrepancy / scale;
    Ok(AuditReport {
        servers: path.servers,
        times: path.samples.iter().map(|s| s.t).collect(),
        step: options.step,
        discrepancy,
        max_discrepancy,
        scale,
        relative,
        exponential_collapse: exponential.then_some(collapse),
        passed: relative <= options.tolerance,
    })
}
