use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::AuditOptions;
use crate::diffusion::DiffusionConfig;
use crate::dist::{DistributionSpec, Tolerances};
use crate::error::{Error, Result};
use crate::queue::SimConfig;
use crate::stats::{Functional, Sampling, SweepConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SimulateQueue,
    SimulateDiffusion,
    Stationary,
    Sweep,
    VerifyDist,
    Audit,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::SimulateQueue => "simulate-queue",
            ExperimentKind::SimulateDiffusion => "simulate-diffusion",
            ExperimentKind::Stationary => "stationary",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::VerifyDist => "verify-dist",
            ExperimentKind::Audit => "audit",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which process a stationary experiment samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StationaryTarget {
    #[default]
    Queue,
    Diffusion,
}

/// Exact reference law to compare a stationary sample with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// M/M/N birth-death law of the unscaled queue length
    Erlang,
    /// closed-form stationary law of the exponential-service limit
    Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationarySpec {
    #[serde(default)]
    pub target: StationaryTarget,
    pub sampling: Sampling,
    pub functionals: Vec<Functional>,
    #[serde(default)]
    pub oracle: Option<Oracle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySpec {
    pub distribution: DistributionSpec,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    /// verification grid; defaults to a geometric grid out to 1e3 means
    #[serde(default)]
    pub grid: Option<Vec<f64>>,
}

/// Acceptance thresholds evaluated when checks are enabled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    #[serde(default)]
    pub enabled: bool,
    /// total-variation bound against the Erlang oracle
    #[serde(default)]
    pub max_tv: Option<f64>,
    /// KS bound against an oracle, or on the last sweep row
    #[serde(default)]
    pub max_ks: Option<f64>,
}

/// One experiment as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// master seed; per-replication seeds are split from it
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    /// worker threads; not part of the experiment identity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// output directory; not part of the experiment identity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationary: Option<StationarySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditOptions>,
    #[serde(default)]
    pub checks: Checks,
}

fn one() -> usize {
    1
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

impl FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let location = match e.span() {
                Some(span) => {
                    let (line, col) = line_col(text, span.start);
                    format!("line {line}, column {col}")
                }
                None => "document".to_string(),
            };
            Error::Parse { location, message: e.message().to_string() }
        })
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse().map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse { location: format!("{}: {location}", path.display()), message },
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Copy without execution settings (threads, output directory).
    pub fn identity(&self) -> Self {
        let mut c = self.clone();
        c.threads = None;
        c.out = None;
        c
    }

    /// SHA-256 of the canonical JSON form of [`identity`](Self::identity);
    /// object keys are sorted and floats use shortest round-trip text.
    pub fn hash(&self) -> Result<String> {
        let value = serde_json::to_value(self.identity())?;
        let text = serde_json::to_string(&value)?;
        Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn validate(&self) -> Result<()> {
        let need = |present: bool, block: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("`{}` experiments need a [{block}] table", self.kind)))
            }
        };
        if self.replications == 0 {
            return Err(Error::Config("replications must be positive".into()));
        }
        match self.kind {
            ExperimentKind::SimulateQueue | ExperimentKind::Audit => need(self.queue.is_some(), "queue"),
            ExperimentKind::SimulateDiffusion => need(self.diffusion.is_some(), "diffusion"),
            ExperimentKind::Stationary => {
                need(self.stationary.is_some(), "stationary")?;
                match self.stationary.as_ref().map(|s| s.target) {
                    Some(StationaryTarget::Queue) => need(self.queue.is_some(), "queue"),
                    _ => need(self.diffusion.is_some(), "diffusion"),
                }
            }
            ExperimentKind::Sweep => need(self.sweep.is_some(), "sweep"),
            ExperimentKind::VerifyDist => need(self.verify.is_some(), "verify"),
        }
    }
}
