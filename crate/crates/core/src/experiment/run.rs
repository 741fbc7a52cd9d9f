use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, Oracle, StationaryTarget};
use crate::diagnostics::identity_audit;
use crate::diffusion::{estimate_diffusion_stationary, DiffusionModel, ScalarDiffusion};
use crate::dist::{default_grid, verify_assumptions, DistributionBundle};
use crate::error::{Error, Result};
use crate::queue::{SimConfig, Simulator};
use crate::rng::seed_split;
use crate::stats::{
    convergence_sweep, erlang_oracle, estimate_queue_stationary, frequencies, ks_against_cdf, total_variation, EmpiricalLaw,
    Functional,
};

/// Version of the `results.csv` layouts.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "HWLAB_THREADS";

/// Largest estimated working set an experiment may request, in bytes.
pub const MEMORY_LIMIT: f64 = 16.0 * (1u64 << 30) as f64;

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    /// evaluate thresholds even if the file leaves checks disabled
    pub check: bool,
}

/// One pass/fail threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        CheckResult { name: name.into(), value, threshold, passed: value <= threshold }
    }

    fn flag(name: impl Into<String>, ok: bool) -> Self {
        CheckResult { name: name.into(), value: ok as u8 as f64, threshold: 1.0, passed: ok }
    }
}

/// Deterministic products of an experiment: they depend on the config only.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: String,
    pub report: Value,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub hash: String,
    pub checks: Vec<CheckResult>,
    /// whether thresholds were enforced
    pub checked: bool,
    pub wall_seconds: f64,
}

impl Outcome {
    /// False only when checks were enforced and at least one failed.
    pub fn passed(&self) -> bool {
        !self.checked || self.checks.iter().all(|c| c.passed)
    }
}

/// Applies overrides; the thread count falls back to [`THREADS_ENV`].
pub fn resolve(mut config: ExperimentConfig, overrides: &Overrides) -> Result<ExperimentConfig> {
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(out) = &overrides.out {
        config.out = Some(out.clone());
    }
    if let Some(threads) = overrides.threads {
        config.threads = Some(threads);
    } else if config.threads.is_none() {
        if let Ok(text) = std::env::var(THREADS_ENV) {
            let n = text
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}={text:?} is not a thread count")))?;
            config.threads = Some(n);
        }
    }
    if overrides.check {
        config.checks.enabled = true;
    }
    if config.threads == Some(0) {
        return Err(Error::Config("threads must be positive".into()));
    }
    Ok(config)
}

/// Rough working-set estimate in bytes.
pub fn estimated_memory(config: &ExperimentConfig) -> f64 {
    const F: f64 = 8.0;
    let queue = |q: &SimConfig, runs: f64| {
        let n = q.servers as f64;
        let events = if q.record_events { 3.0 * q.arrival_rate() * q.horizon * 64.0 } else { 0.0 };
        let samples = q.sample_times.len() as f64 * (2.0 * q.r_grid.len() as f64 + 8.0) * F;
        let threads = config.threads.unwrap_or_else(rayon::current_num_threads) as f64;
        (n * 2.0 * F + events) * threads.min(runs) + samples * runs
    };
    let diffusion = |steps: f64, cells: f64, runs: f64| {
        let threads = config.threads.unwrap_or_else(rayon::current_num_threads) as f64;
        // field, two convolved drivers and FFT scratch
        (steps * cells * 3.0 + 8.0 * steps) * F * threads.min(runs)
    };
    let reps = config.replications as f64;
    match config.kind {
        ExperimentKind::SimulateQueue | ExperimentKind::Audit => config.queue.as_ref().map_or(0.0, |q| {
            let mut q = q.clone();
            q.record_events |= config.kind == ExperimentKind::Audit;
            queue(&q, reps)
        }),
        ExperimentKind::SimulateDiffusion => config
            .diffusion
            .as_ref()
            .map_or(0.0, |d| diffusion(d.steps() as f64, d.noise_cells as f64, reps)),
        ExperimentKind::Stationary => match config.stationary.as_ref() {
            Some(s) if s.target == StationaryTarget::Diffusion => config.diffusion.as_ref().map_or(0.0, |d| {
                let steps = (s.sampling.horizon() / d.dt).ceil();
                diffusion(steps, d.noise_cells as f64, s.sampling.runs() as f64)
            }),
            Some(s) => config.queue.as_ref().map_or(0.0, |q| queue(q, s.sampling.runs() as f64)),
            None => 0.0,
        },
        ExperimentKind::Sweep => config.sweep.as_ref().map_or(0.0, |s| {
            let steps = (s.diffusion_sampling.horizon() / s.dt).ceil();
            diffusion(steps, s.noise_cells as f64, s.diffusion_sampling.runs() as f64)
                + s.queue_sampling.draws as f64 * s.servers.len() as f64 * F * 4.0
        }),
        ExperimentKind::VerifyDist => 0.0,
    }
}

/// Rejects configurations whose estimated working set exceeds
/// [`MEMORY_LIMIT`].
pub fn check_resources(config: &ExperimentConfig) -> Result<()> {
    let bytes = estimated_memory(config);
    if bytes > MEMORY_LIMIT {
        return Err(Error::Config(format!(
            "estimated working set {:.1} GiB exceeds the {:.0} GiB limit; reduce threads, horizon or resolution",
            bytes / (1u64 << 30) as f64,
            MEMORY_LIMIT / (1u64 << 30) as f64
        )));
    }
    Ok(())
}

/// Loads, resolves and runs a config file, writing `results.csv`,
/// `report.json` and `manifest.json` into the output directory.
pub fn run_experiment(path: &Path, overrides: &Overrides) -> Result<Outcome> {
    let config = resolve(ExperimentConfig::load(path)?, overrides)?;
    run_config(&config)
}

pub fn run_config(config: &ExperimentConfig) -> Result<Outcome> {
    config.validate()?;
    check_resources(config)?;
    let out_dir = config.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let hash = config.hash()?;
    let started = Instant::now();
    let artifacts = match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| execute(config))?,
        None => execute(config)?,
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    std::fs::create_dir_all(&out_dir)?;
    std::fs::write(out_dir.join("results.csv"), &artifacts.csv)?;
    let report = json!({
        "kind": config.kind,
        "config_hash": hash,
        "result": artifacts.report,
        "checks": artifacts.checks,
        "checks_enforced": config.checks.enabled,
    });
    std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let manifest = json!({
        "kind": config.kind,
        "config": config.identity(),
        "config_hash": hash,
        "version": env!("CARGO_PKG_VERSION"),
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "threads": config.threads.unwrap_or_else(rayon::current_num_threads),
        "wall_seconds": wall_seconds,
    });
    std::fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;

    Ok(Outcome { out_dir, hash, checks: artifacts.checks, checked: config.checks.enabled, wall_seconds })
}

/// Runs the experiment on the current rayon pool without touching disk.
pub fn execute(config: &ExperimentConfig) -> Result<Artifacts> {
    config.validate()?;
    match config.kind {
        ExperimentKind::SimulateQueue => simulate_queue(config),
        ExperimentKind::SimulateDiffusion => simulate_diffusion(config),
        ExperimentKind::Stationary => stationary(config),
        ExperimentKind::Sweep => sweep(config),
        ExperimentKind::VerifyDist => verify_dist(config),
        ExperimentKind::Audit => audit(config),
    }
}

fn missing(block: &str) -> Error {
    Error::Config(format!("missing [{block}] table"))
}

/// Prefixes every CSV row with the replication index.
fn tag_rows(csv: &mut String, replication: usize, body: &str, with_header: bool) {
    let mut lines = body.lines();
    if let Some(header) = lines.next() {
        if with_header {
            let _ = writeln!(csv, "replication,{header}");
        }
    }
    for line in lines {
        let _ = writeln!(csv, "{replication},{line}");
    }
}

fn simulate_queue(config: &ExperimentConfig) -> Result<Artifacts> {
    let base = config.queue.as_ref().ok_or_else(|| missing("queue"))?;
    let sim = Simulator::new(base.clone())?;
    let runs: Vec<(Vec<u8>, Value, bool)> = (0..config.replications)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let path = sim.run_with_seed(seed_split(config.seed, r as u64));
            let invariants = path.invariants();
            let scaled = path.scaled();
            let mut buf = Vec::new();
            scaled.write_csv(&mut buf)?;
            let summary = json!({
                "replication": r,
                "seed": path.seed,
                "events": path.events.len(),
                "final_x": scaled.x.last(),
                "final_x_hat": scaled.x_hat.last(),
                "invariants": invariants,
            });
            Ok((buf, summary, invariants.passed()))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut summaries = Vec::new();
    let mut all_ok = true;
    for (r, (buf, summary, ok)) in runs.into_iter().enumerate() {
        tag_rows(&mut csv, r, &String::from_utf8_lossy(&buf), r == 0);
        summaries.push(summary);
        all_ok &= ok;
    }
    Ok(Artifacts {
        csv,
        report: json!({ "servers": base.servers, "lambda": base.arrival_rate(), "replications": summaries }),
        checks: vec![CheckResult::flag("pathwise_invariants", all_ok)],
    })
}

fn simulate_diffusion(config: &ExperimentConfig) -> Result<Artifacts> {
    let base = config.diffusion.as_ref().ok_or_else(|| missing("diffusion"))?;
    let model = DiffusionModel::new(base.clone())?;
    let runs: Vec<_> = (0..config.replications)
        .into_par_iter()
        .map(|r| -> Result<_> {
            let path = model.run(seed_split(config.seed, r as u64))?;
            let mut buf = Vec::new();
            path.write_csv(&mut buf)?;
            Ok((buf, path))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::new();
    let mut summaries = Vec::new();
    let mut checks = Vec::new();
    let dt2 = base.dt * base.dt;
    for (r, (buf, path)) in runs.iter().enumerate() {
        tag_rows(&mut csv, r, &String::from_utf8_lossy(buf), r == 0);
        let kappa_sup = path.k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        summaries.push(json!({
            "replication": r,
            "seed": path.seed,
            "x0": path.x0,
            "x_end": path.x_end(),
            "kappa_sup": kappa_sup,
            "residuals": path.residuals,
            "boundary_error": path.boundary_error,
            "drivers": path.drivers,
        }));
        if let Some((b, e)) = path.residuals {
            let bound = 10.0 * dt2 * (1.0 + kappa_sup);
            checks.push(CheckResult::at_most(format!("residual_boundary[{r}]"), b, bound));
            checks.push(CheckResult::at_most(format!("residual_entry[{r}]"), e, bound));
        }
        if base.compute_z && !base.sample_times.is_empty() {
            checks.push(CheckResult::at_most(format!("boundary_identity[{r}]"), path.boundary_error, 1e-9));
        }
    }
    Ok(Artifacts { csv, report: json!({ "steps": base.steps(), "replications": summaries }), checks })
}

fn law_summary(law: &EmpiricalLaw) -> Value {
    json!({
        "functional": law.label,
        "draws": law.len(),
        "runs": law.replications,
        "mean": law.mean(),
        "variance": law.variance(),
        "std_error": law.std_error(),
        "q05": law.quantile(0.05),
        "q50": law.quantile(0.5),
        "q95": law.quantile(0.95),
        "lag1_autocorrelation": law.autocorrelation,
    })
}

fn stationary(config: &ExperimentConfig) -> Result<Artifacts> {
    let spec = config.stationary.as_ref().ok_or_else(|| missing("stationary"))?;
    let (laws, lambda, servers, beta, sigma, exponential) = match spec.target {
        StationaryTarget::Queue => {
            let q = config.queue.as_ref().ok_or_else(|| missing("queue"))?;
            let mut q = q.clone();
            q.seed = config.seed;
            let laws = estimate_queue_stationary(&q, &spec.sampling, &spec.functionals)?;
            let arrival = DistributionBundle::new(q.arrival.clone())?;
            let service = DistributionBundle::new(q.service.clone())?;
            let both_exp = arrival.is_exponential() && service.is_exponential();
            (laws, Some(q.arrival_rate()), Some(q.servers), q.beta, arrival.variance().sqrt(), both_exp)
        }
        StationaryTarget::Diffusion => {
            let d = config.diffusion.as_ref().ok_or_else(|| missing("diffusion"))?;
            let mut d = d.clone();
            d.seed = config.seed;
            let laws = estimate_diffusion_stationary(&d, &spec.sampling, &spec.functionals)?;
            let service = DistributionBundle::new(d.service.clone())?;
            (laws, None, None, d.beta, d.sigma, service.is_exponential())
        }
    };

    let mut csv = String::from("functional,index,value\n");
    for law in &laws {
        for (i, v) in law.values().iter().enumerate() {
            let _ = writeln!(csv, "{},{i},{v}", law.label);
        }
    }

    let mut oracle_report = Value::Null;
    let mut checks = Vec::new();
    let find = |f: Functional| spec.functionals.iter().position(|g| *g == f).map(|i| &laws[i]);
    match spec.oracle {
        Some(Oracle::Erlang) => {
            let (lambda, servers) = lambda.zip(servers).ok_or_else(|| {
                Error::Usage("the Erlang oracle describes the queue length of the finite system".into())
            })?;
            if !exponential {
                return Err(Error::Usage("the Erlang oracle needs exponential arrivals and services".into()));
            }
            let law = find(Functional::QueueLength)
                .ok_or_else(|| Error::Usage("the Erlang oracle needs the queue_length functional".into()))?;
            let exact = erlang_oracle(servers, lambda)?;
            let observed = frequencies(law.values());
            let upto = exact.len().max(observed.len());
            let tv = total_variation(&observed, &exact, upto);
            oracle_report = json!({ "oracle": "erlang", "support": upto, "total_variation": tv });
            if let Some(max) = config.checks.max_tv {
                checks.push(CheckResult::at_most("erlang_total_variation", tv, max));
            }
        }
        Some(Oracle::Scalar) => {
            if !exponential {
                return Err(Error::Usage("the scalar oracle is the limit for exponential service only".into()));
            }
            let law = find(Functional::X).ok_or_else(|| Error::Usage("the scalar oracle needs the x_hat functional".into()))?;
            if !(beta > 0.0) {
                return Err(Error::Usage("the scalar stationary law exists only for beta > 0".into()));
            }
            let scalar = ScalarDiffusion::new(beta, sigma);
            let ks = ks_against_cdf(law.values(), |x| scalar.stationary_cdf(x));
            oracle_report = json!({
                "oracle": "scalar",
                "ks": ks,
                "positive_mass": scalar.stationary_positive_mass(),
                "observed_positive_mass": 1.0 - law.ecdf(0.0),
            });
            if let Some(max) = config.checks.max_ks {
                checks.push(CheckResult::at_most("scalar_ks", ks, max));
            }
        }
        None => {}
    }
    Ok(Artifacts {
        csv,
        report: json!({
            "target": spec.target,
            "sampling": spec.sampling,
            "laws": laws.iter().map(law_summary).collect::<Vec<_>>(),
            "oracle": oracle_report,
        }),
        checks,
    })
}

fn sweep(config: &ExperimentConfig) -> Result<Artifacts> {
    let mut spec = config.sweep.clone().ok_or_else(|| missing("sweep"))?;
    spec.seed = config.seed;
    let table = convergence_sweep(&spec)?;
    let mut csv = String::from(
        "servers,functional,ks,ks_std_error,ks_lower,ks_upper,w1,w1_std_error,mean_delta,variance_delta,queue_draws,diffusion_draws\n",
    );
    for row in &table.rows {
        let r = &row.report;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            row.servers,
            r.label,
            r.ks,
            r.ks_bootstrap.std_error,
            r.ks_bootstrap.lower,
            r.ks_bootstrap.upper,
            r.w1,
            r.w1_bootstrap.std_error,
            r.mean_delta,
            r.variance_delta,
            r.n_a,
            r.n_b
        );
    }
    let mut checks: Vec<CheckResult> = table
        .trends
        .iter()
        .map(|t| CheckResult { name: format!("trend[{}]", t.functional), value: t.min_z, threshold: 1.0, passed: t.beyond_noise })
        .collect();
    if let (Some(max), Some(&largest)) = (config.checks.max_ks, spec.servers.iter().max()) {
        for row in table.rows.iter().filter(|r| r.servers == largest) {
            checks.push(CheckResult::at_most(format!("ks[{}][N={largest}]", row.report.label), row.report.ks, max));
        }
    }
    Ok(Artifacts { csv, report: serde_json::to_value(&table)?, checks })
}

fn verify_dist(config: &ExperimentConfig) -> Result<Artifacts> {
    let spec = config.verify.as_ref().ok_or_else(|| missing("verify"))?;
    let bundle = DistributionBundle::new(spec.distribution.clone())?;
    let grid = spec.grid.clone().unwrap_or_else(|| default_grid(bundle.mean()));
    let report = verify_assumptions(&bundle, &grid, spec.tolerances.unwrap_or_default());
    let mut csv = String::from("clause,value,threshold,passed\n");
    for c in &report.clauses {
        let _ = writeln!(csv, "{},{},{},{}", c.clause, c.value, c.threshold, c.passed);
    }
    let checks = report
        .clauses
        .iter()
        .map(|c| CheckResult { name: c.clause.clone(), value: c.value, threshold: c.threshold, passed: c.passed })
        .collect();
    Ok(Artifacts { csv, report: serde_json::to_value(&report)?, checks })
}

fn audit(config: &ExperimentConfig) -> Result<Artifacts> {
    let mut base = config.queue.clone().ok_or_else(|| missing("queue"))?;
    base.record_events = true;
    base.compute_z = true;
    if base.sample_times.is_empty() {
        let step = (base.horizon / 20.0).max(f64::MIN_POSITIVE);
        base = base.sample_every(step);
    }
    let options = config.audit.unwrap_or_default();
    let sim = Simulator::new(base)?;
    let reports: Vec<_> = (0..config.replications)
        .into_par_iter()
        .map(|r| identity_audit(&sim.run_with_seed(seed_split(config.seed, r as u64)), sim.service(), &options))
        .collect::<Result<_>>()?;
    let mut csv = String::from("replication,t,discrepancy\n");
    let mut checks = Vec::new();
    for (r, rep) in reports.iter().enumerate() {
        for (t, d) in rep.times.iter().zip(&rep.discrepancy) {
            let _ = writeln!(csv, "{r},{t},{d}");
        }
        checks.push(CheckResult::at_most(format!("relative_discrepancy[{r}]"), rep.relative, options.tolerance));
        if let Some(gap) = rep.exponential_collapse {
            checks.push(CheckResult::at_most(format!("exponential_collapse[{r}]"), gap, 1e-9));
        }
    }
    Ok(Artifacts { csv, report: json!({ "audits": reports }), checks })
}
