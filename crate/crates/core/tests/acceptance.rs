//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 3 6`.

use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use hwlab::diagnostics::{fluid_deviation, identity_audit, log_log_slope, AuditOptions};
use hwlab::diffusion::{
    estimate_diffusion_stationary, solve_cms, CmsInput, DiffusionConfig, DiffusionModel, ScalarDiffusion,
};
use hwlab::dist::{DistributionBundle, DistributionSpec};
use hwlab::queue::{fluid_scale, SimConfig, Simulator};
use hwlab::rng::seed_split;
use hwlab::stats::{
    compare_with, erlang_oracle, estimate_queue_stationary, frequencies, ks_distance, total_variation, EmpiricalLaw,
    Functional, Sampling, TrendStatistic,
};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn lomax() -> DistributionSpec {
    DistributionSpec::lomax_unit(4.0)
}

fn exp1() -> DistributionSpec {
    DistributionSpec::exponential(1.0)
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

// 1. pathwise invariants at every event of an N=50, T=50 run
fn pathwise_invariants() -> Verdict {
    let config = SimConfig::new(50, 1.0, lomax(), 50.0).sample_every(0.25).recording().with_seed(101);
    let path = Simulator::new(config).unwrap().run();
    let report = path.invariants();
    verdict(
        report.passed() && report.checked > 1000,
        format!(
            "{} states checked; violations: non-idling {}, mass balance {}, boundary {}",
            report.checked, report.non_idling_violations, report.mass_balance_violations, report.boundary_violations
        ),
    )
}

// 2. Z_t(r) = e^{-r} min(X_t, N) for exponential service
fn exponential_collapse() -> Verdict {
    let config = SimConfig::new(100, 1.0, exp1(), 20.0).sample_every(0.1).with_seed(202);
    let path = Simulator::new(config).unwrap().run();
    let mut worst: f64 = 0.0;
    for s in &path.samples {
        for (z, r) in s.z.iter().zip(path.r_grid.nodes()) {
            let exact = (-r).exp() * s.in_service as f64;
            worst = worst.max((z - exact).abs() / exact.abs().max(f64::MIN_POSITIVE));
        }
    }
    verdict(worst <= 1e-12, format!("{} samples, max relative gap {worst:.2e} (limit 1e-12)", path.samples.len()))
}

// 3. stationary M/M/10 queue length against the birth-death law
fn erlang_match() -> Verdict {
    let config = SimConfig::new(10, 1.0, exp1(), 0.0).without_z().with_seed(303);
    let sampling = Sampling { burn_in: 50.0, spacing: 2.0, per_run: 10_000, draws: 100_000 };
    let law = &estimate_queue_stationary(&config, &sampling, &[Functional::QueueLength]).unwrap()[0];
    let exact = erlang_oracle(10, config.arrival_rate()).unwrap();
    let observed = frequencies(law.values());
    let tv = total_variation(&observed, &exact, exact.len().max(observed.len()));
    verdict(
        tv < 0.02,
        format!("TV {tv:.4} over {} draws (limit 0.02), lag-1 autocorrelation {:.3}", law.len(), law.autocorrelation.unwrap_or(0.0)),
    )
}

// 4. Var H_1(1) = (1 - e^{-2}) / 2 for exponential service
fn driver_isometry() -> Verdict {
    let model = DiffusionModel::new(DiffusionConfig::new(exp1(), 1.0, 1.0).with_dt(0.01)).unwrap();
    let draws = 10_000;
    let values: Vec<f64> = (0..draws as u64).map(|i| *model.drivers(seed_split(404, i)).h_one.last().unwrap()).collect();
    let n = draws as f64;
    let mean = values.iter().sum::<f64>() / n;
    let c: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = c.iter().sum::<f64>() / (n - 1.0);
    let m4 = c.iter().map(|v| v * v).sum::<f64>() / n;
    let se = ((m4 - var * var) / n).sqrt();
    let exact = (1.0 - (-2.0f64).exp()) / 2.0;
    verdict(
        (var - exact).abs() <= 3.0 * se,
        format!("sample variance {var:.5} vs {exact:.5}, {:.2} standard errors", (var - exact).abs() / se),
    )
}

fn trapezoid_conv(g: &[f64], kappa: &[f64], dt: f64) -> Vec<f64> {
    let n = kappa.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pad = |v: &[f64]| {
        let mut b: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        b.resize(len, Complex64::new(0.0, 0.0));
        b
    };
    let (mut a, mut c) = (pad(&g[..n]), pad(kappa));
    fwd.process(&mut a);
    fwd.process(&mut c);
    let mut p: Vec<Complex64> = a.iter().zip(&c).map(|(x, y)| x * y).collect();
    inv.process(&mut p);
    (0..n).map(|k| dt * (p[k].re / len as f64 - 0.5 * g[k] * kappa[0] - 0.5 * g[0] * kappa[k])).collect()
}

/// Picard iteration of `x = zeta + eta + x0^+ - g * (eta - x^+ + x0^+)`
/// with trapezoid convolutions.
fn picard(b: &DistributionBundle, eta: &dyn Fn(f64) -> f64, zeta: &dyn Fn(f64) -> f64, x0: f64, dt: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / dt).round() as usize;
    let g: Vec<f64> = (0..=n).map(|j| b.pdf(j as f64 * dt)).collect();
    let et: Vec<f64> = (0..=n).map(|k| eta(k as f64 * dt)).collect();
    let zt: Vec<f64> = (0..=n).map(|k| zeta(k as f64 * dt)).collect();
    let xp0 = x0.max(0.0);
    let mut x: Vec<f64> = (0..=n).map(|k| zt[k] + et[k] + xp0).collect();
    for _ in 0..5000 {
        let kappa: Vec<f64> = (0..=n).map(|k| et[k] - x[k].max(0.0) + xp0).collect();
        let conv = trapezoid_conv(&g, &kappa, dt);
        let next: Vec<f64> = (0..=n).map(|k| zt[k] + et[k] + xp0 - conv[k]).collect();
        let change = max_abs(next.iter().zip(&x).map(|(a, b)| a - b));
        x = next;
        if change < 1e-14 {
            return x;
        }
    }
    panic!("Picard iteration did not converge");
}

// 5. CMS residuals and agreement with a refined Picard solution
fn cms_solver() -> Verdict {
    let (dt, horizon): (f64, f64) = (1e-3, 3.0);
    let lomax_b = DistributionBundle::new(lomax()).unwrap();
    let (zb1, zb2) = (lomax_b.clone(), lomax_b.clone());
    type Input = (DistributionSpec, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>, f64);
    let inputs: Vec<Input> = vec![
        (lomax(), Box::new(|t| t), Box::new(move |t| zb1.zbar(t) - 1.0), 1.0),
        (lomax(), Box::new(|t| -t), Box::new(|_| 0.0), 0.5),
        (
            DistributionSpec::lognormal(0.0, 1.0).normalized(),
            Box::new(|t| 0.8 * (2.0 * t).sin() - 0.5 * t),
            Box::new(move |t| -0.4 * zb2.zbar(t)),
            -0.4,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (spec, eta, zeta, x0) in &inputs {
        let b = DistributionBundle::new(spec.clone()).unwrap();
        let n = (horizon / dt).round() as usize;
        let input = CmsInput {
            dt,
            eta: (0..=n).map(|k| eta(k as f64 * dt)).collect(),
            zeta: (0..=n).map(|k| zeta(k as f64 * dt)).collect(),
            x0: *x0,
        };
        let sol = solve_cms(&input, &b).unwrap();
        let oracle = picard(&b, eta.as_ref(), zeta.as_ref(), *x0, dt / 10.0, horizon);
        let err = max_abs(sol.x.iter().enumerate().map(|(k, v)| v - oracle[10 * k]));
        let bound = 10.0 * dt * dt * (1.0 + sol.kappa_sup());
        ok &= err <= 5.0 * dt * dt && sol.residual_boundary <= bound && sol.residual_entry <= bound;
        parts.push(format!("oracle {err:.1e}, residuals {:.1e}/{:.1e}", sol.residual_boundary, sol.residual_entry));
    }
    verdict(ok, format!("{} (limits 5.0e-6 and {:.1e}(1+|kappa|))", parts.join("; "), 10.0 * dt * dt))
}

// 6. X_5 of the diffusion against the scalar reduction, exponential service
fn scalar_equivalence() -> Verdict {
    let (t, draws) = (5.0, 10_000usize);
    let config = DiffusionConfig::new(exp1(), 1.0, t).with_dt(0.005);
    let laws = estimate_diffusion_stationary(&config.with_seed(606), &Sampling::replications(t, draws), &[Functional::X]).unwrap();
    let scalar = ScalarDiffusion::new(1.0, 1.0);
    let mut reference = scalar.marginal(0.0, t, 1e-3, 200_000, 607);
    reference.sort_by(f64::total_cmp);
    let ks = ks_distance(laws[0].values(), &reference);
    verdict(ks < 0.02, format!("KS {ks:.4} ({draws} diffusion draws vs 200000 scalar draws, limit 0.02)"))
}

const LADDER: [usize; 3] = [25, 100, 400];

/// Stationary queue draws of `x_hat` and `x_hat_plus`, per service law and N.
fn queue_laws(spec: &DistributionSpec, seed: u64) -> Vec<Vec<EmpiricalLaw>> {
    let sampling = Sampling { burn_in: 50.0, spacing: 5.0, per_run: 1000, draws: 20_000 };
    LADDER
        .iter()
        .map(|&n| {
            let config = SimConfig::new(n, 1.0, spec.clone(), 0.0).without_z().with_seed(seed_split(seed, n as u64));
            estimate_queue_stationary(&config, &sampling, &[Functional::X, Functional::XPositive]).unwrap()
        })
        .collect()
}

fn lomax_queue() -> &'static Vec<Vec<EmpiricalLaw>> {
    static LAWS: OnceLock<Vec<Vec<EmpiricalLaw>>> = OnceLock::new();
    LAWS.get_or_init(|| queue_laws(&lomax(), 707))
}

// 7. no increasing trend of the mean stationary x_hat^+ in N
fn l1_bound() -> Verdict {
    let stats: Vec<_> = lomax_queue().iter().enumerate().map(|(i, l)| l[1].bootstrap_mean(1000, seed_split(708, i as u64))).collect();
    let mut ok = true;
    for w in stats.windows(2) {
        ok &= w[1].point - w[0].point <= 3.0 * w[0].std_error.hypot(w[1].std_error);
    }
    let cells: Vec<String> = LADDER.iter().zip(&stats).map(|(n, b)| format!("N={n}: {:.4}±{:.4}", b.point, b.std_error)).collect();
    // exact M/M/N values of the same mean, for context
    let exact: Vec<String> = LADDER
        .iter()
        .map(|&n| {
            let root = (n as f64).sqrt();
            let p = erlang_oracle(n, n as f64 - root).unwrap();
            let m: f64 = p.iter().enumerate().map(|(k, q)| q * (k as f64 - n as f64).max(0.0)).sum();
            format!("{:.4}", m / root)
        })
        .collect();
    verdict(ok, format!("Lomax mean x_hat^+ {}; exponential exact {}", cells.join(", "), exact.join(", ")))
}

// 8. fluid rate of the initial occupancy
fn fluid_rate() -> Verdict {
    let bundle = DistributionBundle::new(lomax()).unwrap();
    let ns = [25usize, 100, 400, 1600];
    let reps = 200;
    let mut means = Vec::new();
    for &n in &ns {
        let config = SimConfig::new(n, 1.0, lomax(), 0.0).with_samples(vec![0.0]);
        let grid = config.r_grid.clone();
        let sim = Simulator::new(config).unwrap();
        let total: f64 = (0..reps)
            .map(|r| {
                let path = sim.run_with_seed(seed_split(808, (n * reps + r) as u64));
                fluid_deviation(&fluid_scale(&path, n), &grid, &bundle, path.lambda / n as f64).unwrap().z_l2[0]
            })
            .sum();
        means.push(total / reps as f64);
    }
    let slope = log_log_slope(&ns.map(|n| n as f64), &means).unwrap();
    verdict((-0.6..=-0.4).contains(&slope), format!("slope {slope:.3} (range [-0.6, -0.4])"))
}

// 9. KS between queue and diffusion stationary x_hat shrinks in N
fn stationary_convergence() -> Verdict {
    let diffusion = |spec: DistributionSpec, seed: u64| {
        let config = DiffusionConfig::new(spec, 1.0, 20.0).with_dt(0.02).with_seed(seed);
        estimate_diffusion_stationary(&config, &Sampling::replications(20.0, 20_000), &[Functional::X]).unwrap().remove(0)
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, queue, limit) in [
        ("exponential", queue_laws(&exp1(), 909), diffusion(exp1(), 910)),
        ("lomax", lomax_queue().clone(), diffusion(lomax(), 911)),
    ] {
        let reports: Vec<_> = queue
            .iter()
            .enumerate()
            .map(|(i, l)| compare_with(&l[0], &limit, 1000, seed_split(912, i as u64)).unwrap())
            .collect();
        let trend = TrendStatistic::from_reports("x_hat", &reports.iter().collect::<Vec<_>>()).unwrap();
        ok &= trend.decreasing && trend.beyond_noise;
        let mut text = format!("{name}: KS {:?} min z {:.2}", trend.ks.iter().map(|k| format!("{k:.4}")).collect::<Vec<_>>(), trend.min_z);
        if name == "exponential" {
            let last = trend.ks[trend.ks.len() - 1];
            ok &= last < 0.05;
            text.push_str(&format!(", N=400 KS {last:.4} (limit 0.05)"));
        }
        parts.push(text);
    }
    verdict(ok, parts.join("; "))
}

// 10. occupancy rebuilt from the job log matches the sampled one
fn identity_audit_check() -> Verdict {
    let config = SimConfig::new(50, 1.0, lomax(), 20.0).sample_every(1.0).recording().with_seed(1010);
    let sim = Simulator::new(config).unwrap();
    let report = identity_audit(&sim.run(), sim.service(), &AuditOptions::default()).unwrap();
    verdict(report.relative <= 1e-3, format!("relative discrepancy {:.2e} (limit 1e-3)", report.relative))
}

fn cli(config: &Path, out: &Path, threads: usize) -> (Vec<u8>, Vec<u8>) {
    let status = Command::new(env!("CARGO_BIN_EXE_hwlab"))
        .args(["simulate-queue", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    (std::fs::read(out.join("results.csv")).unwrap(), std::fs::read(out.join("report.json")).unwrap())
}

// 11. byte-identical artifacts across repeats and thread counts
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("queue.toml");
    std::fs::write(
        &config,
        r#"kind = "simulate-queue"
seed = 42
replications = 8

[queue]
servers = 10
beta = 1.0
arrival = "exponential rate=1"
service = "exponential rate=1"
horizon = 20.0
sample_times = [0.0, 5.0, 10.0, 15.0, 20.0]
"#,
    )
    .unwrap();
    let base = cli(&config, &dir.path().join("a"), 1);
    let runs = [cli(&config, &dir.path().join("b"), 1), cli(&config, &dir.path().join("c"), 2), cli(&config, &dir.path().join("d"), 4)];
    let same = runs.iter().all(|r| *r == base);
    verdict(same, format!("{} runs at 1, 1, 2 and 4 threads, {} result bytes", runs.len() + 1, base.0.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("pathwise invariants", pathwise_invariants),
        ("exponential collapse", exponential_collapse),
        ("Erlang oracle", erlang_match),
        ("driver isometry", driver_isometry),
        ("CMS solver", cms_solver),
        ("diffusion vs scalar reduction", scalar_equivalence),
        ("uniform L1 bound", l1_bound),
        ("fluid rate", fluid_rate),
        ("queue to diffusion convergence", stationary_convergence),
        ("identity audit", identity_audit_check),
        ("determinism", determinism),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let status = if v.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {status} {name}: {} [{:.1}s]", v.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!v.passed);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
