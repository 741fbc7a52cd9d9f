use super::*;
use crate::dist::{DistributionBundle, DistributionSpec};
use crate::kernels::RGrid;
use crate::queue::{fluid_scale, FluidPath, InitCondition, ScaledPath, SimConfig, Simulator};

fn lomax() -> DistributionSpec {
    DistributionSpec::lomax_unit(4.0)
}

fn audit_grid() -> RGrid {
    RGrid::geometric(20.0, 30, 1.1).unwrap()
}

#[test]
fn audit_rebuilds_lomax_occupancy() {
    let cfg = SimConfig::new(50, 1.0, lomax(), 20.0).with_grid(audit_grid()).with_samples(vec![2.0, 10.0, 20.0]).with_seed(5).recording();
    let sim = Simulator::new(cfg).unwrap();
    let path = sim.run();
    let report = identity_audit(&path, sim.service(), &AuditOptions::default()).unwrap();
    assert!(report.passed, "relative discrepancy {}", report.relative);
    assert!(report.exponential_collapse.is_none());
    assert_eq!(report.discrepancy.len(), 3);
}

#[test]
fn audit_discrepancy_shrinks_with_step() {
    let cfg = SimConfig::new(20, 1.0, DistributionSpec::lognormal(0.0, 1.0).normalized(), 6.0)
        .with_grid(RGrid::uniform(5.0, 5).unwrap())
        .with_samples(vec![6.0])
        .with_seed(8)
        .recording();
    let sim = Simulator::new(cfg).unwrap();
    let path = sim.run();
    let coarse = identity_audit(&path, sim.service(), &AuditOptions { step: 0.5, tolerance: 1e-3 }).unwrap();
    let fine = identity_audit(&path, sim.service(), &AuditOptions { step: 0.05, tolerance: 1e-3 }).unwrap();
    assert!(fine.max_discrepancy < coarse.max_discrepancy, "{} vs {}", fine.max_discrepancy, coarse.max_discrepancy);
}

#[test]
fn audit_without_departures_is_bookkeeping() {
    let cfg = SimConfig::new(10, 1.0, lomax(), 3.0).with_init(InitCondition::Empty).with_grid(audit_grid()).with_samples(vec![1.0, 3.0]).recording();
    let sim = Simulator::new(cfg).unwrap();
    let mut work = crate::queue::ScriptedWorkload::new(vec![0.5, 1.0, 2.5], vec![1e6, 1e6, 1e6]);
    let path = sim.run_workload(&mut work, 1);
    assert!(path.samples.iter().all(|s| s.d == 0));
    let report = identity_audit(&path, sim.service(), &AuditOptions { step: 0.01, tolerance: 1e-3 }).unwrap();
    assert!(report.relative < 1e-9, "{}", report.relative);
}

#[test]
fn audit_exponential_collapse_and_missing_log() {
    let cfg = SimConfig::new(30, 1.0, DistributionSpec::exponential(1.0), 5.0).with_grid(audit_grid()).with_samples(vec![1.0, 5.0]).with_seed(2);
    let sim = Simulator::new(cfg.clone().recording()).unwrap();
    let report = identity_audit(&sim.run(), sim.service(), &AuditOptions::default()).unwrap();
    assert!(report.exponential_collapse.unwrap() < 1e-12);
    assert!(report.passed);
    let bare = Simulator::new(cfg).unwrap().run();
    assert!(matches!(identity_audit(&bare, sim.service(), &AuditOptions::default()), Err(crate::Error::Usage(_))));
}

#[test]
fn fluid_inputs_have_zero_deviation() {
    let b = DistributionBundle::new(lomax()).unwrap();
    let grid = audit_grid();
    let times = vec![0.0, 1.0, 2.0];
    let path = FluidPath {
        times: times.clone(),
        x_bar: vec![1.0; 3],
        e_bar: times.iter().map(|t| 0.9 * t).collect(),
        z_bar: vec![grid.nodes().iter().map(|&r| if r == 0.0 { 1.0 } else { b.zbar(r) }).collect(); 3],
    };
    let d = fluid_deviation(&path, &grid, &b, 0.9).unwrap();
    assert!(d.x.iter().chain(&d.z_l2).chain(&d.e).all(|v| *v == 0.0));
}

#[test]
fn fluid_deviation_shrinks_with_n() {
    let b = DistributionBundle::new(lomax()).unwrap();
    let grid = audit_grid();
    let mut means = Vec::new();
    for n in [25usize, 400] {
        let cfg = SimConfig::new(n, 1.0, lomax(), 0.0).with_grid(grid.clone()).with_samples(vec![0.0]);
        let sim = Simulator::new(cfg).unwrap();
        let total: f64 = (0..100u64)
            .map(|s| {
                let p = sim.run_with_seed(s);
                fluid_deviation(&fluid_scale(&p, n), &grid, &b, 1.0).unwrap().z_l2[0]
            })
            .sum();
        means.push(total / 100.0);
    }
    let slope = log_log_slope(&[25.0, 400.0], &means).unwrap();
    assert!((-0.65..=-0.35).contains(&slope), "slope {slope}");
}

#[test]
fn slope_of_a_power_law() {
    let x = [1.0, 10.0, 100.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.5)).collect();
    assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    assert!(log_log_slope(&[1.0], &[1.0]).is_err());
}

fn zero_path(grid: &RGrid, servers: usize) -> ScaledPath {
    ScaledPath {
        servers,
        beta: 1.0,
        seed: 0,
        r_grid: grid.clone(),
        times: vec![0.0],
        x: vec![servers as u64],
        k: vec![0],
        e: vec![0],
        x_hat: vec![0.0],
        z_hat: vec![vec![0.0; grid.len()]],
        dz_hat: vec![vec![0.0; grid.len()]],
    }
}

#[test]
fn zero_paths_have_zero_norms_and_grids_must_match() {
    let b = DistributionBundle::new(lomax()).unwrap();
    let grid = audit_grid();
    let prof = tightness_profile(&[zero_path(&grid, 10), zero_path(&grid, 10)], &[1.0, 5.0, 20.0], &b).unwrap();
    let e = &prof.entries[0];
    assert_eq!(e.replications, 2);
    assert_eq!(e.h1.q99, 0.0);
    assert!(e.windows.iter().all(|w| w.z.mean == 0.0 && w.dz.mean == 0.0 && w.tail.mean == 0.0));
    let other = RGrid::uniform(20.0, 10).unwrap();
    assert!(matches!(tightness_profile(&[zero_path(&grid, 10), zero_path(&other, 10)], &[1.0], &b), Err(crate::Error::Shape(_))));
}

#[test]
fn star_initial_occupancy_meets_its_envelope() {
    let b = DistributionBundle::new(lomax()).unwrap();
    let grid = audit_grid();
    let cfg = SimConfig::new(50, 1.0, lomax(), 0.0).with_grid(grid.clone()).with_samples(vec![0.0]);
    let sim = Simulator::new(cfg).unwrap();
    let paths: Vec<ScaledPath> = (0..2000u64).map(|s| sim.run_with_seed(s).scaled()).collect();
    let ladder = [0.5, 2.0, 8.0, 20.0];
    let prof = tightness_profile(&paths, &ladder, &b).unwrap();
    assert!(prof.reference_excess <= 3.0, "excess {}", prof.reference_excess);
    let e = &prof.entries[0];
    for w in e.windows.windows(2) {
        assert!(w[1].z.mean >= w[0].z.mean && w[1].tail.mean <= w[0].tail.mean);
    }
    assert_eq!(e.windows[3].tail.q99, 0.0);
    assert!(e.beyond_grid.mean > 0.0);
}
