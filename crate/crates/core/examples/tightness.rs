//! Fluid deviation and windowed norm profile over a few server counts.

use hwlab::diagnostics::{fluid_deviation, log_log_slope, tightness_profile};
use hwlab::dist::{DistributionBundle, DistributionSpec};
use hwlab::queue::{fluid_scale, SimConfig, Simulator};
use hwlab::rng::seed_split;

fn main() -> hwlab::Result<()> {
    let spec = DistributionSpec::lomax_unit(4.0);
    let service = DistributionBundle::new(spec.clone())?;
    let ns = [25usize, 100, 400];
    let mut paths = Vec::new();
    let mut deviation = Vec::new();
    for &n in &ns {
        let sim = Simulator::new(SimConfig::new(n, 1.0, spec.clone(), 5.0).with_samples(vec![0.0, 5.0]))?;
        let mut total = 0.0;
        for r in 0..50 {
            let path = sim.run_with_seed(seed_split(n as u64, r));
            let fluid = fluid_deviation(&fluid_scale(&path, n), &path.r_grid, &service, path.lambda / n as f64)?;
            total += fluid.z_l2[0];
            paths.push(path.scaled());
        }
        deviation.push(total / 50.0);
    }
    let slope = log_log_slope(&ns.map(|n| n as f64), &deviation)?;
    println!("mean L2 distance of Z/N to the fluid limit: {deviation:?}, slope {slope:.3}");
    let profile = tightness_profile(&paths, &[1.0, 5.0, 20.0], &service)?;
    for e in &profile.entries {
        println!("N {:>4} t {:.0}: mean H1 {:.3}", e.servers, e.t, e.h1.mean);
    }
    Ok(())
}
