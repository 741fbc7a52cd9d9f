//! One path of the limit process with its occupancy component and solver residuals.

use hwlab::diffusion::{DiffusionConfig, DiffusionModel};
use hwlab::dist::DistributionSpec;

fn main() -> hwlab::Result<()> {
    let config = DiffusionConfig::new(DistributionSpec::lomax_unit(4.0), 1.0, 5.0)
        .with_dt(0.005)
        .with_cells(64)
        .with_samples(vec![1.0, 2.5, 5.0]);
    let model = DiffusionModel::new(config)?;
    let path = model.run(3)?;
    println!("residuals {:?}, boundary error {:.2e}", path.residuals, path.boundary_error);
    for s in &path.samples {
        println!("t {:.1}  X {:>7.4}  K {:>7.4}  Z(0) {:>7.4}  Z(1) {:>7.4}", s.t, s.x, s.k, s.z[0], path.r_grid.interpolate(&s.z, 1.0));
    }
    Ok(())
}
