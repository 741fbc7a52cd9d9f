//! Occupancy function of a set of in-service ages and its derivative.

use hwlab::dist::{DistributionBundle, DistributionSpec};
use hwlab::kernels::{h1_norm, t_map, t_map_derivative, AgeVector, RGrid};

fn main() -> hwlab::Result<()> {
    let service = DistributionBundle::new(DistributionSpec::lomax_unit(4.0))?;
    let ages = AgeVector::new(vec![0.0, 0.3, 1.2, 4.0]);
    let grid = RGrid::uniform(5.0, 10)?;
    let z = t_map(&service, &ages, &grid);
    let dz = t_map_derivative(&service, &ages, &grid);
    println!("{:>6} {:>10} {:>10}", "r", "Z(r)", "Z'(r)");
    for ((r, v), d) in grid.nodes().iter().zip(&z).zip(&dz) {
        println!("{r:>6.2} {v:>10.5} {d:>10.5}");
    }
    println!("H1 norm on the grid: {:.5}", h1_norm(&z, &dz, &grid)?);
    Ok(())
}
