//! One N-server run from the stationary-fluid start, printed in diffusion scale.

use hwlab::dist::DistributionSpec;
use hwlab::queue::{SimConfig, Simulator};

fn main() -> hwlab::Result<()> {
    let config = SimConfig::new(200, 1.0, DistributionSpec::lomax_unit(4.0), 10.0).sample_every(1.0).recording().with_seed(7);
    let sim = Simulator::new(config)?;
    let path = sim.run();
    println!("{} events, invariants {:?}", path.events.len(), path.invariants());
    let scaled = path.scaled();
    for i in 0..scaled.len() {
        println!("t {:>5.1}  X {:>4}  x_hat {:>7.3}  z_hat(0) {:>7.3}", scaled.times[i], scaled.x[i], scaled.x_hat[i], scaled.z_hat[i][0]);
    }
    let csv = std::env::temp_dir().join("hwlab-queue-path.csv");
    scaled.write_csv(std::fs::File::create(&csv)?)?;
    println!("wrote {}", csv.display());
    Ok(())
}
