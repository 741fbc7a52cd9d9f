//! Stationary queue length of M/M/10 against the birth-death law, and the
//! stationary scaled state against the exponential-service limit.

use hwlab::diffusion::ScalarDiffusion;
use hwlab::dist::DistributionSpec;
use hwlab::queue::SimConfig;
use hwlab::stats::{erlang_oracle, estimate_queue_stationary, frequencies, ks_against_cdf, total_variation, Functional, Sampling};

fn main() -> hwlab::Result<()> {
    let config = SimConfig::new(10, 1.0, DistributionSpec::exponential(1.0), 0.0).without_z().with_seed(1);
    let sampling = Sampling { burn_in: 50.0, spacing: 2.0, per_run: 5000, draws: 20_000 };
    let laws = estimate_queue_stationary(&config, &sampling, &[Functional::QueueLength, Functional::X])?;
    let exact = erlang_oracle(10, config.arrival_rate())?;
    let observed = frequencies(laws[0].values());
    println!("TV to the Erlang law: {:.4}", total_variation(&observed, &exact, exact.len()));
    let limit = ScalarDiffusion::new(1.0, 1.0);
    println!(
        "KS of x_hat to the N -> infinity law: {:.4} (finite-N bias included)",
        ks_against_cdf(laws[1].values(), |x| limit.stationary_cdf(x))
    );
    Ok(())
}
