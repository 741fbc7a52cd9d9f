//! Run a config file through the experiment runner, as the CLI does.
//!
//! `cargo run --example run_experiment -- configs/verify_lomax.toml /tmp/out`

use std::path::PathBuf;

use hwlab::experiment::{run_experiment, Overrides};

fn main() -> hwlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = PathBuf::from(args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/verify_lomax.toml").into()));
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("hwlab-example"));
    let outcome = run_experiment(&config, &Overrides { out: Some(out), check: true, ..Default::default() })?;
    println!("wrote {} (config hash {})", outcome.out_dir.display(), outcome.hash);
    for c in &outcome.checks {
        println!("  {:<32} value {:>12.4e}  threshold {:<10.4e} {}", c.name, c.value, c.threshold, if c.passed { "ok" } else { "FAILED" });
    }
    Ok(())
}
