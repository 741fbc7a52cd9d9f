//! Resolve a few service laws to unit mean and check the modeling assumptions.

use hwlab::dist::{default_grid, verify_assumptions, DistributionBundle, DistributionSpec, Tolerances};

fn main() -> hwlab::Result<()> {
    let specs = [
        DistributionSpec::exponential(1.0),
        DistributionSpec::lomax_unit(4.0),
        DistributionSpec::lognormal(0.0, 0.5).normalized(),
        DistributionSpec::gamma(2.0, 2.0),
        "lomax alpha=2.5 normalize".parse()?,
    ];
    for spec in specs {
        let b = DistributionBundle::new(spec)?;
        let report = verify_assumptions(&b, &default_grid(b.mean()), Tolerances::default());
        println!(
            "{:<12} mean {:.6}  sup h {:>8.3}  tail exponent {:>6.2}  passed {}",
            b.family().name(),
            b.mean(),
            report.sup_hazard,
            report.sf_tail_exponent,
            report.passed
        );
        for c in report.clauses.iter().filter(|c| !c.passed) {
            println!("    fails {}: {} vs {}", c.clause, c.value, c.threshold);
        }
    }
    Ok(())
}
