//! Argmax and maximum of the two-sided walk against the M/M/1 closed forms.

use geoforest::harness::experiments::{walk_dist, WalkDistConfig};

fn main() -> geoforest::Result<()> {
    let report = walk_dist(&WalkDistConfig {
        replicas: 20_000,
        seed: 5,
        ..WalkDistConfig::default()
    })?;
    println!("P(Z = 0) = {:.4} +- {:.4} (closed form {:.4})",
        report.p0.value, report.p0.stderr, report.closed_form_p0.unwrap_or(f64::NAN));
    println!("E[M] = {:.4} +- {:.4}", report.mean_max.value, report.mean_max.stderr);
    println!("{:>6} {:>5} {:>9} {:>9}", "side", "x", "P(M > x)", "exact");
    for row in &report.one_sided {
        println!("{:>6} {:>5} {:>9.4} {:>9.4}", format!("{:?}", row.side), row.x, row.estimate.value, row.closed_form);
    }
    Ok(())
}
