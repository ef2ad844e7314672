//! Roots of several directions read on one forest: as the slope approaches
//! the edge of the rarefaction interval the root runs off to the left.

use geoforest::harness::experiments::{root_escape, RootEscapeConfig};

fn main() -> geoforest::Result<()> {
    let report = root_escape(&RootEscapeConfig {
        replicas: 60,
        level: 512,
        seed: 8,
        ..RootEscapeConfig::default()
    })?;
    println!("{:>5} {:>8} {:>8} {:>7} {:>7}", "a", "med|Z|", "mean Z", "P0", "exact");
    for row in &report.rows {
        println!("{:>5} {:>8} {:>8.2} {:>7.3} {:>7.3}",
            row.a, row.median_abs_z, row.mean_z, row.p0.value, row.closed_form_p0.unwrap_or(f64::NAN));
    }
    println!("order violations between neighbouring slopes: {}", report.violations);
    Ok(())
}
