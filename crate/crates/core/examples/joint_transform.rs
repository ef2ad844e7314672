//! Series evaluation of E[s^|Z| exp(u M)] against direct simulation.

use geoforest::analytics::SeriesConfig;
use geoforest::harness::experiments::{transform, TransformConfig};

fn main() -> geoforest::Result<()> {
    let report = transform(&TransformConfig {
        points: vec![(0.3, 0.0), (0.5, 0.0), (0.5, 1.0 / 12.0), (0.8, 0.0)],
        series: SeriesConfig { mc_samples_per_term: 20_000, ..SeriesConfig::default() },
        oracle_samples: 20_000,
        seed: 4,
        ..TransformConfig::default()
    })?;
    println!("{:>5} {:>7} {:>9} {:>9} {:>6} {:>10}", "s", "u", "series", "direct", "terms", "tail");
    for row in &report.rows {
        let direct = row.oracle.map_or(f64::NAN, |e| e.value);
        println!("{:>5} {:>7.4} {:>9.5} {direct:>9.5} {:>6} {:>10.2e}",
            row.s, row.u, row.value.value, row.value.terms, row.value.truncation_bound);
    }
    Ok(())
}
