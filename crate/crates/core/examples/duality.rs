//! Coalescence time of the geodesics from (1, 0) and (m, 0) against the
//! largest height of the trees rooted at 1..=m.

use geoforest::harness::experiments::{dual, DualConfig, GeodesicMode};

fn main() -> geoforest::Result<()> {
    for geodesics in [GeodesicMode::PointToPoint, GeodesicMode::Stationary] {
        let report = dual(&DualConfig {
            replicas: 300,
            n: 200,
            seed: 1,
            geodesics,
            ..DualConfig::default()
        })?;
        println!(
            "{geodesics:?}: E[T] = {:.1} +- {:.1}, E[H] = {:.1} +- {:.1}, KS {:.3} (1% critical {:.3}), doubling changed {:.1}%",
            report.mean_t.value, report.mean_t.stderr, report.mean_h.value, report.mean_h.stderr,
            report.ks, report.ks_critical_01, 100.0 * report.changed_on_doubling
        );
    }
    Ok(())
}
