//! Law of the root of direction (1, 1) above a Bernoulli substrate, read
//! from the lattice and from the dual random walk.

use geoforest::forest::CheckpointSchedule;
use geoforest::harness::experiments::{root_dist, RootDistConfig, RootPolicy};

fn main() -> geoforest::Result<()> {
    let cfg = RootDistConfig {
        replicas: 400,
        seed: 3,
        schedule: CheckpointSchedule { n0: 64, count: 3, agree: 2 },
        zmax: 8,
        policy: RootPolicy::LastCheckpoint,
        ..RootDistConfig::default()
    };
    let report = root_dist(&cfg)?;
    let walk = report.walk_z();
    let count = |v: &[i64], z: i64| v.iter().filter(|&&x| x == z).count() as f64;
    let (nl, nw) = (report.lattice.len() as f64, walk.len() as f64);

    println!("{:>4} {:>8} {:>8}", "z", "lattice", "walk");
    for z in -cfg.zmax..=cfg.zmax {
        println!("{z:>4} {:>8.4} {:>8.4}", count(&report.lattice, z) / nl, count(&walk, z) / nw);
    }
    println!("P(Z = 0): lattice {:.4}, walk {:.4}, closed form {:.4}",
        report.lattice_p0.value, report.walk_p0.value, report.closed_form_p0.unwrap_or(f64::NAN));
    println!("TV distance {:.4}; checkpoints disagreed for {:.1}% of replicas", report.tv, 100.0 * report.unstable_rate);
    Ok(())
}
