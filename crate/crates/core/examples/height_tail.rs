//! Survival function of the height of the tree rooted at the origin of the
//! flat substrate, with a log-log fit.

use geoforest::harness::experiments::{height_tail, HeightTailConfig, CONJECTURED_PLATEAU};

fn main() -> geoforest::Result<()> {
    let report = height_tail(&HeightTailConfig {
        samples: 4000,
        n_max: 256,
        seed: 2,
        fit_range: None,
    })?;
    for n in [1, 2, 4, 8, 16, 32, 64, 128, 256] {
        if let Some(p) = report.survival.get(n - 1) {
            println!("P(H >= {n:>3}) = {:.4}", p.value);
        }
    }
    match &report.fit {
        Some(fit) => println!(
            "exponent {:.3} over {:?}, n^(2/3) P(H >= n) between {:.3} and {:.3} (conjectured limit {:.3})",
            fit.exponent, fit.fit_range, fit.plateau_min(),
            fit.plateau.iter().map(|p| p.1).fold(0.0, f64::max), CONJECTURED_PLATEAU
        ),
        None => println!("no fit: {}", report.fit_error.as_deref().unwrap_or("?")),
    }
    println!("censored: {:.2}%", 100.0 * report.censored_fraction);
    Ok(())
}
