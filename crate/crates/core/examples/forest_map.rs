//! Draws the forest above a Bernoulli substrate: every site of a box is
//! printed with the corner rank of its root, modulo 36.

use geoforest::harness::experiments::{forest_map, ForestConfig};
use geoforest::{Point, SubstrateSpec};

fn main() -> geoforest::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = ForestConfig {
        substrate: SubstrateSpec::Bernoulli { p_minus: 2.0 / 3.0, p_plus: 1.0 / 3.0 },
        lo: Some((-12, -12)),
        hi: (30, 30),
        seed,
    };
    let report = forest_map(&cfg)?;
    let map = &report.map;
    let region = map.region();

    const DIGITS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyz";
    for x2 in (region.lo.x2..=region.hi.x2).rev() {
        let row: String = (region.lo.x1..=region.hi.x1)
            .map(|x1| match map.root(Point::new(x1, x2)) {
                Some(z) => DIGITS[z.rem_euclid(36) as usize] as char,
                None => '.',
            })
            .collect();
        println!("{row}");
    }
    println!("non-crossing: {}", map.is_non_crossing());
    let top = map.level(region.hi.x1 + region.hi.x2 - 10);
    let mut roots: Vec<i64> = top.iter().map(|&(_, z)| z).collect();
    roots.dedup();
    println!("roots on level {}: {roots:?}", region.hi.x1 + region.hi.x2 - 10);
    Ok(())
}
