//! Point-to-point passage times against the shape function
//! `(sqrt(x1) + sqrt(x2))^2`, and one geodesic.

use geoforest::lattice::{geodesic, last_passage, WeightGrid};
use geoforest::Point;

fn main() -> geoforest::Result<()> {
    let n = 400;
    let grid = WeightGrid::sample_box(Point::ORIGIN, Point::new(n, n), 11)?;
    println!("{:>6} {:>6} {:>10} {:>10} {:>8}", "x1", "x2", "G", "shape", "ratio");
    for (x1, x2) in [(n, n), (n, n / 4), (n / 4, n), (n / 2, n / 2)] {
        let g = last_passage(&grid, Point::ORIGIN, Point::new(x1, x2))?;
        let shape = ((x1 as f64).sqrt() + (x2 as f64).sqrt()).powi(2);
        println!("{x1:>6} {x2:>6} {g:>10.2} {shape:>10.2} {:>8.4}", g / shape);
    }

    let path = geodesic(&grid, Point::ORIGIN, Point::new(n, n))?;
    let off: i64 = path.vertices().iter().map(|p| (p.x1 - p.x2).abs()).max().unwrap();
    println!("geodesic to ({n}, {n}): {} sites, largest distance from the diagonal {off}", path.len());
    Ok(())
}
