use geoforest::forest::{build_forest, Region};
use geoforest::harness::stats::{histogram, ks_statistic, tv_distance};
use geoforest::lattice::{geodesic, last_passage, path_weight, point_to_line, PassageTable, WeightGrid};
use geoforest::walk::{direct_max, lindley_process, lindley_tau};
use geoforest::{Point, Substrate};
use proptest::prelude::*;

fn step_string() -> impl Strategy<Value = String> {
    (prop::collection::vec(prop::bool::ANY, 0..40), prop::collection::vec(prop::bool::ANY, 0..40)).prop_map(|(l, r)| {
        let left: String = l.iter().map(|&b| if b { 'U' } else { 'L' }).collect();
        let right: String = r.iter().map(|&b| if b { 'D' } else { 'R' }).collect();
        left + &right
    })
}

/// Substrates with a corner at the origin and at least a few steps per side.
fn substrate() -> impl Strategy<Value = Substrate> {
    (prop::collection::vec(prop::bool::ANY, 4..30), prop::collection::vec(prop::bool::ANY, 4..30)).prop_map(|(l, r)| {
        let left: String = l.iter().map(|&b| if b { 'U' } else { 'L' }).collect();
        let right: String = r.iter().map(|&b| if b { 'D' } else { 'R' }).collect();
        Substrate::from_step_string(&format!("{left}UR{right}")).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn step_string_roundtrip(s in step_string()) {
        let sub = Substrate::from_step_string(&s).unwrap();
        prop_assert_eq!(sub.to_step_string(), s);
    }

    #[test]
    fn passage_recursion(w in 1usize..14, h in 1usize..14, seed in any::<u64>()) {
        let grid = WeightGrid::sample(Point::new(-3, 2), w, h, seed).unwrap();
        let (lo, hi) = (grid.origin(), grid.top());
        let table = PassageTable::new(&grid, lo, hi).unwrap();
        for x2 in lo.x2..=hi.x2 {
            for x1 in lo.x1..=hi.x1 {
                let p = Point::new(x1, x2);
                let prev = [Point::new(x1 - 1, x2), Point::new(x1, x2 - 1)]
                    .iter()
                    .filter_map(|&q| table.value(q))
                    .fold(f64::NEG_INFINITY, f64::max);
                let expect = grid.get(p).unwrap() + if prev.is_finite() { prev } else { 0.0 };
                prop_assert_eq!(table.value(p).unwrap(), expect);
            }
        }
        let g = last_passage(&grid, lo, hi).unwrap();
        let path = geodesic(&grid, lo, hi).unwrap();
        prop_assert_eq!(path.len(), w + h - 1);
        prop_assert!((path_weight(&grid, &path).unwrap() - g).abs() <= 1e-12 * g.max(1.0));
    }

    #[test]
    fn forests_do_not_cross(sub in substrate(), seed in any::<u64>(), dx in 0i64..12, dy in 0i64..12) {
        let hi = Point::new(dx, dy);
        prop_assume!(sub.covers(hi) && sub.in_growth_region(hi));
        let lo = sub.required_origin(hi).unwrap();
        let grid = WeightGrid::sample_box(lo, hi, seed).unwrap();
        let map = build_forest(&grid, &sub, Region::exact(lo, hi)).unwrap();
        prop_assert!(map.is_non_crossing());
        let ranks: Vec<i64> = sub.corners().iter().map(|c| c.rank).collect();
        for (_, r) in map.iter() {
            prop_assert!(ranks.contains(&r));
        }
    }

    #[test]
    fn root_is_the_best_corner(sub in substrate(), seed in any::<u64>(), dx in 0i64..10, dy in 0i64..10) {
        let x = Point::new(dx, dy);
        prop_assume!(sub.covers(x) && sub.in_growth_region(x));
        let lo = sub.required_origin(x).unwrap();
        let grid = WeightGrid::sample_box(lo, x, seed).unwrap();
        let line = point_to_line(&grid, &sub, x).unwrap();
        let (mut best, mut root) = (f64::NEG_INFINITY, i64::MIN);
        for c in sub.corners_below(x) {
            let seed_point = c.position + Point::D;
            if seed_point.is_below(x) {
                let v = last_passage(&grid, seed_point, x).unwrap();
                if v > best {
                    (best, root) = (v, c.rank);
                }
            }
        }
        prop_assert_eq!(line.root, root);
        prop_assert!((line.value - best).abs() <= 1e-12 * best.max(1.0));
    }

    #[test]
    fn lindley_matches_direct_max(incs in prop::collection::vec(-5.0f64..3.0, 1..200)) {
        let (z, m) = direct_max(&incs);
        let (tau, w0) = lindley_tau(&lindley_process(&incs).unwrap());
        prop_assert!((m - w0).abs() <= 1e-9 * (1.0 + m));
        if m > 0.0 {
            let s: f64 = incs[..z].iter().sum();
            prop_assert!((s - m).abs() <= 1e-9 * (1.0 + m));
        }
        prop_assert_eq!(tau, z);
    }

    #[test]
    fn distances_are_symmetric_and_bounded(a in prop::collection::vec(-6i64..6, 1..80), b in prop::collection::vec(-6i64..6, 1..80)) {
        let (p, q) = (histogram(&a, -4, 4), histogram(&b, -4, 4));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let d = tv_distance(&p, &q);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&d));
        prop_assert_eq!(d, tv_distance(&q, &p));
        let (fa, fb): (Vec<f64>, Vec<f64>) = (a.iter().map(|&v| v as f64).collect(), b.iter().map(|&v| v as f64).collect());
        let k = ks_statistic(&fa, &fb);
        prop_assert!((0.0..=1.0).contains(&k));
        prop_assert_eq!(k, ks_statistic(&fb, &fa));
    }
}
