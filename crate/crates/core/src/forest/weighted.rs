//! Forests grown from a weighted substrate `nu` on the horizontal axis.
//!
//! Row 1 is `L(x, 1) = W(x, 1) + max(L(x - 1, 1), nu(x))` and row `n > 1` is
//! the usual recursion; a cell's root is the `k` whose term `nu(k)` starts its
//! maximizing path. Only `k` inside the simulated window compete, so labels
//! near the left end of the window may differ from the infinite-volume ones.

use crate::error::{invalid, Error, Result};
use crate::forest::{HeightRecord, TreeHeights};
use crate::lattice::{Point, WeightGrid, NO_ROOT};
use crate::rng::ExpField;
use crate::substrate::{gen_weighted_flat, WeightedSubstrate};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedLineValue {
    pub value: f64,
    /// The maximizing substrate site `K_nu`.
    pub root: i64,
}

/// Row dynamic program over `x` in `a..=b` for rows `1..=rows`. `visit`
/// receives each row and returns `false` to stop early.
fn rows_dp<W, F>(weight: W, nu: &WeightedSubstrate, a: i64, b: i64, rows: i64, mut visit: F)
where
    W: Fn(i64, i64) -> f64,
    F: FnMut(i64, &[f64], &[i64]) -> bool,
{
    let width = (b - a + 1) as usize;
    let mut vals = vec![0.0; width];
    let mut roots = vec![NO_ROOT; width];
    let (mut left, mut left_root) = (f64::NEG_INFINITY, NO_ROOT);
    for (j, x) in (a..=b).enumerate() {
        let start = nu.nu(x).unwrap();
        // ties go to the horizontal predecessor
        let (best, root) = if left >= start { (left, left_root) } else { (start, x) };
        vals[j] = weight(x, 1) + best;
        roots[j] = root;
        (left, left_root) = (vals[j], root);
    }
    if !visit(1, &vals, &roots) {
        return;
    }
    for n in 2..=rows {
        let (mut left, mut left_root) = (f64::NEG_INFINITY, NO_ROOT);
        for (j, x) in (a..=b).enumerate() {
            if left >= vals[j] {
                vals[j] = left;
                roots[j] = left_root;
            }
            vals[j] += weight(x, n);
            (left, left_root) = (vals[j], roots[j]);
        }
        if !visit(n, &vals, &roots) {
            return;
        }
    }
}

/// `L_nu(x, n) = max_k {nu(k) + L((k, 1), (x, n))}` over the substrate
/// window, with its maximizer.
pub fn weighted_point_to_line(grid: &WeightGrid, nu: &WeightedSubstrate, x: i64, n: i64) -> Result<WeightedLineValue> {
    if n < 1 {
        return Err(invalid(format!("row must be at least 1, got {n}")));
    }
    if x < nu.lo() || x > nu.hi() {
        return Err(Error::InsufficientWindow(format!(
            "x = {x} outside the substrate window [{}, {}]",
            nu.lo(),
            nu.hi()
        )));
    }
    for p in [Point::new(nu.lo(), 1), Point::new(x, n)] {
        if !grid.contains(p) {
            return Err(Error::OutOfGrid(p));
        }
    }
    let mut out = None;
    rows_dp(
        |x1, x2| grid.get(Point::new(x1, x2)).unwrap(),
        nu,
        nu.lo(),
        x,
        n,
        |row, vals, roots| {
            if row == n {
                out = Some(WeightedLineValue {
                    value: *vals.last().unwrap(),
                    root: *roots.last().unwrap(),
                });
            }
            true
        },
    );
    Ok(out.unwrap())
}

/// Heights `H_k` of the trees rooted at `k` in `r_lo..=r_hi`, censored at
/// `n_max`, over the given substrate and the lattice field of `seed`.
///
/// Fails with [`Error::InsufficientWindow`] if a tracked tree touches either
/// end of the substrate window.
pub fn weighted_heights(nu: &WeightedSubstrate, seed: u64, r_lo: i64, r_hi: i64, n_max: u64) -> Result<TreeHeights> {
    if r_hi < r_lo || r_lo <= nu.lo() || r_hi >= nu.hi() {
        return Err(invalid(format!(
            "root range [{r_lo}, {r_hi}] must lie strictly inside the window [{}, {}]",
            nu.lo(),
            nu.hi()
        )));
    }
    let field = ExpField::lattice(seed);
    let k = (r_hi - r_lo + 1) as usize;
    let mut last_row = vec![0i64; k];
    let mut alive = Vec::new();
    let mut edge = None;
    let tracked = |r: i64| r >= r_lo && r <= r_hi;
    rows_dp(
        |x1, x2| field.at(x1, x2),
        nu,
        nu.lo(),
        nu.hi(),
        n_max as i64,
        |n, _, roots| {
            if tracked(roots[0]) || tracked(*roots.last().unwrap()) {
                edge = Some(n);
                return false;
            }
            let mut count = 0;
            let mut prev = None;
            for &r in roots {
                if tracked(r) {
                    last_row[(r - r_lo) as usize] = n;
                    if prev != Some(r) {
                        count += 1;
                        prev = Some(r);
                    }
                }
            }
            if count > 0 {
                alive.push(count);
            }
            count > 0
        },
    );
    if let Some(n) = edge {
        return Err(Error::InsufficientWindow(format!(
            "a tree rooted in [{r_lo}, {r_hi}] reaches the end of the window [{}, {}] at row {n}",
            nu.lo(),
            nu.hi()
        )));
    }
    let n_max = n_max as i64;
    Ok(TreeHeights {
        r_lo,
        n_max: n_max as u64,
        heights: last_row.iter().map(|&n| n as u64).collect(),
        censored: last_row.iter().map(|&n| n == n_max).collect(),
        alive,
    })
}

/// Lateral margin of the window used by the automatic sizing below: roots
/// of cells at row `n` fluctuate on the scale `n^(2/3)`.
fn margin(n: u64) -> i64 {
    (8.0 * (n as f64).powf(2.0 / 3.0)) as i64 + 64
}

/// Heights of the trees rooted in `r_lo..=r_hi` for the exponential weighted
/// substrate with rate `1 - p` on both sides. The window is sized from the
/// level budget and its margins doubled while a tracked tree touches an end.
pub fn weighted_heights_auto(p: f64, seed: u64, r_lo: i64, r_hi: i64, n_max: u64) -> Result<TreeHeights> {
    let mut extra = margin(n_max);
    loop {
        let lo = r_lo - extra;
        let hi = r_hi + n_max as i64 + extra;
        let nu = gen_weighted_flat(p, lo, hi, seed)?;
        match weighted_heights(&nu, seed, r_lo, r_hi, n_max) {
            Err(Error::InsufficientWindow(_)) if extra < 64 * margin(n_max) => extra *= 2,
            other => return other,
        }
    }
}

/// `H_k` for the weighted substrate with parameter `p` on both sides.
pub fn weighted_tree_height(p: f64, seed: u64, k: i64, n_max: u64) -> Result<HeightRecord> {
    Ok(weighted_heights_auto(p, seed, k, k, n_max)?.record(k).unwrap())
}

/// `H(m) = max_{k in (0, m]} H_k` for the weighted substrate with parameter
/// `p` on both sides.
pub fn weighted_max_height(p: f64, seed: u64, m: i64, n_max: u64) -> Result<HeightRecord> {
    if m < 1 {
        return Err(invalid(format!("m must be at least 1, got {m}")));
    }
    Ok(weighted_heights_auto(p, seed, 1, m, n_max)?.max())
}
