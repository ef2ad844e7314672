//! Tree heights over the flat diagonal substrate by streaming antidiagonals.
//!
//! Corner `z` sits at `(z, -z)` and seeds the level-2 cell `(z + 1, 1 - z)`.
//! To follow the trees rooted in `[r_lo, r_hi]` up to level `N + 1`, level
//! `l` is computed on `x1` in `[r_lo + 1 - (N + 1 - l), r_hi + N]`: every
//! cell there has both predecessors inside the previous level's window, and
//! level 2 consists of seeds only, so all labels are exact. Streaming stops
//! at the first level on which no tree of interest survives; if some tree
//! is still alive at `N + 1`, the run restarts with `2N`, up to `n_max`.

use crate::error::{invalid, Result};
use crate::forest::{HeightRecord, TreeHeights};
use crate::rng::ExpField;

const FIRST_EPOCH: i64 = 16;

/// Heights of the trees rooted at corners `r_lo..=r_hi` of the flat diagonal
/// substrate, with lattice weights from the field of `seed`, censored at
/// `n_max`.
pub fn flat_heights(seed: u64, r_lo: i64, r_hi: i64, n_max: u64) -> Result<TreeHeights> {
    if r_hi < r_lo {
        return Err(invalid(format!("empty root range [{r_lo}, {r_hi}]")));
    }
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    let field = ExpField::lattice(seed);
    let n_max = n_max as i64;
    let mut n = FIRST_EPOCH.min(n_max);
    loop {
        if let Some(h) = epoch(&field, r_lo, r_hi, n, n_max) {
            return Ok(h);
        }
        n = (2 * n).min(n_max);
    }
}

/// Streams levels `2..=n + 1`. Returns `None` if a tracked tree is alive at
/// level `n + 1` and `n` is below the budget.
fn epoch(field: &ExpField, r_lo: i64, r_hi: i64, n: i64, n_max: i64) -> Option<TreeHeights> {
    let k = (r_hi - r_lo + 1) as usize;
    let mut last_level = vec![0i64; k];
    let mut alive = Vec::new();

    let hi = r_hi + n;
    let mut lo = r_lo + 1 - (n - 1);
    let mut vals: Vec<f64> = (lo..=hi).map(|x1| field.at(x1, 2 - x1)).collect();
    let mut roots: Vec<i64> = (lo..=hi).map(|x1| x1 - 1).collect();
    let mut next_vals = Vec::with_capacity(vals.len());
    let mut next_roots = Vec::with_capacity(vals.len());

    let mut level = 2;
    loop {
        let mut count = 0;
        let mut prev = None;
        for &r in &roots {
            if r >= r_lo && r <= r_hi {
                last_level[(r - r_lo) as usize] = level;
                if prev != Some(r) {
                    count += 1;
                    prev = Some(r);
                }
            }
        }
        alive.push(count);
        if count == 0 || level == n + 1 {
            break;
        }

        level += 1;
        lo += 1;
        next_vals.clear();
        next_roots.clear();
        for j in 0..vals.len() - 1 {
            let x1 = lo + j as i64;
            // e1-predecessor is vals[j], e2-predecessor is vals[j + 1]
            let (v, r) = if vals[j] >= vals[j + 1] {
                (vals[j], roots[j])
            } else {
                (vals[j + 1], roots[j + 1])
            };
            next_vals.push(v + field.at(x1, level - x1));
            next_roots.push(r);
        }
        std::mem::swap(&mut vals, &mut next_vals);
        std::mem::swap(&mut roots, &mut next_roots);
    }

    let top = n + 1;
    let survived = last_level.iter().any(|&l| l == top);
    if survived && n < n_max {
        return None;
    }
    if alive.last() == Some(&0) {
        alive.pop();
    }
    Some(TreeHeights {
        r_lo,
        n_max: n_max as u64,
        heights: last_level.iter().map(|&l| (l - 1) as u64).collect(),
        censored: last_level.iter().map(|&l| l == top).collect(),
        alive,
    })
}

/// `H_z` of the flat diagonal substrate.
pub fn tree_height(seed: u64, z: i64, n_max: u64) -> Result<HeightRecord> {
    Ok(flat_heights(seed, z, z, n_max)?.record(z).unwrap())
}

/// `H(m) = max_{z in (0, m]} H_z` of the flat diagonal substrate.
pub fn max_height(seed: u64, m: i64, n_max: u64) -> Result<HeightRecord> {
    if m < 1 {
        return Err(invalid(format!("m must be at least 1, got {m}")));
    }
    Ok(flat_heights(seed, 1, m, n_max)?.max())
}
