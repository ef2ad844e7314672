//! Geodesic forests: root maps, tree heights, root counting, asymptotic
//! roots and coalescence of geodesics.

mod flat;
mod weighted;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{labeled_dp, Point, WeightGrid, NO_ROOT};
use crate::rng::{tag, ExpField};
use crate::substrate::Substrate;

pub use flat::{flat_heights, max_height, tree_height};
pub use weighted::{
    weighted_heights, weighted_heights_auto, weighted_max_height, weighted_point_to_line, weighted_tree_height,
    WeightedLineValue,
};

/// Height of one tree, censored at the level budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct HeightRecord {
    pub z: i64,
    pub height: u64,
    pub censored: bool,
}

/// `count` roots in `(0, m]` own a point on antidiagonal level `n + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CountingRecord {
    pub n: i64,
    pub m: i64,
    pub count: usize,
}

/// Heights of the trees rooted at `r_lo..=r_hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeHeights {
    pub r_lo: i64,
    pub n_max: u64,
    pub heights: Vec<u64>,
    pub censored: Vec<bool>,
    /// `alive[n - 1]` = number of tracked trees of height at least `n`, for
    /// `n = 1, 2, ...` until the first zero or `n_max`.
    pub alive: Vec<usize>,
}

impl TreeHeights {
    pub fn record(&self, z: i64) -> Option<HeightRecord> {
        let i = usize::try_from(z - self.r_lo).ok()?;
        Some(HeightRecord {
            z,
            height: *self.heights.get(i)?,
            censored: self.censored[i],
        })
    }

    /// `H(m)` for the tracked range: the largest height, censored if any
    /// tree reached the budget.
    pub fn max(&self) -> HeightRecord {
        let (i, &h) = self.heights.iter().enumerate().max_by_key(|&(i, h)| (*h, std::cmp::Reverse(i))).unwrap();
        HeightRecord {
            z: self.r_lo + i as i64,
            height: h,
            censored: self.censored.iter().any(|&c| c),
        }
    }

    /// Tracked trees of height at least `n` (for flat trees: roots owning a
    /// point on level `n + 1`), or `None` past the budget.
    pub fn counting(&self, n: u64) -> Option<CountingRecord> {
        if n == 0 || n > self.n_max {
            return None;
        }
        let count = self.alive.get(n as usize - 1).copied().unwrap_or(0);
        Some(CountingRecord {
            n: n as i64,
            m: self.heights.len() as i64,
            count,
        })
    }
}

/// A box of lattice points; `approximate` allows corner seeds below the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Region {
    pub lo: Point,
    pub hi: Point,
    pub approximate: bool,
}

impl Region {
    pub fn exact(lo: Point, hi: Point) -> Self {
        Self {
            lo,
            hi,
            approximate: false,
        }
    }
}

/// Root (corner rank) of every growth-region point of a box.
#[derive(Clone, Debug, PartialEq)]
pub struct RootMap {
    region: Region,
    width: usize,
    roots: Vec<i64>,
}

/// Labels every point of `region` with its root.
///
/// Unless the region is flagged approximate, it must hold the seed `z + d` of
/// every corner below its top-right point, which makes every label exact.
pub fn build_forest(grid: &WeightGrid, sub: &Substrate, region: Region) -> Result<RootMap> {
    let Region { lo, hi, approximate } = region;
    if !lo.is_below(hi) {
        return Err(Error::NotOrdered { from: lo, to: hi });
    }
    if !approximate {
        match sub.required_origin(hi) {
            Ok(need) if !lo.is_below(need) => {
                return Err(Error::InsufficientWindow(format!(
                    "region starts at {lo} but corner seeds reach down to {need}"
                )))
            }
            Ok(_) | Err(Error::NotInGrowthRegion(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let width = (hi.x1 - lo.x1 + 1) as usize;
    let mut roots = Vec::with_capacity(width * (hi.x2 - lo.x2 + 1) as usize);
    labeled_dp(grid, sub, lo, hi, |_, _, row| roots.extend_from_slice(row))?;
    Ok(RootMap { region, width, roots })
}

impl RootMap {
    pub fn region(&self) -> Region {
        self.region
    }

    /// `None` outside the box or outside the growth region.
    pub fn root(&self, x: Point) -> Option<i64> {
        let Region { lo, hi, .. } = self.region;
        if !(lo.is_below(x) && x.is_below(hi)) {
            return None;
        }
        let r = self.roots[(x.x2 - lo.x2) as usize * self.width + (x.x1 - lo.x1) as usize];
        (r != NO_ROOT).then_some(r)
    }

    /// Rooted points of the box on antidiagonal `level`, in increasing `x1`.
    pub fn level(&self, level: i64) -> Vec<(Point, i64)> {
        let Region { lo, hi, .. } = self.region;
        let first = lo.x1.max(level - hi.x2);
        let last = hi.x1.min(level - lo.x2);
        (first..=last)
            .filter_map(|x1| {
                let p = Point::new(x1, level - x1);
                self.root(p).map(|r| (p, r))
            })
            .collect()
    }

    /// Every rooted point with its root, row-major.
    pub fn iter(&self) -> impl Iterator<Item = (Point, i64)> + '_ {
        let lo = self.region.lo;
        self.roots.iter().enumerate().filter(|(_, r)| **r != NO_ROOT).map(move |(i, &r)| {
            let p = Point::new(lo.x1 + (i % self.width) as i64, lo.x2 + (i / self.width) as i64);
            (p, r)
        })
    }

    /// Whether roots are nondecreasing in `x1` along every antidiagonal.
    pub fn is_non_crossing(&self) -> bool {
        let Region { lo, hi, .. } = self.region;
        (lo.level()..=hi.level()).all(|l| self.level(l).windows(2).all(|w| w[0].1 <= w[1].1))
    }

    /// Distinct roots in `(0, m]` on level `n + 1`. Fails unless that level
    /// segment inside the box reaches points rooted at or below 0 and above
    /// `m`, so that no tree of interest is cut off.
    pub fn root_counting(&self, n: i64, m: i64) -> Result<CountingRecord> {
        let cells = self.level(n + 1);
        let brackets = matches!((cells.first(), cells.last()), (Some(f), Some(l)) if f.1 <= 0 && l.1 > m);
        if !brackets {
            return Err(Error::InsufficientWindow(format!(
                "level {} of the root map does not bracket the roots (0, {m}]",
                n + 1
            )));
        }
        let mut roots: Vec<i64> = cells.iter().map(|c| c.1).filter(|&r| r > 0 && r <= m).collect();
        roots.dedup();
        Ok(CountingRecord { n, m, count: roots.len() })
    }

    /// Writes `x1,x2,root_z` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            x1: i64,
            x2: i64,
            root_z: i64,
        }
        let mut w = csv::Writer::from_writer(out);
        for (p, r) in self.iter() {
            w.serialize(Row {
                x1: p.x1,
                x2: p.x2,
                root_z: r,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Point of antidiagonal level `n` closest to direction `(1, a)`.
pub fn direction_point(a: f64, n: i64) -> Point {
    let x1 = (n as f64 / (1.0 + a)).round() as i64;
    Point::new(x1, n - x1)
}

/// Geometric checkpoint levels `n0 * 2^k`, `k < count`; a root is accepted
/// once the last `agree` checkpoints share it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointSchedule {
    pub n0: i64,
    pub count: u32,
    pub agree: u32,
}

impl CheckpointSchedule {
    pub fn levels(&self) -> Vec<i64> {
        (0..self.count).map(|k| self.n0 << k).collect()
    }
}

impl Default for CheckpointSchedule {
    fn default() -> Self {
        Self {
            n0: 128,
            count: 4,
            agree: 3,
        }
    }
}

/// Roots of the given points from a single labeled DP over the smallest box
/// containing them and every competing corner seed. Lattice weights come
/// from the field of `seed`.
pub fn roots_at(sub: &Substrate, seed: u64, points: &[Point]) -> Result<Vec<i64>> {
    let hi = points
        .iter()
        .copied()
        .reduce(Point::join)
        .ok_or_else(|| Error::InvalidParameter("no points given".into()))?;
    let mut lo = hi;
    for &p in points {
        lo = lo.meet(sub.required_origin(p)?);
    }
    let grid = WeightGrid::sample_box(lo, hi, seed)?;
    let mut roots = vec![NO_ROOT; points.len()];
    labeled_dp(&grid, sub, lo, hi, |x2, _, row| {
        for (i, p) in points.iter().enumerate() {
            if p.x2 == x2 {
                roots[i] = row[(p.x1 - lo.x1) as usize];
            }
        }
    })?;
    if let Some(i) = roots.iter().position(|&r| r == NO_ROOT) {
        return Err(Error::NotInGrowthRegion(points[i]));
    }
    Ok(roots)
}

/// Roots of the direction-`(1, a)` points at the checkpoint levels.
pub fn root_trace(sub: &Substrate, seed: u64, a: f64, schedule: &CheckpointSchedule) -> Result<Vec<i64>> {
    let points: Vec<Point> = schedule.levels().into_iter().map(|n| direction_point(a, n)).collect();
    roots_at(sub, seed, &points)
}

/// The stabilized root of direction `(1, a)`: the common root of the last
/// `schedule.agree` checkpoints.
pub fn asymptotic_root(sub: &Substrate, seed: u64, a: f64, schedule: &CheckpointSchedule) -> Result<i64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("slope must be positive, got {a}")));
    }
    let roots = root_trace(sub, seed, a, schedule)?;
    let tail = &roots[roots.len().saturating_sub(schedule.agree as usize)..];
    if tail.windows(2).all(|w| w[0] == w[1]) {
        Ok(tail[0])
    } else {
        Err(Error::NotStabilized { roots })
    }
}

/// Second coordinate of the first common vertex of the geodesics from
/// `(0, 0)` and `(m, 0)` to `(n, n)`, with weights from the field of `seed`.
///
/// The finite geodesics approximate the semi-infinite ones of direction
/// `(1, 1)`; meeting only at `(n, n)` is reported as [`Error::NotCoalesced`].
pub fn coalescence_time(seed: u64, m: i64, n: i64) -> Result<i64> {
    if m < 0 || n <= m {
        return Err(Error::InvalidParameter(format!("need 0 <= m < n, got m={m}, n={n}")));
    }
    let grid = WeightGrid::sample(Point::ORIGIN, (n + 1) as usize, (n + 1) as usize, seed)?;
    coalescence_time_in(&grid, m)
}

/// [`coalescence_time`] on an explicit square grid with origin `(0, 0)`.
pub fn coalescence_time_in(grid: &WeightGrid, m: i64) -> Result<i64> {
    coalesce(grid, m, None)
}

/// Like [`coalescence_time`], but geodesics leave the box `[0, n]^2`
/// through its upper and right sides with exit values distributed as the
/// direction-`(1, 1)` Busemann function there: i.i.d. `Exp(1/2)` increments,
/// independent of the weights inside. Inside the box the paths then have
/// the law of the semi-infinite geodesics. Exit values come from the
/// boundary stream of `seed` keyed by `n`, so boxes of different size get
/// independent boundaries.
///
/// Paths that leave the box before meeting give [`Error::NotCoalesced`].
pub fn coalescence_time_stationary(seed: u64, m: i64, n: i64) -> Result<i64> {
    if m < 0 || n <= m {
        return Err(Error::InvalidParameter(format!("need 0 <= m < n, got m={m}, n={n}")));
    }
    let grid = WeightGrid::sample(Point::ORIGIN, (n + 1) as usize, (n + 1) as usize, seed)?;
    let field = ExpField::new(seed, tag::BUSEMANN_BOUNDARY);
    let side = (n + 1) as usize;
    // exit value above column c, then right of row r; the path runs down-right
    let mut top = Vec::with_capacity(side);
    let mut u = 0.0;
    for c in 0..side {
        if c > 0 {
            u -= 2.0 * field.at(c as i64, n);
        }
        top.push(u);
    }
    u -= 2.0 * field.at(side as i64, n);
    let mut right = vec![0.0; side];
    for r in (0..side).rev() {
        u += 2.0 * field.at(-1 - r as i64, n);
        right[r] = u;
    }
    coalesce(&grid, m, Some((&top, &right)))
}

fn coalesce(grid: &WeightGrid, m: i64, exits: Option<(&[f64], &[f64])>) -> Result<i64> {
    let side = grid.width();
    if grid.origin() != Point::ORIGIN || grid.height() != side || m < 0 || m as usize >= side {
        return Err(Error::InvalidParameter("coalescence needs a square grid at the origin wider than m".into()));
    }
    if m == 0 {
        return Ok(0);
    }
    let exit_up = |c: usize| exits.map_or(f64::NEG_INFINITY, |e| e.0[c]);
    let exit_right = |r: usize| exits.map_or(f64::NEG_INFINITY, |e| e.1[r]);
    // to_end[x] = best weight from x to the end, computed backwards
    let w = grid.weights();
    let mut to_end = vec![0.0; side * side];
    for r in (0..side).rev() {
        for c in (0..side).rev() {
            let i = r * side + c;
            let right = if c + 1 < side { to_end[i + 1] } else { exit_right(r) };
            let up = if r + 1 < side { to_end[i + side] } else { exit_up(c) };
            let next = right.max(up);
            to_end[i] = w[i] + if next == f64::NEG_INFINITY { 0.0 } else { next };
        }
    }
    // None once the path has left the box
    let step = |(c, r): (usize, usize)| -> Option<(usize, usize)> {
        let right = if c + 1 < side { to_end[r * side + c + 1] } else { exit_right(r) };
        let up = if r + 1 < side { to_end[(r + 1) * side + c] } else { exit_up(c) };
        let next = if right >= up { (c + 1, r) } else { (c, r + 1) };
        (next.0 < side && next.1 < side).then_some(next)
    };
    let top = (side - 1, side - 1);
    let mut a = (0usize, 0usize);
    for _ in 0..m {
        a = step(a).ok_or(Error::NotCoalesced)?;
    }
    let mut b = (m as usize, 0usize);
    while a != b {
        a = step(a).ok_or(Error::NotCoalesced)?;
        b = step(b).ok_or(Error::NotCoalesced)?;
    }
    if exits.is_none() && a == top {
        return Err(Error::NotCoalesced);
    }
    Ok(a.1 as i64)
}

/// Writes `replica,H0,censored` rows.
pub fn write_heights_csv<W: Write>(out: W, heights: &[HeightRecord]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        replica: usize,
        #[serde(rename = "H0")]
        h0: u64,
        censored: bool,
    }
    let mut w = csv::Writer::from_writer(out);
    for (replica, h) in heights.iter().enumerate() {
        w.serialize(Row {
            replica,
            h0: h.height,
            censored: h.censored,
        })?;
    }
    w.flush()?;
    Ok(())
}
