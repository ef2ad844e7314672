//! Exact lattice last-passage percolation.
//!
//! Weights live on a finite box of `Z^2` and are i.i.d. rate-one
//! exponentials drawn from an [`ExpField`]. Passage times are computed by the
//! usual dynamic program `L(x, y) = W_y + max(L(x, y - e1), L(x, y - e2))`.
//! Point-to-substrate times use the same recursion with one seed per concave
//! corner, carrying the corner label along the maximizing predecessor.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::ExpField;
use crate::substrate::Substrate;

/// Label of a cell that no corner can reach.
pub const NO_ROOT: i64 = i64::MIN;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub x1: i64,
    pub x2: i64,
}

impl Point {
    pub const ORIGIN: Point = Point { x1: 0, x2: 0 };
    pub const E1: Point = Point { x1: 1, x2: 0 };
    pub const E2: Point = Point { x1: 0, x2: 1 };
    pub const D: Point = Point { x1: 1, x2: 1 };

    pub const fn new(x1: i64, x2: i64) -> Self {
        Self { x1, x2 }
    }

    /// Componentwise `self <= other`.
    pub fn is_below(self, other: Point) -> bool {
        self.x1 <= other.x1 && self.x2 <= other.x2
    }

    /// Componentwise strict `self < other`.
    pub fn is_strictly_below(self, other: Point) -> bool {
        self.x1 < other.x1 && self.x2 < other.x2
    }

    /// Antidiagonal level `x1 + x2`.
    pub fn level(self) -> i64 {
        self.x1 + self.x2
    }

    pub fn meet(self, other: Point) -> Point {
        Point::new(self.x1.min(other.x1), self.x2.min(other.x2))
    }

    pub fn join(self, other: Point) -> Point {
        Point::new(self.x1.max(other.x1), self.x2.max(other.x2))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// A finite box of vertex weights, row-major with `x1` fastest.
#[derive(Clone, Debug)]
pub struct WeightGrid {
    origin: Point,
    width: usize,
    height: usize,
    weights: Vec<f64>,
    seed: u64,
}

impl WeightGrid {
    /// Samples the box `[origin, origin + (width-1, height-1)]` from the
    /// lattice weight field of `seed`. Overlapping boxes with the same seed
    /// agree on their common cells.
    pub fn sample(origin: Point, width: usize, height: usize, seed: u64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "grid dimensions must be positive, got {width}x{height}"
            )));
        }
        let field = ExpField::lattice(seed);
        let mut weights = Vec::with_capacity(width * height);
        for r in 0..height as i64 {
            for c in 0..width as i64 {
                weights.push(field.at(origin.x1 + c, origin.x2 + r));
            }
        }
        Ok(Self {
            origin,
            width,
            height,
            weights,
            seed,
        })
    }

    /// Samples the smallest box containing both corners.
    pub fn sample_box(lo: Point, hi: Point, seed: u64) -> Result<Self> {
        if !lo.is_below(hi) {
            return Err(Error::NotOrdered { from: lo, to: hi });
        }
        Self::sample(
            lo,
            (hi.x1 - lo.x1 + 1) as usize,
            (hi.x2 - lo.x2 + 1) as usize,
            seed,
        )
    }

    /// Builds a grid from explicit weights (row-major, `x1` fastest).
    pub fn from_weights(origin: Point, width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || weights.len() != width * height {
            return Err(Error::InvalidParameter(format!(
                "expected {} weights for a {width}x{height} grid, got {}",
                width * height,
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight {w} is not strictly positive")));
        }
        Ok(Self {
            origin,
            width,
            height,
            weights,
            seed: 0,
        })
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Upper-right corner of the box.
    pub fn top(&self) -> Point {
        self.origin + Point::new(self.width as i64 - 1, self.height as i64 - 1)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn contains(&self, p: Point) -> bool {
        self.origin.is_below(p) && p.is_below(self.top())
    }

    pub fn get(&self, p: Point) -> Option<f64> {
        self.contains(p).then(|| self.weights[self.offset(p)])
    }

    fn offset(&self, p: Point) -> usize {
        (p.x2 - self.origin.x2) as usize * self.width + (p.x1 - self.origin.x1) as usize
    }

    fn weight(&self, p: Point) -> Result<f64> {
        self.get(p).ok_or(Error::OutOfGrid(p))
    }
}

/// An up-right lattice path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpRightPath {
    vertices: Vec<Point>,
}

impl UpRightPath {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one vertex".into()));
        }
        if let Some(w) = vertices
            .windows(2)
            .find(|w| w[1] - w[0] != Point::E1 && w[1] - w[0] != Point::E2)
        {
            return Err(Error::InvalidParameter(format!(
                "step {} -> {} is not up-right",
                w[0], w[1]
            )));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn start(&self) -> Point {
        self.vertices[0]
    }

    pub fn end(&self) -> Point {
        *self.vertices.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, p: Point) -> bool {
        // vertices are sorted by level
        let level = p.level() - self.start().level();
        level >= 0 && (level as usize) < self.vertices.len() && self.vertices[level as usize] == p
    }
}

/// Sum of the weights along a path, endpoints included.
pub fn path_weight(grid: &WeightGrid, path: &UpRightPath) -> Result<f64> {
    path.vertices().iter().map(|&p| grid.weight(p)).sum()
}

/// Point-to-point passage times `L(from, y)` for every `y` in `[from, to]`.
#[derive(Clone, Debug)]
pub struct PassageTable {
    from: Point,
    to: Point,
    width: usize,
    values: Vec<f64>,
}

impl PassageTable {
    pub fn new(grid: &WeightGrid, from: Point, to: Point) -> Result<Self> {
        if !from.is_below(to) {
            return Err(Error::NotOrdered { from, to });
        }
        for p in [from, to] {
            if !grid.contains(p) {
                return Err(Error::OutOfGrid(p));
            }
        }
        let width = (to.x1 - from.x1 + 1) as usize;
        let height = (to.x2 - from.x2 + 1) as usize;
        let mut values = vec![0.0; width * height];
        for r in 0..height {
            let row = grid.offset(Point::new(from.x1, from.x2 + r as i64));
            for c in 0..width {
                let w = grid.weights[row + c];
                let left = if c > 0 { values[r * width + c - 1] } else { f64::NEG_INFINITY };
                let down = if r > 0 { values[(r - 1) * width + c] } else { f64::NEG_INFINITY };
                let best = left.max(down);
                values[r * width + c] = if best == f64::NEG_INFINITY { w } else { w + best };
            }
        }
        Ok(Self {
            from,
            to,
            width,
            values,
        })
    }

    /// `L(from, y)`.
    pub fn value(&self, y: Point) -> Option<f64> {
        (self.from.is_below(y) && y.is_below(self.to)).then(|| self.values[self.index(y)])
    }

    fn index(&self, y: Point) -> usize {
        (y.x2 - self.from.x2) as usize * self.width + (y.x1 - self.from.x1) as usize
    }

    /// Backtracks the maximizing path from `y` to the table origin, preferring
    /// the `e1` predecessor on ties.
    pub fn geodesic_to(&self, y: Point) -> Result<UpRightPath> {
        if !(self.from.is_below(y) && y.is_below(self.to)) {
            return Err(Error::NotOrdered { from: self.from, to: y });
        }
        let mut rev = vec![y];
        let mut cur = y;
        while cur != self.from {
            let left = (cur.x1 > self.from.x1).then(|| self.values[self.index(cur - Point::E1)]);
            let down = (cur.x2 > self.from.x2).then(|| self.values[self.index(cur - Point::E2)]);
            cur = match (left, down) {
                (Some(l), Some(d)) if l >= d => cur - Point::E1,
                (Some(_), Some(_)) => cur - Point::E2,
                (Some(_), None) => cur - Point::E1,
                (None, _) => cur - Point::E2,
            };
            rev.push(cur);
        }
        rev.reverse();
        UpRightPath::new(rev)
    }
}

/// Last-passage time `L(x, y)`.
pub fn last_passage(grid: &WeightGrid, x: Point, y: Point) -> Result<f64> {
    Ok(PassageTable::new(grid, x, y)?.values.last().copied().unwrap())
}

/// The maximizing up-right path from `x` to `y`.
pub fn geodesic(grid: &WeightGrid, x: Point, y: Point) -> Result<UpRightPath> {
    PassageTable::new(grid, x, y)?.geodesic_to(y)
}

/// Result of a point-to-substrate maximization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineValue {
    pub value: f64,
    /// Rank of the maximizing corner.
    pub root: i64,
}

/// Point-to-substrate last-passage time and root of `x`.
///
/// Runs the labeled dynamic program over the smallest box holding every
/// corner seed below `x`; fails if that box or the substrate window does not
/// cover the full set of competing corners.
pub fn point_to_line(grid: &WeightGrid, sub: &Substrate, x: Point) -> Result<LineValue> {
    let lo = sub.required_origin(x)?;
    if !grid.contains(x) {
        return Err(Error::OutOfGrid(x));
    }
    if !grid.origin().is_below(lo) {
        return Err(Error::InsufficientWindow(format!(
            "corner seeds below {x} reach down to {lo}, grid starts at {}",
            grid.origin()
        )));
    }
    let mut out = None;
    labeled_dp(grid, sub, lo, x, |x2, vals, roots| {
        if x2 == x.x2 {
            out = Some(LineValue {
                value: *vals.last().unwrap(),
                root: *roots.last().unwrap(),
            });
        }
    })?;
    let out = out.unwrap();
    if out.root == NO_ROOT {
        return Err(Error::NotInGrowthRegion(x));
    }
    Ok(out)
}

/// Row-major labeled dynamic program over the box `[lo, hi]` of `grid`.
///
/// Each corner `z` of `sub` seeds the cell `z + d`; every other cell takes
/// its maximizing predecessor's value and label (the `e1` predecessor wins
/// ties). Cells unreachable from a seed keep `-inf` and [`NO_ROOT`].
/// `visit(x2, values, roots)` is called once per row in ascending order.
pub fn labeled_dp<F>(grid: &WeightGrid, sub: &Substrate, lo: Point, hi: Point, mut visit: F) -> Result<()>
where
    F: FnMut(i64, &[f64], &[i64]),
{
    for p in [lo, hi] {
        if !grid.contains(p) {
            return Err(Error::OutOfGrid(p));
        }
    }
    if !lo.is_below(hi) {
        return Err(Error::NotOrdered { from: lo, to: hi });
    }
    let width = (hi.x1 - lo.x1 + 1) as usize;
    let height = (hi.x2 - lo.x2 + 1) as usize;

    let mut seeds: Vec<Vec<(usize, i64)>> = vec![Vec::new(); height];
    for c in sub.corners() {
        let s = c.position + Point::D;
        if lo.is_below(s) && s.is_below(hi) {
            seeds[(s.x2 - lo.x2) as usize].push(((s.x1 - lo.x1) as usize, c.rank));
        }
    }

    for row in &mut seeds {
        row.sort_unstable();
    }

    let mut prev_val = vec![f64::NEG_INFINITY; width];
    let mut prev_root = vec![NO_ROOT; width];
    let mut val = vec![f64::NEG_INFINITY; width];
    let mut root = vec![NO_ROOT; width];
    for r in 0..height {
        let x2 = lo.x2 + r as i64;
        let row = grid.offset(Point::new(lo.x1, x2));
        let weights = &grid.weights[row..row + width];
        let mut row_seeds = seeds[r].iter().peekable();
        let mut left = f64::NEG_INFINITY;
        let mut left_root = NO_ROOT;
        for c in 0..width {
            let (mut best, mut best_root) = if left >= prev_val[c] {
                (left, left_root)
            } else {
                (prev_val[c], prev_root[c])
            };
            if let Some(&&(sc, rank)) = row_seeds.peek() {
                if sc == c {
                    row_seeds.next();
                    // predecessors of a seed lie on the substrate; a path may start here
                    if 0.0 > best {
                        best = 0.0;
                        best_root = rank;
                    }
                }
            }
            let (v, l) = if best == f64::NEG_INFINITY {
                (f64::NEG_INFINITY, NO_ROOT)
            } else {
                (weights[c] + best, best_root)
            };
            val[c] = v;
            root[c] = l;
            left = v;
            left_root = l;
        }
        visit(x2, &val, &root);
        std::mem::swap(&mut prev_val, &mut val);
        std::mem::swap(&mut prev_root, &mut root);
    }
    Ok(())
}

/// Per-level state of the antidiagonal sweep: the cells `(x1, level - x1)`
/// for `x1` in `lo..lo + values.len()`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFrontier {
    pub level: i64,
    pub lo: i64,
    pub values: Vec<f64>,
    pub roots: Vec<i64>,
}

impl LevelFrontier {
    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn root_at(&self, x1: i64) -> Option<i64> {
        let i = x1.checked_sub(self.lo)?;
        if i < 0 {
            return None;
        }
        self.roots.get(i as usize).copied().filter(|&r| r != NO_ROOT)
    }

    pub fn point(&self, i: usize) -> Point {
        let x1 = self.lo + i as i64;
        Point::new(x1, self.level - x1)
    }
}
