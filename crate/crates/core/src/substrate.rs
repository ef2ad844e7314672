//! Down-right substrates and weighted substrates.
//!
//! A substrate is a down-right path `(phi_z)` through the origin, realized on
//! a finite window of indices `min_index..=max_index`. Edge `k` joins
//! `phi_{k-1}` to `phi_k` and is either a right step (`+e1`) or a down step
//! (`-e2`) when read left to right. A concave corner is a vertex entered by a
//! down step and left by a right step; corners are ranked so that the first
//! corner at a nonnegative index has rank 0.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::Point;
use crate::rng::{self, ExpField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Right,
    Down,
}

impl Step {
    fn delta(self) -> Point {
        match self {
            Step::Right => Point::new(1, 0),
            Step::Down => Point::new(0, -1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Corner {
    /// Position in the ordered corner list, `z_rank`.
    pub rank: i64,
    /// Substrate index `z` with `phi_z = position`.
    pub index: i64,
    pub position: Point,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Substrate {
    min_index: i64,
    edges: Vec<Step>,
    positions: Vec<Point>,
    corners: Vec<Corner>,
    lambda_minus: Option<f64>,
    lambda_plus: Option<f64>,
}

impl Substrate {
    /// Builds a substrate from its edges on each side of the origin, both
    /// listed moving away from `phi_0`: `left[i]` is edge `-i` and `right[i]`
    /// is edge `i + 1`, each in left-to-right orientation.
    pub fn from_sides(left: &[Step], right: &[Step]) -> Self {
        let min_index = -(left.len() as i64);
        let mut edges: Vec<Step> = left.iter().rev().copied().collect();
        edges.extend_from_slice(right);

        let mut positions = Vec::with_capacity(edges.len() + 1);
        let mut p = Point::ORIGIN;
        for step in left {
            p = p - step.delta();
            positions.push(p);
        }
        positions.reverse();
        positions.push(Point::ORIGIN);
        p = Point::ORIGIN;
        for step in right {
            p = p + step.delta();
            positions.push(p);
        }

        let mut sub = Self {
            min_index,
            edges,
            positions,
            corners: Vec::new(),
            lambda_minus: None,
            lambda_plus: None,
        };
        sub.corners = sub.detect_corners();
        sub
    }

    fn detect_corners(&self) -> Vec<Corner> {
        let mut found: Vec<(i64, Point)> = Vec::new();
        for z in self.min_index + 1..self.max_index() {
            if self.edge(z) == Some(Step::Down) && self.edge(z + 1) == Some(Step::Right) {
                found.push((z, self.position(z).unwrap()));
            }
        }
        let zero = found.iter().position(|&(z, _)| z >= 0).unwrap_or(found.len()) as i64;
        found
            .into_iter()
            .enumerate()
            .map(|(i, (index, position))| Corner {
                rank: i as i64 - zero,
                index,
                position,
            })
            .collect()
    }

    fn with_slopes(mut self, lambda_minus: f64, lambda_plus: f64) -> Self {
        self.lambda_minus = Some(lambda_minus);
        self.lambda_plus = Some(lambda_plus);
        self
    }

    pub fn min_index(&self) -> i64 {
        self.min_index
    }

    pub fn max_index(&self) -> i64 {
        self.min_index + self.edges.len() as i64
    }

    /// `phi_z`, if `z` is inside the window.
    pub fn position(&self, z: i64) -> Option<Point> {
        let i = z - self.min_index;
        (i >= 0).then(|| self.positions.get(i as usize).copied()).flatten()
    }

    /// Edge `k` (from `phi_{k-1}` to `phi_k`).
    pub fn edge(&self, k: i64) -> Option<Step> {
        let i = k - self.min_index - 1;
        (i >= 0).then(|| self.edges.get(i as usize).copied()).flatten()
    }

    pub fn corners(&self) -> &[Corner] {
        &self.corners
    }

    pub fn corner(&self, rank: i64) -> Option<&Corner> {
        let first = self.corners.first()?.rank;
        let i = rank - first;
        (i >= 0).then(|| self.corners.get(i as usize)).flatten()
    }

    pub fn corner_at_index(&self, z: i64) -> Option<&Corner> {
        self.corners
            .binary_search_by_key(&z, |c| c.index)
            .ok()
            .map(|i| &self.corners[i])
    }

    pub fn lambda_minus(&self) -> Option<f64> {
        self.lambda_minus
    }

    pub fn lambda_plus(&self) -> Option<f64> {
        self.lambda_plus
    }

    /// The slopes `a` with an asymptotic root, `(lambda_plus^2, lambda_minus^2)`.
    pub fn rarefaction_interval(&self) -> Option<(f64, f64)> {
        Some((self.lambda_plus?.powi(2), self.lambda_minus?.powi(2)))
    }

    /// Whether every corner below `x` lies inside the window: the left end of
    /// the window is at least as high as `x` and the right end at least as far
    /// right.
    pub fn covers(&self, x: Point) -> bool {
        let left = self.positions[0];
        let right = *self.positions.last().unwrap();
        left.x2 >= x.x2 && right.x1 >= x.x1
    }

    /// Corners strictly below `x`, in rank order.
    pub fn corners_below(&self, x: Point) -> impl Iterator<Item = &Corner> + '_ {
        self.corners.iter().filter(move |c| c.position.is_strictly_below(x))
    }

    /// Whether `x` lies strictly above some substrate vertex in the window.
    pub fn in_growth_region(&self, x: Point) -> bool {
        self.positions.iter().any(|p| p.is_strictly_below(x))
    }

    /// Lower-left corner of the smallest box containing the seeds `z + d` of
    /// every corner below `x`.
    pub fn required_origin(&self, x: Point) -> Result<Point> {
        if !self.covers(x) {
            return Err(Error::InsufficientWindow(format!(
                "substrate window [{}, {}] does not hold every corner below {x}",
                self.min_index,
                self.max_index()
            )));
        }
        self.corners_below(x)
            .map(|c| c.position + Point::D)
            .reduce(Point::meet)
            .ok_or(Error::NotInGrowthRegion(x))
    }

    /// One character per edge in increasing `z`: edges `min+1..=0` as `L`/`U`
    /// (the step taken when walking left from `phi_k`), then edges `1..=max`
    /// as `R`/`D`. The origin sits between the two alphabets.
    pub fn to_step_string(&self) -> String {
        (self.min_index + 1..=self.max_index())
            .map(|k| match (k <= 0, self.edge(k).unwrap()) {
                (true, Step::Right) => 'L',
                (true, Step::Down) => 'U',
                (false, Step::Right) => 'R',
                (false, Step::Down) => 'D',
            })
            .collect()
    }

    pub fn from_step_string(s: &str) -> Result<Self> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for (i, ch) in s.chars().enumerate() {
            let step = match ch {
                'L' | 'U' if !right.is_empty() => {
                    return Err(invalid(format!("'{ch}' at offset {i} follows a right-side step")))
                }
                'L' => &mut left,
                'U' => &mut left,
                'R' | 'D' => &mut right,
                _ => return Err(invalid(format!("unexpected step character '{ch}' at offset {i}"))),
            };
            step.push(match ch {
                'L' | 'R' => Step::Right,
                _ => Step::Down,
            });
        }
        left.reverse();
        Ok(Self::from_sides(&left, &right))
    }
}

/// Bernoulli substrate: right of the origin each step is down with
/// probability `p_plus`; left of it each step is up with probability
/// `p_minus`. The steps next to the origin are forced so that `0` is a corner.
pub fn gen_bernoulli(p_minus: f64, p_plus: f64, window: usize, seed: u64) -> Result<Substrate> {
    if !(0.0..1.0).contains(&p_plus) || !(p_minus > 0.0 && p_minus <= 1.0) || p_plus >= p_minus {
        return Err(invalid(format!(
            "need 0 <= p_plus < p_minus <= 1, got p_minus={p_minus}, p_plus={p_plus}"
        )));
    }
    if window < 2 {
        return Err(invalid("bernoulli window must be at least 2"));
    }
    let mut right_rng = rng::replica_rng(seed, 0);
    let mut left_rng = rng::replica_rng(seed, 1);
    let right: Vec<Step> = (0..window)
        .map(|i| match i {
            0 => Step::Right,
            _ => bernoulli_step(&mut right_rng, p_plus),
        })
        .collect();
    let left: Vec<Step> = (0..window)
        .map(|i| match i {
            0 => Step::Down,
            _ => bernoulli_step(&mut left_rng, p_minus),
        })
        .collect();
    Ok(Substrate::from_sides(&left, &right).with_slopes(slope(p_minus), slope(p_plus)))
}

fn bernoulli_step<R: RngCore>(rng: &mut R, p_down: f64) -> Step {
    if rng::uniform(rng) < p_down {
        Step::Down
    } else {
        Step::Right
    }
}

fn slope(p: f64) -> f64 {
    if p >= 1.0 {
        f64::INFINITY
    } else {
        p / (1.0 - p)
    }
}

/// Bernoulli substrate whose window is grown (keeping the same steps) until
/// it covers `target`.
pub fn gen_bernoulli_covering(p_minus: f64, p_plus: f64, target: Point, seed: u64) -> Result<Substrate> {
    let need_right = target.x1.max(1) as f64 / (1.0 - p_plus);
    let need_left = target.x2.max(1) as f64 / p_minus;
    let mut window = (1.25 * need_right.max(need_left)) as usize + 16;
    loop {
        let sub = gen_bernoulli(p_minus, p_plus, window, seed)?;
        if sub.covers(target) {
            return Ok(sub);
        }
        window *= 2;
    }
}

/// Periodic substrate: `k_plus` right steps then one down step, repeated,
/// to the right of the origin; `k_minus` up steps then one left step to the
/// left of it.
pub fn gen_periodic(k_plus: usize, k_minus: usize, window: usize) -> Result<Substrate> {
    if k_plus == 0 || k_minus == 0 || k_plus.max(k_minus) < 2 {
        return Err(invalid(format!(
            "need k_plus, k_minus >= 1 and max(k_plus, k_minus) >= 2, got ({k_plus}, {k_minus})"
        )));
    }
    let right: Vec<Step> = (0..window)
        .map(|i| if i % (k_plus + 1) < k_plus { Step::Right } else { Step::Down })
        .collect();
    let left: Vec<Step> = (0..window)
        .map(|i| if i % (k_minus + 1) < k_minus { Step::Down } else { Step::Right })
        .collect();
    Ok(Substrate::from_sides(&left, &right).with_slopes(k_minus as f64, 1.0 / k_plus as f64))
}

/// Substrate with exactly three corners: `(-1, 1)`, the origin and `(m, -1)`.
///
/// Left of the origin: one up step, one left step, then vertical. Right of
/// it: `m` right steps, one down step, then horizontal.
pub fn gen_finite_rooted(m: usize, window: usize) -> Result<Substrate> {
    if m < 1 {
        return Err(invalid("finite rooted substrate needs m >= 1"));
    }
    let window = window.max(m + 2);
    let left: Vec<Step> = (0..window)
        .map(|i| if i == 1 { Step::Right } else { Step::Down })
        .collect();
    let right: Vec<Step> = (0..window)
        .map(|i| if i == m { Step::Down } else { Step::Right })
        .collect();
    Ok(Substrate::from_sides(&left, &right).with_slopes(f64::INFINITY, 0.0))
}

/// Flat substrate whose corners are the diagonal points `(k, -k)`, one per
/// rank `k` in `-window..=window`. Corner `k` sits at substrate index `2k`.
pub fn gen_flat_diagonal(window: usize) -> Substrate {
    let len = 2 * window + 1;
    let right: Vec<Step> = (0..len)
        .map(|i| if i % 2 == 0 { Step::Right } else { Step::Down })
        .collect();
    let left: Vec<Step> = (0..len)
        .map(|i| if i % 2 == 0 { Step::Down } else { Step::Right })
        .collect();
    Substrate::from_sides(&left, &right).with_slopes(1.0, 1.0)
}

/// Substrate weights `nu(k)` on the horizontal axis over `lo..=hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSubstrate {
    lo: i64,
    nu: Vec<f64>,
    mu_minus: f64,
    mu_plus: f64,
}

impl WeightedSubstrate {
    /// Builds `nu` from explicit increments `nu_k`, `k` in `lo..=hi`, `k != 0`.
    pub fn from_increments(lo: i64, hi: i64, increments: impl Fn(i64) -> f64, mu_minus: f64, mu_plus: f64) -> Result<Self> {
        if lo > 0 || hi < 0 {
            return Err(invalid(format!("window [{lo}, {hi}] must contain 0")));
        }
        let mut nu = vec![0.0; (hi - lo + 1) as usize];
        let at = |k: i64| (k - lo) as usize;
        for k in 1..=hi {
            nu[at(k)] = nu[at(k - 1)] + increments(k);
        }
        for k in (lo..0).rev() {
            nu[at(k)] = nu[at(k + 1)] - increments(k);
        }
        Ok(Self {
            lo,
            nu,
            mu_minus,
            mu_plus,
        })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.nu.len() as i64 - 1
    }

    pub fn nu(&self, k: i64) -> Option<f64> {
        let i = k - self.lo;
        (i >= 0).then(|| self.nu.get(i as usize).copied()).flatten()
    }

    pub fn values(&self) -> &[f64] {
        &self.nu
    }

    pub fn mu_minus(&self) -> f64 {
        self.mu_minus
    }

    pub fn mu_plus(&self) -> f64 {
        self.mu_plus
    }

    /// `((mu_plus - 1)^2, (mu_minus - 1)^2)`.
    pub fn rarefaction_interval(&self) -> (f64, f64) {
        ((self.mu_plus - 1.0).powi(2), (self.mu_minus - 1.0).powi(2))
    }
}

/// Exponential weighted substrate on `[-window, window]`: increments are
/// `Exp(1 - p_plus)` right of the origin and `Exp(1 - p_minus)` left of it.
pub fn gen_weighted_exponential(p_minus: f64, p_plus: f64, window: usize, seed: u64) -> Result<WeightedSubstrate> {
    if !(0.0 < p_plus && p_plus < p_minus && p_minus < 1.0) {
        return Err(invalid(format!(
            "need 0 < p_plus < p_minus < 1, got p_minus={p_minus}, p_plus={p_plus}"
        )));
    }
    weighted_window(p_minus, p_plus, -(window as i64), window as i64, seed)
}

/// Exponential weighted substrate with equal rates `1 - p` on both sides
/// (the stationary profile for `p = 1/2`), over `lo..=hi`.
pub fn gen_weighted_flat(p: f64, lo: i64, hi: i64, seed: u64) -> Result<WeightedSubstrate> {
    if !(0.0 < p && p < 1.0) {
        return Err(invalid(format!("need 0 < p < 1, got {p}")));
    }
    weighted_window(p, p, lo, hi, seed)
}

fn weighted_window(p_minus: f64, p_plus: f64, lo: i64, hi: i64, seed: u64) -> Result<WeightedSubstrate> {
    let field = ExpField::new(seed, rng::tag::SUBSTRATE_NU);
    WeightedSubstrate::from_increments(
        lo,
        hi,
        |k| field.at(k, 0) / if k > 0 { 1.0 - p_plus } else { 1.0 - p_minus },
        1.0 / (1.0 - p_minus),
        1.0 / (1.0 - p_plus),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_bernoulli_has_a_single_corner() {
        let s = gen_bernoulli(1.0, 0.0, 50, 3).unwrap();
        assert_eq!(s.corners().len(), 1);
        assert_eq!(s.corners()[0].position, Point::ORIGIN);
        assert_eq!(s.corners()[0].rank, 0);
        assert!(s.to_step_string().starts_with("UUUU"));
        assert!(s.to_step_string().ends_with("RRRR"));
    }

    #[test]
    fn bernoulli_slopes() {
        let s = gen_bernoulli(2.0 / 3.0, 1.0 / 3.0, 10, 1).unwrap();
        assert!((s.lambda_minus().unwrap() - 2.0).abs() < 1e-12);
        assert!((s.lambda_plus().unwrap() - 0.5).abs() < 1e-12);
        let (lo, hi) = s.rarefaction_interval().unwrap();
        assert!(lo < hi);
    }

    #[test]
    fn bernoulli_rejects_bad_order() {
        assert!(gen_bernoulli(0.3, 0.3, 10, 1).is_err());
        assert!(gen_bernoulli(0.2, 0.5, 10, 1).is_err());
    }

    #[test]
    fn bernoulli_origin_is_rank_zero_corner() {
        for seed in 0..20 {
            let s = gen_bernoulli(0.6, 0.4, 40, seed).unwrap();
            let c = s.corner(0).unwrap();
            assert_eq!((c.index, c.position), (0, Point::ORIGIN));
        }
    }

    #[test]
    fn bernoulli_down_step_frequency() {
        let p = 1.0 / 3.0;
        let n = 10_000;
        let s = gen_bernoulli(2.0 / 3.0, p, n + 1, 9).unwrap();
        let downs = (2..=n as i64 + 1).filter(|&k| s.edge(k) == Some(Step::Down)).count() as f64;
        let sigma = (p * (1.0 - p) * n as f64).sqrt();
        assert!((downs - p * n as f64).abs() < 3.0 * sigma, "downs {downs}");
    }

    #[test]
    fn bernoulli_empirical_slopes() {
        let n = 10_000;
        let s = gen_bernoulli(2.0 / 3.0, 1.0 / 3.0, n, 21).unwrap();
        let r = s.position(n as i64).unwrap();
        let l = s.position(-(n as i64)).unwrap();
        let plus = -(r.x2 as f64) / r.x1 as f64;
        let minus = -(l.x2 as f64) / l.x1 as f64;
        assert!((plus - 0.5).abs() < 0.05 * 0.5, "plus {plus}");
        assert!((minus - 2.0).abs() < 0.05 * 2.0, "minus {minus}");
    }

    #[test]
    fn covering_window_grows_until_covered() {
        let s = gen_bernoulli_covering(2.0 / 3.0, 1.0 / 3.0, Point::new(300, 200), 4).unwrap();
        assert!(s.covers(Point::new(300, 200)));
        let small = gen_bernoulli(2.0 / 3.0, 1.0 / 3.0, 20, 4).unwrap();
        assert_eq!(small.edge(15), s.edge(15));
        assert_eq!(small.edge(-15), s.edge(-15));
    }

    #[test]
    fn periodic_slopes_and_spacing() {
        let s = gen_periodic(2, 2, 30).unwrap();
        assert_eq!(s.lambda_plus(), Some(0.5));
        assert_eq!(s.lambda_minus(), Some(2.0));
        let right: Vec<i64> = s.corners().iter().filter(|c| c.index >= 0).map(|c| c.index).collect();
        assert_eq!(right[0], 0);
        for w in right.windows(2) {
            assert_eq!(w[1] - w[0], 3);
        }
        let left: Vec<i64> = s.corners().iter().filter(|c| c.index <= 0).map(|c| c.index).collect();
        for w in left.windows(2) {
            assert_eq!(w[1] - w[0], 3);
        }
    }

    #[test]
    fn periodic_constraint() {
        assert!(gen_periodic(1, 2, 10).is_ok());
        assert!(gen_periodic(2, 1, 10).is_ok());
        assert!(gen_periodic(1, 1, 10).is_err());
        assert!(gen_periodic(0, 3, 10).is_err());
    }

    #[test]
    fn finite_rooted_has_three_corners() {
        for m in 1..8 {
            let s = gen_finite_rooted(m, 20).unwrap();
            let pos: Vec<Point> = s.corners().iter().map(|c| c.position).collect();
            assert_eq!(pos, vec![Point::new(-1, 1), Point::ORIGIN, Point::new(m as i64, -1)]);
            assert_eq!(s.corners().iter().map(|c| c.rank).collect::<Vec<_>>(), vec![-1, 0, 1]);
        }
        assert!(gen_finite_rooted(0, 10).is_err());
    }

    #[test]
    fn finite_rooted_follows_the_stated_left_side() {
        let s = gen_finite_rooted(3, 10).unwrap();
        assert_eq!(s.position(-1), Some(Point::new(0, 1)));
        for z in -9..-1 {
            assert_eq!(s.position(z), Some(Point::new(-1, (z + 1).abs())));
        }
        for z in 1..=3 {
            assert_eq!(s.position(z), Some(Point::new(z, 0)));
        }
    }

    #[test]
    fn flat_diagonal_corners() {
        let s = gen_flat_diagonal(6);
        assert_eq!(s.corners().len(), 13);
        assert_eq!(s.corner(0).unwrap().position, Point::ORIGIN);
        assert_eq!(s.corner(5).unwrap().position, Point::new(5, -5));
        assert_eq!(s.corner(-6).unwrap().position, Point::new(-6, 6));
        for c in s.corners() {
            assert_eq!(c.position, Point::new(c.rank, -c.rank));
        }
    }

    #[test]
    fn corners_are_down_then_right() {
        let s = gen_bernoulli(0.7, 0.2, 200, 5).unwrap();
        let mut last = i64::MIN;
        for c in s.corners() {
            assert!(c.index > last);
            last = c.index;
            assert_eq!(s.position(c.index).unwrap() - s.position(c.index - 1).unwrap(), Point::new(0, -1));
            assert_eq!(s.position(c.index + 1).unwrap() - s.position(c.index).unwrap(), Point::new(1, 0));
        }
    }

    #[test]
    fn step_string_anchor() {
        let s = Substrate::from_step_string("UULRDRR").unwrap();
        assert_eq!(s.min_index(), -3);
        assert_eq!(s.max_index(), 4);
        assert_eq!(s.position(0), Some(Point::ORIGIN));
        assert_eq!(s.position(-1), Some(Point::new(-1, 0)));
        assert_eq!(s.position(-3), Some(Point::new(-1, 2)));
        assert_eq!(s.position(2), Some(Point::new(1, -1)));
        let idx: Vec<(i64, i64)> = s.corners().iter().map(|c| (c.index, c.rank)).collect();
        assert_eq!(idx, vec![(-1, -1), (2, 0)]);
        assert_eq!(s.to_step_string(), "UULRDRR");
        assert!(Substrate::from_step_string("URU").is_err());
        assert!(Substrate::from_step_string("UXR").is_err());
    }

    #[test]
    fn weighted_drifts() {
        let w = gen_weighted_exponential(0.5, 0.25, 10, 1).unwrap();
        assert!((w.mu_minus() - 2.0).abs() < 1e-12);
        assert!((w.mu_plus() - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(w.nu(0), Some(0.0));
        assert!(gen_weighted_exponential(0.25, 0.5, 10, 1).is_err());
    }

    #[test]
    fn weighted_law_of_large_numbers() {
        let n = 10_000;
        let w = gen_weighted_exponential(0.5, 0.25, n, 77).unwrap();
        let mu = 4.0 / 3.0;
        // Exp(3/4) has standard deviation 4/3
        let sigma = mu * (n as f64).sqrt();
        let sum = w.nu(n as i64).unwrap();
        assert!((sum - mu * n as f64).abs() < 3.0 * sigma, "nu(n) = {sum}");
        assert!(w.values().windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn weighted_windows_are_consistent() {
        let a = gen_weighted_flat(0.5, -5, 5, 3).unwrap();
        let b = gen_weighted_flat(0.5, -50, 80, 3).unwrap();
        for k in -5..=5 {
            assert_eq!(a.nu(k), b.nu(k));
        }
    }
}
