//! The random-walk side of the root law.
//!
//! Along the substrate edges, `S(0) = 0` and `S(k) - S(k - 1)` is
//! `+Exp(rho)` for a down edge and `-Exp(1 - rho)` for a right edge, with
//! `rho = sqrt(a) / (1 + sqrt(a))`. Both are built from one standard
//! exponential `E_k` per edge (`E_k / rho` or `-E_k / (1 - rho)`), so walks
//! for different slopes are coupled edge by edge. Concave corners are the
//! local maxima, and the corner at which the maximum is attained has the
//! law of the root of direction `(1, a)`.

use std::io::Write;

use rand::RngCore;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{self, tag, ExpField};
use crate::substrate::{Step, Substrate};

/// `rho_a = sqrt(a) / (1 + sqrt(a))`.
pub fn rho(a: f64) -> f64 {
    let r = a.sqrt();
    r / (1.0 + r)
}

/// Law of one corner-to-corner increment: an exponential up-jump minus an
/// independent nonnegative down-jump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum StepLaw {
    /// `Exp(delta) - Exp(beta)`.
    ExpDiff { delta: f64, beta: f64 },
    /// `Exp(delta) - Gamma(shape, rate)`.
    ExpMinusGamma { delta: f64, shape: u32, rate: f64 },
}

impl StepLaw {
    pub fn delta(&self) -> f64 {
        match *self {
            StepLaw::ExpDiff { delta, .. } | StepLaw::ExpMinusGamma { delta, .. } => delta,
        }
    }

    fn down(&self) -> (u32, f64) {
        match *self {
            StepLaw::ExpDiff { beta, .. } => (1, beta),
            StepLaw::ExpMinusGamma { shape, rate, .. } => (shape, rate),
        }
    }

    pub fn mean(&self) -> f64 {
        let (k, r) = self.down();
        1.0 / self.delta() - k as f64 / r
    }

    /// `E exp(t X)`, infinite for `t >= delta`.
    pub fn mgf(&self, t: f64) -> f64 {
        let d = self.delta();
        if t >= d {
            return f64::INFINITY;
        }
        let (k, r) = self.down();
        d / (d - t) * (r / (r + t)).powi(k as i32)
    }

    /// `P(X > 0)`.
    pub fn prob_positive(&self) -> f64 {
        let (k, r) = self.down();
        (r / (r + self.delta())).powi(k as i32)
    }

    /// The positive root of `E exp(gamma X) = 1`, when the drift is negative.
    pub fn lundberg(&self) -> Option<f64> {
        if self.mean() >= 0.0 {
            return None;
        }
        match *self {
            StepLaw::ExpDiff { delta, beta } => Some(delta - beta),
            StepLaw::ExpMinusGamma { delta, .. } => {
                // ln mgf is convex, zero at 0 with negative slope, and blows up at delta
                let f = |t: f64| self.mgf(t).ln();
                let (mut lo, mut hi) = (self.min_mgf_point(), delta);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) > 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            }
        }
    }

    /// Minimizer of the moment generating function on `[0, delta)`.
    pub fn min_mgf_point(&self) -> f64 {
        // derivative of ln mgf: 1/(d - t) - k/(r + t), increasing in t
        let d = self.delta();
        let (k, r) = self.down();
        let g = |t: f64| 1.0 / (d - t) - k as f64 / (r + t);
        if g(0.0) >= 0.0 {
            return 0.0;
        }
        let (mut lo, mut hi) = (0.0, d);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> f64 {
        let up = rng::exp_sample(rng, self.delta());
        let (k, r) = self.down();
        let down: f64 = (0..k).map(|_| rng::exp_sample(rng, r)).sum();
        up - down
    }
}

/// A realization of the two-sided walk over the whole substrate window.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSidedWalk {
    a: f64,
    rho: f64,
    lo: i64,
    values: Vec<f64>,
}

/// Builds the walk for slope `a` over the substrate window. Edge `k` uses
/// the standard exponential at `(k, 0)` of the walk field of `seed`.
pub fn build_walk(sub: &Substrate, a: f64, seed: u64) -> Result<TwoSidedWalk> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("slope must be positive, got {a}")));
    }
    let field = ExpField::new(seed, tag::WALK_EDGES);
    let rho = rho(a);
    let inc = |k: i64| {
        let e = field.at(k, 0);
        match sub.edge(k).unwrap() {
            Step::Down => e / rho,
            Step::Right => -e / (1.0 - rho),
        }
    };
    let lo = sub.min_index();
    let mut values = vec![0.0; (sub.max_index() - lo + 1) as usize];
    let zero = (-lo) as usize;
    for k in 1..=sub.max_index() {
        let i = zero + k as usize;
        values[i] = values[i - 1] + inc(k);
    }
    for k in (lo + 1..=0).rev() {
        let i = zero - (-k) as usize;
        values[i - 1] = values[i] - inc(k);
    }
    Ok(TwoSidedWalk { a, rho, lo, values })
}

impl TwoSidedWalk {
    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.values.len() as i64 - 1
    }

    pub fn value(&self, z: i64) -> Option<f64> {
        let i = z - self.lo;
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Writes `z,S` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["z", "S"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([(self.lo + i as i64).to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The walk read at the corners: `plus[n] = S(z_n)` and `minus[n] = S(z_{-n})`.
#[derive(Clone, Debug, PartialEq)]
pub struct CornerWalk {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

pub fn corner_subwalk(walk: &TwoSidedWalk, sub: &Substrate) -> CornerWalk {
    let read = |rank: i64| sub.corner(rank).and_then(|c| walk.value(c.index));
    let plus = (0..).map_while(read).collect();
    let minus = (0..).map(|n: i64| -n).map_while(read).collect();
    CornerWalk { plus, minus }
}

/// How the window truncation of the maximum is certified.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Certify {
    /// Lundberg exponents of the corner increments on each side. A side is
    /// closed once it sits `40 / gamma` below its running maximum; the chance
    /// of a later excursion above it is at most `exp(-40)`.
    Lundberg { plus: f64, minus: f64 },
    /// Fixed gaps for step laws without a known exponent. No bound is
    /// reported.
    Margin { plus: f64, minus: f64 },
    /// The window holds every corner of the substrate.
    Exhaustive,
}

impl Certify {
    pub fn lundberg(plus: &StepLaw, minus: &StepLaw) -> Result<Self> {
        match (plus.lundberg(), minus.lundberg()) {
            (Some(p), Some(m)) => Ok(Certify::Lundberg { plus: p, minus: m }),
            _ => Err(invalid("both sides need a negative drift")),
        }
    }

    /// Gaps of `60 / |mean drift|` per side.
    pub fn margin_from_drift(plus_drift: f64, minus_drift: f64) -> Self {
        Certify::Margin {
            plus: 60.0 / plus_drift.abs(),
            minus: 60.0 / minus_drift.abs(),
        }
    }

    fn gaps(&self) -> (f64, f64) {
        match *self {
            Certify::Lundberg { plus, minus } => (40.0 / plus, 40.0 / minus),
            Certify::Margin { plus, minus } => (plus, minus),
            Certify::Exhaustive => (f64::INFINITY, f64::INFINITY),
        }
    }

    fn bound(&self) -> Option<f64> {
        match self {
            Certify::Lundberg { .. } => Some(2.0 * (-40.0f64).exp()),
            Certify::Margin { .. } => None,
            Certify::Exhaustive => Some(0.0),
        }
    }
}

/// Maximum of the walk over the corners and the rank of its maximizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxArgRecord {
    pub m: f64,
    /// Corner rank of the maximizer.
    pub z: i64,
    /// Corner ranks scanned on each side before both sides were closed.
    pub horizon_minus: i64,
    pub horizon_plus: i64,
    /// Upper bound on the probability that the true maximum lies outside
    /// the scanned ranks.
    pub certified_bound: Option<f64>,
}

/// Scans one side until it is certified; returns (argmax position, max,
/// positions scanned). An infinite gap scans the whole side.
fn scan_side(values: &[f64], gap: f64) -> Result<(usize, f64, usize)> {
    let (mut arg, mut best) = (0, values[0]);
    if gap == f64::INFINITY {
        for (n, &v) in values.iter().enumerate() {
            if v > best {
                (arg, best) = (n, v);
            }
        }
        return Ok((arg, best, values.len() - 1));
    }
    for (n, &v) in values.iter().enumerate() {
        if v > best {
            (arg, best) = (n, v);
        }
        if v <= best - gap {
            return Ok((arg, best, n));
        }
    }
    let last = values.last().copied().unwrap_or(best);
    Err(Error::CertificationFailed {
        gap: best - last,
        required: gap,
    })
}

/// Maximum and argmax of the walk over its corners.
///
/// Ties go to the smaller rank in absolute value, then to the positive side.
pub fn max_and_argmax(walk: &TwoSidedWalk, sub: &Substrate, certify: Certify) -> Result<MaxArgRecord> {
    let cw = corner_subwalk(walk, sub);
    if cw.plus.is_empty() || cw.minus.is_empty() {
        return Err(invalid("the walk window holds no corner at rank 0"));
    }
    let (gp, gm) = certify.gaps();
    let (zp, mp, hp) = scan_side(&cw.plus, gp)?;
    let (zm, mm, hm) = scan_side(&cw.minus, gm)?;
    let (z, m) = combine_sides((zp as u64, mp), (zm as u64, mm));
    Ok(MaxArgRecord {
        m,
        z,
        horizon_minus: -(hm as i64),
        horizon_plus: hp as i64,
        certified_bound: certify.bound(),
    })
}

/// Signed argmax and maximum from the one-sided `(Z+, M+)` and `(Z-, M-)`,
/// which share the starting value.
pub fn combine_sides(plus: (u64, f64), minus: (u64, f64)) -> (i64, f64) {
    let (zp, mp) = plus;
    let (zm, mm) = minus;
    if mp > mm || (mp == mm && zp <= zm) {
        (zp as i64, mp)
    } else {
        (-(zm as i64), mm)
    }
}

/// Increments of a one-sided walk with i.i.d. steps, drawn until the walk
/// sits `gap` below its running maximum.
pub fn one_sided_path<R: RngCore + ?Sized>(law: &StepLaw, rng: &mut R, gap: f64, max_steps: usize) -> Result<Vec<f64>> {
    let mut incs = Vec::new();
    let (mut s, mut best) = (0.0f64, 0.0f64);
    while s > best - gap {
        if incs.len() == max_steps {
            return Err(Error::CertificationFailed {
                gap: best - s,
                required: gap,
            });
        }
        let x = law.sample(rng);
        incs.push(x);
        s += x;
        best = best.max(s);
    }
    Ok(incs)
}

/// `(Z, M)` of a one-sided walk, certified with the Lundberg gap `40 / gamma`.
pub fn one_sided_max<R: RngCore + ?Sized>(law: &StepLaw, rng: &mut R) -> Result<(u64, f64)> {
    let gamma = law
        .lundberg()
        .ok_or_else(|| invalid("step law has nonnegative drift"))?;
    let incs = one_sided_path(law, rng, 40.0 / gamma, 10_000_000)?;
    let (z, m) = direct_max(&incs);
    Ok((z as u64, m))
}

/// Argmax (first one) and maximum of `S_n = X_1 + ... + X_n`, `0 <= n <= len`.
pub fn direct_max(incs: &[f64]) -> (usize, f64) {
    let (mut arg, mut best, mut s) = (0, 0.0, 0.0);
    for (i, x) in incs.iter().enumerate() {
        s += x;
        if s > best {
            (arg, best) = (i + 1, s);
        }
    }
    (arg, best)
}

/// The Lindley sequence `w[n] = W_{-n}` for `n = 0..=h`, from
/// `W_{-h} = 0` and `W_{-n} = max(0, W_{-n-1} + X_{n+1})`.
pub fn lindley_process(incs: &[f64]) -> Result<Vec<f64>> {
    if incs.is_empty() {
        return Err(invalid("the Lindley horizon must be at least 1"));
    }
    let h = incs.len();
    let mut w = vec![0.0; h + 1];
    for n in (0..h).rev() {
        w[n] = (w[n + 1] + incs[n]).max(0.0);
    }
    Ok(w)
}

/// `(tau, W_0)` with `tau` the first `n` at which `W_{-n} = 0`.
pub fn lindley_tau(w: &[f64]) -> (usize, f64) {
    (w.iter().position(|&x| x == 0.0).unwrap_or(w.len()), w[0])
}

/// Draws of `S_n` conditioned on `N > n` (no nonpositive partial sum up to
/// `n`), by restarting whole paths.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionedSample {
    pub n: usize,
    pub attempts: usize,
    pub values: Vec<f64>,
    /// Estimate of `P(N > n)`.
    pub acceptance_rate: f64,
    pub p_m0: f64,
}

impl ConditionedSample {
    /// Estimate of `P(Z = n) = P(N > n) P(M = 0)`.
    pub fn prob_z(&self) -> f64 {
        self.acceptance_rate * self.p_m0
    }

    /// Density estimate of `f_{Z,M}(n, x)` on the bins of width `width`
    /// starting at 0.
    pub fn density(&self, width: f64, bins: usize) -> Vec<f64> {
        let mut h = vec![0.0; bins];
        for &x in &self.values {
            let b = (x / width) as usize;
            if b < bins {
                h[b] += 1.0;
            }
        }
        let scale = self.prob_z() / (self.values.len().max(1) as f64 * width);
        h.iter().map(|c| c * scale).collect()
    }
}

/// Acceptance-rejection sampler for the joint law of `(Z, M)` at `Z = n`.
/// Fails if the acceptance rate falls below `floor`.
pub fn conditioned_sampler(law: &StepLaw, n: usize, attempts: usize, p_m0: f64, floor: f64, seed: u64) -> Result<ConditionedSample> {
    if n < 1 || attempts < 1 {
        return Err(invalid("need n >= 1 and at least one attempt"));
    }
    let mut rng = rng::replica_rng(seed, n as u64);
    let mut values = Vec::new();
    'paths: for _ in 0..attempts {
        let mut s = 0.0;
        for _ in 0..n {
            s += law.sample(&mut rng);
            if s <= 0.0 {
                continue 'paths;
            }
        }
        values.push(s);
    }
    let rate = values.len() as f64 / attempts as f64;
    if rate < floor || values.is_empty() {
        return Err(Error::AcceptanceTooLow { rate, floor });
    }
    Ok(ConditionedSample {
        n,
        attempts,
        values,
        acceptance_rate: rate,
        p_m0,
    })
}

/// `P(Z = n)` for `n = 0..=n_max` through the sampler, with `P(Z = 0) = P(M = 0)`.
pub fn conditioned_z_law(law: &StepLaw, n_max: usize, attempts: usize, p_m0: f64, seed: u64) -> Result<Vec<f64>> {
    let mut out = vec![p_m0];
    for n in 1..=n_max {
        out.push(conditioned_sampler(law, n, attempts, p_m0, 0.0, seed)?.prob_z());
    }
    Ok(out)
}
