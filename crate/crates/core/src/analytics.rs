//! Closed forms for root probabilities, queueing parameters of the corner
//! walks, and the series for the joint transform of the maximum and its
//! location.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;
use crate::walk::StepLaw;

pub use crate::walk::rho;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Side {
    Plus,
    Minus,
}

/// Corner increment `X = Exp(delta) - Exp(beta)` of a Bernoulli substrate
/// side, with its Lundberg exponent `gamma = delta - beta` and
/// `b = P(X > 0)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QueueParams {
    pub delta: f64,
    pub beta: f64,
    pub gamma: f64,
    pub b: f64,
}

impl QueueParams {
    pub fn law(&self) -> StepLaw {
        StepLaw::ExpDiff {
            delta: self.delta,
            beta: self.beta,
        }
    }
}

/// M/M/1 parameters of one side of a Bernoulli substrate: `p` is the
/// probability of a vertical step on that side.
pub fn mm1_params(p: f64, a: f64, side: Side) -> Result<QueueParams> {
    if !(0.0..=1.0).contains(&p) || !(a > 0.0) {
        return Err(invalid(format!("need p in [0, 1] and a > 0, got p={p}, a={a}")));
    }
    let r = rho(a);
    let (delta, beta) = match side {
        Side::Plus => ((1.0 - p) * r, p * (1.0 - r)),
        Side::Minus => (p * (1.0 - r), (1.0 - p) * r),
    };
    let gamma = delta - beta;
    if !(gamma > 0.0) {
        return Err(invalid(format!(
            "slope a={a} is outside the rarefaction interval on the {side:?} side (gamma = {gamma})"
        )));
    }
    Ok(QueueParams {
        delta,
        beta,
        gamma,
        b: beta / (delta + beta),
    })
}

/// `P(M = 0) = gamma / delta`.
pub fn prob_max_zero(q: &QueueParams) -> f64 {
    q.gamma / q.delta
}

/// `P(M > x) = (1 - gamma / delta) exp(-gamma x)` for `x >= 0`.
pub fn max_tail(q: &QueueParams, x: f64) -> f64 {
    (1.0 - q.gamma / q.delta) * (-q.gamma * x).exp()
}

fn bernoulli_slopes(p_minus: f64, p_plus: f64) -> Result<(f64, f64)> {
    if !(0.0 <= p_plus && p_plus < p_minus && p_minus <= 1.0) {
        return Err(invalid(format!(
            "need 0 <= p_plus < p_minus <= 1, got p_minus={p_minus}, p_plus={p_plus}"
        )));
    }
    let lm = if p_minus == 1.0 {
        f64::INFINITY
    } else {
        p_minus / (1.0 - p_minus)
    };
    Ok((lm, p_plus / (1.0 - p_plus)))
}

/// `P(Z(a) = 0) = (1 - lambda_plus / sqrt(a)) (1 - sqrt(a) / lambda_minus)`.
pub fn bernoulli_root_prob(a: f64, p_minus: f64, p_plus: f64) -> Result<f64> {
    let (lm, lp) = bernoulli_slopes(p_minus, p_plus)?;
    if !(a > lp * lp && a < lm * lm) {
        return Err(invalid(format!("a={a} outside the rarefaction interval ({}, {})", lp * lp, lm * lm)));
    }
    let r = a.sqrt();
    Ok((1.0 - lp / r) * (1.0 - r / lm))
}

/// The slope `lambda_plus * lambda_minus` maximizing the root probability,
/// and the maximum `(1 - sqrt(lambda_plus / lambda_minus))^2`.
pub fn bernoulli_optimum(p_minus: f64, p_plus: f64) -> Result<(f64, f64)> {
    let (lm, lp) = bernoulli_slopes(p_minus, p_plus)?;
    Ok((lp * lm, (1.0 - (lp / lm).sqrt()).powi(2)))
}

/// Corner increment laws `(plus, minus)` of the Bernoulli substrate at slope `a`.
pub fn bernoulli_step_laws(p_minus: f64, p_plus: f64, a: f64) -> Result<(StepLaw, StepLaw)> {
    Ok((
        mm1_params(p_plus, a, Side::Plus)?.law(),
        mm1_params(p_minus, a, Side::Minus)?.law(),
    ))
}

/// Smallest root in `(0, 1)` of `alpha (1 - r alpha)^k = (1 - r)^k`, with
/// `r = rho` on the plus side and `r = 1 - rho` on the minus side.
pub fn periodic_alpha(k: u32, rho: f64, side: Side) -> Result<f64> {
    if k < 1 || !(rho > 0.0 && rho < 1.0) {
        return Err(invalid(format!("need k >= 1 and rho in (0, 1), got k={k}, rho={rho}")));
    }
    let r = match side {
        Side::Plus => rho,
        Side::Minus => 1.0 - rho,
    };
    let k = k as i32;
    let target = (1.0 - r).powi(k);
    let f = |x: f64| x * (1.0 - r * x).powi(k) - target;

    const EPS: f64 = 1e-12;
    let mut grid: Vec<f64> = (1..1000).map(|i| i as f64 * 1e-3).collect();
    grid.push(1.0 - EPS);
    let mut lo = EPS;
    let mut bracket = None;
    for &x in &grid {
        if f(x) >= 0.0 {
            bracket = Some((lo, x));
            break;
        }
        lo = x;
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        invalid(format!(
            "no root in (0, 1) for k={k}, r={r}: the slope is outside the rarefaction interval"
        ))
    })?;
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `P(Z(a) = 0) = (1 - alpha_plus)(1 - alpha_minus)` for the periodic substrate.
pub fn periodic_root_prob(a: f64, k_plus: u32, k_minus: u32) -> Result<f64> {
    check_periodic(a, k_plus, k_minus)?;
    let r = rho(a);
    Ok((1.0 - periodic_alpha(k_plus, r, Side::Plus)?) * (1.0 - periodic_alpha(k_minus, r, Side::Minus)?))
}

fn check_periodic(a: f64, k_plus: u32, k_minus: u32) -> Result<()> {
    if k_plus < 1 || k_minus < 1 || k_plus.max(k_minus) < 2 {
        return Err(invalid(format!("need k_plus, k_minus >= 1 with max >= 2, got ({k_plus}, {k_minus})")));
    }
    let (lo, hi) = (1.0 / (k_plus as f64).powi(2), (k_minus as f64).powi(2));
    if !(a > lo && a < hi) {
        return Err(invalid(format!("a={a} outside the rarefaction interval ({lo}, {hi})")));
    }
    Ok(())
}

/// Corner increment laws `(plus, minus)` of the periodic substrate at slope `a`:
/// `Exp(rho) - Gamma(k_plus, 1 - rho)` and `Exp(1 - rho) - Gamma(k_minus, rho)`.
pub fn periodic_step_laws(k_plus: u32, k_minus: u32, a: f64) -> Result<(StepLaw, StepLaw)> {
    check_periodic(a, k_plus, k_minus)?;
    let r = rho(a);
    Ok((
        StepLaw::ExpMinusGamma {
            delta: r,
            shape: k_plus,
            rate: 1.0 - r,
        },
        StepLaw::ExpMinusGamma {
            delta: 1.0 - r,
            shape: k_minus,
            rate: r,
        },
    ))
}

/// Probability that the tree at the origin of the finite rooted substrate
/// is finite: `2 / (m + 2)`.
pub fn finite_rooted_finite_prob(m: u32) -> Result<f64> {
    if m < 1 {
        return Err(invalid("m must be at least 1"));
    }
    Ok(2.0 / (m as f64 + 2.0))
}

/// Probability that direction `(1, a)` has its root at the origin of the
/// finite rooted substrate:
/// `P(Exp(rho) < Gamma(m, 1 - rho)) P(Exp(1 - rho) < Exp(rho))
///  = rho * sum_{j < m} (1 - rho)^(j + 1)`.
pub fn finite_rooted_direction_prob(a: f64, m: u32) -> Result<f64> {
    if m < 1 || !(a > 0.0) {
        return Err(invalid(format!("need m >= 1 and a > 0, got m={m}, a={a}")));
    }
    let r = rho(a);
    let q = 1.0 - r;
    let mut term = q;
    let mut sum = 0.0;
    for _ in 0..m {
        sum += term;
        term *= q;
    }
    Ok(r * sum)
}

/// `P(K(a) = 0) = (1 - mu_plus / (1 + sqrt(a))) (1 - (1 + sqrt(a)) / mu_minus)`.
pub fn weighted_root_prob(a: f64, mu_minus: f64, mu_plus: f64) -> Result<f64> {
    if !(1.0 < mu_plus && mu_plus < mu_minus) {
        return Err(invalid(format!("need 1 < mu_plus < mu_minus, got ({mu_plus}, {mu_minus})")));
    }
    let (lo, hi) = ((mu_plus - 1.0).powi(2), (mu_minus - 1.0).powi(2));
    if !(a > lo && a < hi) {
        return Err(invalid(format!("a={a} outside the rarefaction interval ({lo}, {hi})")));
    }
    let t = 1.0 + a.sqrt();
    Ok((1.0 - mu_plus / t) * (1.0 - t / mu_minus))
}

/// `(1 - sqrt(mu_plus / mu_minus))^2`, the supremum over `a` of
/// [`weighted_root_prob`].
pub fn weighted_bound(mu_minus: f64, mu_plus: f64) -> f64 {
    (1.0 - (mu_plus / mu_minus).sqrt()).powi(2)
}

/// Control of the series evaluation of the joint transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Largest number of series terms.
    pub n_max: usize,
    /// Random-walk paths in the shared pool for each side.
    pub mc_samples_per_term: usize,
    /// Largest accepted truncation bound.
    pub tolerance: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        Self {
            n_max: 400,
            mc_samples_per_term: 100_000,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformValue {
    pub value: f64,
    /// Bound on the error from truncating the series (Monte Carlo error of
    /// the terms is not included).
    pub truncation_bound: f64,
    pub terms: usize,
}

/// Shared pool of walk paths: `sums[i * n + j] = S_{j+1}` of path `i`.
struct PathPool {
    n: usize,
    sums: Vec<f64>,
}

const POOL_CHUNK: usize = 1024;

impl PathPool {
    fn sample(law: &StepLaw, paths: usize, n: usize, seed: u64, stream: u64) -> Self {
        let chunks = paths.div_ceil(POOL_CHUNK);
        let parts: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng::replica_rng(seed, (stream << 32) | c as u64);
                let count = POOL_CHUNK.min(paths - c * POOL_CHUNK);
                let mut out = Vec::with_capacity(count * n);
                for _ in 0..count {
                    let mut s = 0.0;
                    for _ in 0..n {
                        s += law.sample(&mut rng);
                        out.push(s);
                    }
                }
                out
            })
            .collect();
        Self { n, sums: parts.concat() }
    }

    /// Estimates of `E[exp(v S_j); S_j > 0]` for `j = 1..=n`.
    fn positive_moments(&self, v: f64) -> Vec<f64> {
        let paths = self.sums.len() / self.n;
        let mut acc = vec![0.0; self.n];
        for path in self.sums.chunks_exact(self.n) {
            for (a, &s) in acc.iter_mut().zip(path) {
                if s > 0.0 {
                    *a += (v * s).exp();
                }
            }
        }
        acc.iter().map(|a| a / paths as f64).collect()
    }
}

/// Per-step bound `kappa` with `E[exp(v S_n); S_n > 0] <= kappa^n` for
/// `v < gamma`.
fn moment_decay(law: &StepLaw, v: f64) -> f64 {
    law.mgf(v.max(law.min_mgf_point()))
}

fn tail_bound(s: f64, kappa: f64, n: usize) -> f64 {
    let q = s * kappa;
    q.powi(n as i32 + 1) / ((n as f64 + 1.0) * (1.0 - q))
}

/// `transformPhi(s, v) = P(M = 0) exp{sum_n (s^n / n) E[exp(v S_n); S_n > 0]}`,
/// which equals `E[s^Z exp(v M)]` for one side.
fn transform_phi(p0: f64, moments: &[f64], s: f64) -> f64 {
    let mut acc = 0.0;
    let mut sn = 1.0;
    for (j, m) in moments.iter().enumerate() {
        sn *= s;
        acc += sn / (j + 1) as f64 * m;
    }
    p0 * acc.exp()
}

/// Default right end of the transform domain, `min(gamma_plus, gamma_minus)(1 - 1e-6)`.
pub fn transform_domain(plus: &StepLaw, minus: &StepLaw) -> Result<f64> {
    match (plus.lundberg(), minus.lundberg()) {
        (Some(a), Some(b)) => Ok(a.min(b) * (1.0 - 1e-6)),
        _ => Err(invalid("both step laws need a negative drift")),
    }
}

/// `E[s^|Z| exp(u M)]` for the two-sided walk with corner increment laws
/// `plus` and `minus`.
///
/// With `Psi(s, v)` the one-sided transform and `p = P(M = 0)`, `gamma` the
/// Lundberg exponents of each side:
/// `p+ p- + [Psi+(u) - p+] - (1 - p-)[Psi+(u - gamma-) - p+]
///        + [Psi-(u) - p-] - (1 - p+)[Psi-(u - gamma+) - p-]`.
/// Series terms are estimated from one shared pool of paths per side.
pub fn joint_transform(s: f64, u: f64, plus: &StepLaw, minus: &StepLaw, cfg: &SeriesConfig, seed: u64) -> Result<TransformValue> {
    if !(s > 0.0 && s < 1.0) {
        return Err(invalid(format!("s must lie in (0, 1), got {s}")));
    }
    let c = transform_domain(plus, minus)?;
    if !(0.0..=c).contains(&u) {
        return Err(invalid(format!("u={u} outside the transform domain [0, {c}]")));
    }
    if cfg.n_max < 1 || cfg.mc_samples_per_term < 1 || !(cfg.tolerance > 0.0) {
        return Err(invalid("series configuration needs n_max >= 1, samples >= 1, tolerance > 0"));
    }
    let (gp, gm) = (plus.lundberg().unwrap(), minus.lundberg().unwrap());
    let pp = gp / plus.delta();
    let pm = gm / minus.delta();

    // (law, p0, argument, coefficient, side)
    let terms = [
        (plus, pp, u, 1.0, 0u64),
        (plus, pp, u - gm, 1.0 - pm, 0),
        (minus, pm, u, 1.0, 1),
        (minus, pm, u - gp, 1.0 - pp, 1),
    ];
    // Psi <= p0 exp(sum_n s^n/n) = p0 / (1 - s) bounds the multiplier of e^T - 1
    let bound_at = |n: usize| -> f64 {
        terms
            .iter()
            .map(|&(law, p0, v, coef, _)| {
                let t = tail_bound(s, moment_decay(law, v), n);
                coef * p0 / (1.0 - s) * t.exp_m1()
            })
            .sum()
    };
    let n = (1..=cfg.n_max).find(|&n| bound_at(n) <= cfg.tolerance).ok_or(Error::TruncationExceeded {
        bound: bound_at(cfg.n_max),
        tolerance: cfg.tolerance,
    })?;

    let pools = [
        PathPool::sample(plus, cfg.mc_samples_per_term, n, seed, 0),
        PathPool::sample(minus, cfg.mc_samples_per_term, n, seed, 1),
    ];
    let psi: Vec<f64> = terms
        .iter()
        .map(|&(_, p0, v, _, side)| transform_phi(p0, &pools[side as usize].positive_moments(v), s))
        .collect();
    let value = pp * pm + (psi[0] - pp) - (1.0 - pm) * (psi[1] - pp) + (psi[2] - pm) - (1.0 - pp) * (psi[3] - pm);
    Ok(TransformValue {
        value,
        truncation_bound: bound_at(n),
        terms: n,
    })
}
