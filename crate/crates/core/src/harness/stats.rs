//! Estimators, distribution distances and log-log tail fits.

use serde::Serialize;

use crate::error::{invalid, Error, Result};

const Z95: f64 = 1.959963984540054;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CiMethod {
    Wald,
    Wilson,
    Normal,
}

/// A point estimate with its standard error and a 95% interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub n: u64,
    pub method: CiMethod,
    /// The interval was cut to `[0, 1]`.
    pub clamped: bool,
}

impl Estimate {
    /// Whether `target` lies within `k` standard errors of the estimate.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }

    /// Distance to `target` in standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.value - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.stderr
        }
    }
}

/// Proportion of `true` samples.
pub fn estimate_prob(samples: &[bool]) -> Estimate {
    estimate_count(samples.iter().filter(|&&b| b).count() as u64, samples.len() as u64)
}

/// Proportion `k / n` with the Wald standard error. The interval is Wald
/// for `n >= 1000` and Wilson below.
pub fn estimate_count(k: u64, n: u64) -> Estimate {
    assert!(n > 0 && k <= n, "need 0 <= k <= n, n > 0");
    let nf = n as f64;
    let p = k as f64 / nf;
    let stderr = (p * (1.0 - p) / nf).sqrt();
    let (method, lo, hi) = if n >= 1000 {
        (CiMethod::Wald, p - Z95 * stderr, p + Z95 * stderr)
    } else {
        let z2 = Z95 * Z95;
        let denom = 1.0 + z2 / nf;
        let center = (p + z2 / (2.0 * nf)) / denom;
        let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        (CiMethod::Wilson, center - half, center + half)
    };
    let clamped = lo < 0.0 || hi > 1.0;
    Estimate {
        value: p,
        stderr,
        ci95: (lo.max(0.0).min(p), hi.min(1.0).max(p)),
        n,
        method,
        clamped,
    }
}

/// Sample mean with the normal interval.
pub fn estimate_mean(samples: &[f64]) -> Estimate {
    assert!(!samples.is_empty(), "need at least one sample");
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = if samples.len() > 1 {
        samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let stderr = (var / n).sqrt();
    Estimate {
        value: mean,
        stderr,
        ci95: (mean - Z95 * stderr, mean + Z95 * stderr),
        n: samples.len() as u64,
        method: CiMethod::Normal,
        clamped: false,
    }
}

/// Empirical law of integer samples on `lo..=hi`; the last entry collects
/// the mass outside.
pub fn histogram(samples: &[i64], lo: i64, hi: i64) -> Vec<f64> {
    let width = (hi - lo + 1) as usize;
    let mut h = vec![0.0; width + 1];
    for &s in samples {
        if (lo..=hi).contains(&s) {
            h[(s - lo) as usize] += 1.0;
        } else {
            h[width] += 1.0;
        }
    }
    let n = samples.len().max(1) as f64;
    h.iter_mut().for_each(|x| *x /= n);
    h
}

/// `sum |p - q| / 2`; the shorter vector is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F1 - F2|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic critical value of the two-sample KS statistic at level `alpha`.
pub fn ks_critical(n1: usize, n2: usize, alpha: f64) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let (n1, n2) = (n1 as f64, n2 as f64);
    c * ((n1 + n2) / (n1 * n2)).sqrt()
}

/// Least-squares fit of `log p = log c + exponent * log n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    pub fit_range: (u64, u64),
    pub r2: f64,
    /// `(n, n^(2/3) p_n)` over the fit range.
    pub plateau: Vec<(u64, f64)>,
}

impl TailFit {
    pub fn plateau_min(&self) -> f64 {
        self.plateau.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn plateau_mean(&self) -> f64 {
        self.plateau.iter().map(|p| p.1).sum::<f64>() / self.plateau.len() as f64
    }
}

/// Fits the survival points `(n, p_n)` with `n` in `range` and `p_n > 0`.
pub fn tail_fit(survival: &[(u64, f64)], range: (u64, u64)) -> Result<TailFit> {
    if survival.windows(2).any(|w| w[1].0 <= w[0].0 || w[1].1 > w[0].1) {
        return Err(invalid("survival curve must be indexed increasingly and be nonincreasing"));
    }
    let pts: Vec<(u64, f64)> = survival
        .iter()
        .copied()
        .filter(|&(n, p)| n >= range.0 && n <= range.1 && n > 0 && p > 0.0)
        .collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints { needed: 4, got: pts.len() });
    }
    let xs: Vec<f64> = pts.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(TailFit {
        exponent: slope,
        constant: intercept.exp(),
        fit_range: range,
        r2,
        plateau: pts.iter().map(|&(n, p)| (n, (n as f64).powf(2.0 / 3.0) * p)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extreme_proportions() {
        let all = estimate_prob(&[true; 50]);
        assert_eq!((all.value, all.stderr), (1.0, 0.0));
        assert_eq!(all.ci95.1, 1.0);
        let none = estimate_prob(&[false; 5000]);
        assert_eq!((none.value, none.stderr), (0.0, 0.0));
        assert_eq!(none.ci95, (0.0, 0.0));
    }

    #[test]
    fn half_and_half() {
        let e = estimate_count(200, 400);
        assert!((e.stderr - 0.025).abs() < 1e-15);
        assert_eq!(e.method, CiMethod::Wilson);
        assert!(e.ci95.0 < 0.5 && e.ci95.1 > 0.5);
        let w = estimate_count(2000, 4000);
        assert_eq!(w.method, CiMethod::Wald);
        assert!((w.ci95.1 - w.ci95.0 - 2.0 * Z95 * w.stderr).abs() < 1e-12);
    }

    #[test]
    fn clamping_is_flagged() {
        let e = estimate_count(1, 1000);
        assert!(e.clamped);
        assert_eq!(e.ci95.0, 0.0);
        assert!(!estimate_count(500, 1000).clamped);
    }

    #[test]
    fn tv_examples() {
        let p = histogram(&[0, 1, 1, 2], 0, 2);
        assert_eq!(tv_distance(&p, &p), 0.0);
        assert_eq!(tv_distance(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        let a = histogram(&[3; 10], -5, 5);
        let b = histogram(&[4; 10], -5, 5);
        assert_eq!(tv_distance(&a, &b), 1.0);
        let c = histogram(&[0, 0, 0, 1], 0, 1);
        let d = histogram(&[0, 1, 1, 1], 0, 1);
        assert!((tv_distance(&c, &d) - 0.5).abs() < 1e-15);
        assert_eq!(histogram(&[100], 0, 1), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn ks_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_statistic(&a, &a), 0.0);
        assert_eq!(ks_statistic(&[0.0, 0.1], &[5.0, 6.0]), 1.0);
        assert!((ks_statistic(&[1.0, 2.0], &[2.0, 3.0]) - 0.5).abs() < 1e-15);
        // ties across samples count together
        assert!((ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]) - 1.0 / 3.0).abs() < 1e-15);
        assert!((ks_critical(5000, 5000, 0.01) - 0.03255).abs() < 1e-4);
    }

    #[test]
    fn exact_power_laws() {
        let pure: Vec<(u64, f64)> = (1..=512).map(|n| (n, (n as f64).powf(-2.0 / 3.0))).collect();
        let f = tail_fit(&pure, (32, 256)).unwrap();
        assert!((f.exponent + 2.0 / 3.0).abs() < 1e-9);
        assert!((f.constant - 1.0).abs() < 1e-9);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let scaled: Vec<(u64, f64)> = pure.iter().map(|&(n, p)| (n, 0.37 * p)).collect();
        let g = tail_fit(&scaled, (32, 256)).unwrap();
        assert!((g.constant - 0.37).abs() < 1e-9);
        assert!((g.plateau_min() - 0.37).abs() < 1e-9);
    }

    #[test]
    fn fit_errors() {
        let pts = [(1, 1.0), (2, 0.5), (3, 0.4)];
        assert!(matches!(tail_fit(&pts, (1, 3)), Err(Error::TooFewPoints { needed: 4, got: 3 })));
        let bad = [(1, 0.5), (2, 0.6), (3, 0.4), (4, 0.3)];
        assert!(tail_fit(&bad, (1, 4)).is_err());
    }
}
