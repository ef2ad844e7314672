//! Experiments behind the command-line subcommands. Each returns a report
//! that writes a CSV table and a JSON summary.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::report::{write_rows, Report, Summary};
use super::stats::{self, Estimate, TailFit};
use super::{arm_seed, run_replicated, Replica, SubstrateSpec, MAX_WINDOW};
use crate::analytics::{self, SeriesConfig, TransformValue};
use crate::error::{invalid, Error, Result};
use crate::forest::{self, build_forest, CheckpointSchedule, HeightRecord, Region, RootMap};
use crate::lattice::{Point, WeightGrid};
use crate::walk::{build_walk, combine_sides, max_and_argmax, one_sided_max, Certify, MaxArgRecord, StepLaw};

/// Walk windows start here and double until the maximum is certified.
const FIRST_WALK_WINDOW: usize = 512;

/// `(Z, M)` of the dual walk over one substrate realization.
pub fn walk_root(spec: &SubstrateSpec, a: f64, certify: Certify, replica: Replica) -> Result<MaxArgRecord> {
    let [sub_seed, walk_seed] = replica.seeds();
    let mut window = FIRST_WALK_WINDOW;
    loop {
        let sub = spec.generate(window, sub_seed)?;
        let walk = build_walk(&sub, a, walk_seed)?;
        match max_and_argmax(&walk, &sub, certify) {
            Err(Error::CertificationFailed { .. }) if window < MAX_WINDOW => window *= 2,
            other => return other,
        }
    }
}

/// Lattice roots of direction `(1, a)` at the checkpoint levels for one
/// substrate and weight realization.
pub fn lattice_trace(spec: &SubstrateSpec, a: f64, schedule: &CheckpointSchedule, replica: Replica) -> Result<Vec<i64>> {
    let [sub_seed, lattice_seed] = replica.seeds();
    let top = *schedule.levels().last().ok_or_else(|| invalid("empty checkpoint schedule"))?;
    let sub = spec.covering(forest::direction_point(a, top), sub_seed)?;
    forest::root_trace(&sub, lattice_seed, a, schedule)
}

/// What to do with lattice replicas whose checkpoints disagree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootPolicy {
    /// Exclude them, failing above `max_exclusion`.
    Exclude,
    /// Keep the root of the last checkpoint and report the disagreement rate.
    LastCheckpoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootDistConfig {
    pub substrate: SubstrateSpec,
    pub a: f64,
    pub replicas: u64,
    pub seed: u64,
    pub schedule: CheckpointSchedule,
    /// Atoms `-zmax..=zmax` are tabulated.
    pub zmax: i64,
    pub policy: RootPolicy,
    /// Largest tolerated fraction of excluded lattice replicas.
    pub max_exclusion: f64,
}

impl Default for RootDistConfig {
    fn default() -> Self {
        Self {
            substrate: SubstrateSpec::Bernoulli {
                p_minus: 2.0 / 3.0,
                p_plus: 1.0 / 3.0,
            },
            a: 1.0,
            replicas: 10_000,
            seed: 0,
            schedule: CheckpointSchedule::default(),
            zmax: 20,
            policy: RootPolicy::Exclude,
            max_exclusion: 0.01,
        }
    }
}

/// The root law of direction `(1, a)` from the lattice and from the walk.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootDistReport {
    pub config: RootDistConfig,
    /// Stable lattice roots of the retained replicas.
    pub lattice: Vec<i64>,
    pub walk: Vec<MaxArgRecord>,
    /// Fraction of lattice replicas whose last `agree` checkpoints disagree.
    pub unstable_rate: f64,
    pub excluded: u64,
    pub exclusion_rate: f64,
    pub lattice_p0: Estimate,
    pub walk_p0: Estimate,
    pub closed_form_p0: Option<f64>,
    pub tv: f64,
}

/// Samples the root of direction `(1, a)` on both sides of the duality:
/// lattice roots at the checkpoint levels and argmaxima of the walk, from
/// independent seeds.
///
/// A lattice replica is unstable when its last `agree` checkpoints carry
/// different roots; `policy` decides whether it is excluded.
pub fn root_dist(cfg: &RootDistConfig) -> Result<RootDistReport> {
    if cfg.replicas < 1 || cfg.zmax < 0 || cfg.schedule.agree < 1 || cfg.schedule.agree > cfg.schedule.count {
        return Err(invalid("need replicas >= 1, zmax >= 0 and 1 <= agree <= count"));
    }
    let certify = cfg.substrate.certify(cfg.a)?;
    let traces = run_replicated(cfg.replicas, arm_seed(cfg.seed, 0), |r| {
        lattice_trace(&cfg.substrate, cfg.a, &cfg.schedule, r)
    })?;
    let agree = cfg.schedule.agree as usize;
    let mut lattice = Vec::with_capacity(traces.len());
    let mut unstable = 0;
    for t in &traces {
        let stable = t[t.len() - agree..].windows(2).all(|w| w[0] == w[1]);
        if !stable {
            unstable += 1;
        }
        if stable || cfg.policy == RootPolicy::LastCheckpoint {
            lattice.push(*t.last().unwrap());
        }
    }
    let excluded = (traces.len() - lattice.len()) as u64;
    let exclusion_rate = excluded as f64 / cfg.replicas as f64;
    if exclusion_rate > cfg.max_exclusion || lattice.is_empty() {
        return Err(Error::ExclusionRateExceeded {
            rate: exclusion_rate,
            limit: cfg.max_exclusion,
        });
    }
    let walk = run_replicated(cfg.replicas, arm_seed(cfg.seed, 1), |r| {
        walk_root(&cfg.substrate, cfg.a, certify, r)
    })?;
    let walk_z: Vec<i64> = walk.iter().map(|w| w.z).collect();
    let tv = stats::tv_distance(
        &stats::histogram(&lattice, -cfg.zmax, cfg.zmax),
        &stats::histogram(&walk_z, -cfg.zmax, cfg.zmax),
    );
    Ok(RootDistReport {
        lattice_p0: zero_fraction(&lattice),
        walk_p0: zero_fraction(&walk_z),
        closed_form_p0: cfg.substrate.root_prob(cfg.a),
        config: cfg.clone(),
        lattice,
        walk,
        unstable_rate: unstable as f64 / cfg.replicas as f64,
        excluded,
        exclusion_rate,
        tv,
    })
}

fn zero_fraction(z: &[i64]) -> Estimate {
    stats::estimate_count(z.iter().filter(|&&z| z == 0).count() as u64, z.len() as u64)
}

fn atom_rows(samples: &[i64], zmax: i64) -> Vec<Estimate> {
    (-zmax..=zmax)
        .map(|z| stats::estimate_count(samples.iter().filter(|&&s| s == z).count() as u64, samples.len() as u64))
        .collect()
}

impl RootDistReport {
    pub fn walk_z(&self) -> Vec<i64> {
        self.walk.iter().map(|w| w.z).collect()
    }
}

impl Report for RootDistReport {
    fn id(&self) -> &'static str {
        "root-dist"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            z: i64,
            lattice_p: f64,
            lattice_ci_lo: f64,
            lattice_ci_hi: f64,
            walk_p: f64,
            walk_ci_lo: f64,
            walk_ci_hi: f64,
        }
        let zmax = self.config.zmax;
        let lat = atom_rows(&self.lattice, zmax);
        let walk = atom_rows(&self.walk_z(), zmax);
        write_rows(
            out,
            (-zmax..=zmax).zip(lat.iter().zip(&walk)).map(|(z, (l, w))| Row {
                z,
                lattice_p: l.value,
                lattice_ci_lo: l.ci95.0,
                lattice_ci_hi: l.ci95.1,
                walk_p: w.value,
                walk_ci_lo: w.ci95.0,
                walk_ci_hi: w.ci95.1,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({
                "lattice_p0": self.lattice_p0,
                "walk_p0": self.walk_p0,
                "closed_form_p0": self.closed_form_p0,
                "tv_distance": self.tv,
                "unstable_rate": self.unstable_rate,
                "excluded": self.excluded,
                "exclusion_rate": self.exclusion_rate,
            }),
        }
        .to_value()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkDistConfig {
    pub substrate: SubstrateSpec,
    pub a: f64,
    pub replicas: u64,
    pub seed: u64,
    pub zmax: i64,
    /// Levels `x` at which `P(M > x)` of the one-sided maxima is checked.
    pub tail_points: Vec<f64>,
}

impl Default for WalkDistConfig {
    fn default() -> Self {
        Self {
            substrate: SubstrateSpec::Bernoulli {
                p_minus: 2.0 / 3.0,
                p_plus: 1.0 / 3.0,
            },
            a: 1.0,
            replicas: 100_000,
            seed: 0,
            zmax: 20,
            tail_points: vec![0.5, 1.0, 2.0],
        }
    }
}

/// One-sided maximum check: `P(M = 0)` at `x = 0` and `P(M > x)` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MaxLawRow {
    pub side: analytics::Side,
    pub x: f64,
    pub estimate: Estimate,
    pub closed_form: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WalkDistReport {
    pub config: WalkDistConfig,
    pub walk: Vec<MaxArgRecord>,
    pub p0: Estimate,
    pub closed_form_p0: Option<f64>,
    pub mean_max: Estimate,
    /// Checks on i.i.d. one-sided walks; empty when the corner steps are
    /// not i.i.d.
    pub one_sided: Vec<MaxLawRow>,
}

/// `P(M = 0) = gamma / delta` and `P(M > x) = (1 - gamma / delta) exp(-gamma x)`
/// for a step law with an exponential positive part.
pub fn max_law(law: &StepLaw, x: f64) -> Result<f64> {
    let gamma = law.lundberg().ok_or_else(|| invalid("the step law needs a negative drift"))?;
    let q = gamma / law.delta();
    Ok(if x == 0.0 { q } else { (1.0 - q) * (-gamma * x).exp() })
}

/// Law of the walk argmax over substrate realizations, and maxima of
/// one-sided walks with i.i.d. corner steps against their closed forms.
pub fn walk_dist(cfg: &WalkDistConfig) -> Result<WalkDistReport> {
    if cfg.replicas < 1 || cfg.zmax < 0 || cfg.tail_points.iter().any(|&x| !(x > 0.0)) {
        return Err(invalid("need replicas >= 1, zmax >= 0 and positive tail points"));
    }
    let certify = cfg.substrate.certify(cfg.a)?;
    let walk = run_replicated(cfg.replicas, arm_seed(cfg.seed, 1), |r| {
        walk_root(&cfg.substrate, cfg.a, certify, r)
    })?;
    let z: Vec<i64> = walk.iter().map(|w| w.z).collect();
    let maxima: Vec<f64> = walk.iter().map(|w| w.m).collect();

    let mut one_sided = Vec::new();
    if let Some(laws) = cfg.substrate.step_laws(cfg.a) {
        let (plus, minus) = laws?;
        for (arm, side, law) in [(2, analytics::Side::Plus, plus), (3, analytics::Side::Minus, minus)] {
            let m = run_replicated(cfg.replicas, arm_seed(cfg.seed, arm), |r| {
                Ok(one_sided_max(&law, &mut r.rng())?.1)
            })?;
            let mut xs = vec![0.0];
            xs.extend(&cfg.tail_points);
            for x in xs {
                let hits: Vec<bool> = m.iter().map(|&v| if x == 0.0 { v == 0.0 } else { v > x }).collect();
                one_sided.push(MaxLawRow {
                    side,
                    x,
                    estimate: stats::estimate_prob(&hits),
                    closed_form: max_law(&law, x)?,
                });
            }
        }
    }
    Ok(WalkDistReport {
        p0: zero_fraction(&z),
        closed_form_p0: cfg.substrate.root_prob(cfg.a),
        mean_max: stats::estimate_mean(&maxima),
        config: cfg.clone(),
        walk,
        one_sided,
    })
}

impl Report for WalkDistReport {
    fn id(&self) -> &'static str {
        "walk-dist"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            z: i64,
            p: f64,
            ci_lo: f64,
            ci_hi: f64,
        }
        let z: Vec<i64> = self.walk.iter().map(|w| w.z).collect();
        let zmax = self.config.zmax;
        write_rows(
            out,
            (-zmax..=zmax).zip(atom_rows(&z, zmax)).map(|(z, e)| Row {
                z,
                p: e.value,
                ci_lo: e.ci95.0,
                ci_hi: e.ci95.1,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({
                "p0": self.p0,
                "closed_form_p0": self.closed_form_p0,
                "mean_max": self.mean_max,
                "one_sided": self.one_sided,
            }),
        }
        .to_value()
    }

    fn extra_tables(&self) -> Vec<(&'static str, Box<dyn Fn(&mut dyn Write) -> Result<()> + '_>)> {
        #[derive(Serialize)]
        struct Row {
            side: analytics::Side,
            x: f64,
            estimate: f64,
            stderr: f64,
            closed_form: f64,
        }
        vec![(
            "max",
            Box::new(|out: &mut dyn Write| {
                write_rows(
                    out,
                    self.one_sided.iter().map(|r| Row {
                        side: r.side,
                        x: r.x,
                        estimate: r.estimate.value,
                        stderr: r.estimate.stderr,
                        closed_form: r.closed_form,
                    }),
                )
            }),
        )]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightTailConfig {
    pub samples: u64,
    pub n_max: u64,
    pub seed: u64,
    /// Defaults to `[n_max / 16, n_max / 2]`.
    pub fit_range: Option<(u64, u64)>,
}

impl Default for HeightTailConfig {
    fn default() -> Self {
        Self {
            samples: 20_000,
            n_max: 512,
            seed: 0,
            fit_range: None,
        }
    }
}

/// Conjectured limit of `n^(2/3) P(H_0 >= n)`, reported for comparison.
pub const CONJECTURED_PLATEAU: f64 = 2.364 / 1.587_401_051_968_199_4;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightTailReport {
    pub config: HeightTailConfig,
    pub heights: Vec<HeightRecord>,
    /// `P(H_0 >= n)` for `n = 1..=n_max`.
    pub survival: Vec<Estimate>,
    pub censored_fraction: f64,
    pub fit: Option<TailFit>,
    pub fit_error: Option<String>,
}

impl HeightTailReport {
    pub fn is_monotone(&self) -> bool {
        self.survival.windows(2).all(|w| w[1].value <= w[0].value)
    }
}

/// Survival function of the height of the tree at the origin of the flat
/// diagonal substrate, with a power-law fit of its tail.
pub fn height_tail(cfg: &HeightTailConfig) -> Result<HeightTailReport> {
    if cfg.samples < 1 || cfg.n_max < 1 {
        return Err(invalid("need samples >= 1 and n_max >= 1"));
    }
    let heights = run_replicated(cfg.samples, cfg.seed, |r| {
        forest::tree_height(r.seeds::<1>()[0], 0, cfg.n_max)
    })?;
    let mut at_least = vec![0u64; cfg.n_max as usize + 2];
    for h in &heights {
        at_least[h.height as usize] += 1;
    }
    for n in (0..=cfg.n_max as usize).rev() {
        at_least[n] += at_least[n + 1];
    }
    let survival: Vec<Estimate> = (1..=cfg.n_max as usize)
        .map(|n| stats::estimate_count(at_least[n], cfg.samples))
        .collect();
    let range = cfg.fit_range.unwrap_or(((cfg.n_max / 16).max(1), (cfg.n_max / 2).max(1)));
    let points: Vec<(u64, f64)> = survival.iter().enumerate().map(|(i, e)| (i as u64 + 1, e.value)).collect();
    let (fit, fit_error) = match stats::tail_fit(&points, range) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(HeightTailReport {
        censored_fraction: heights.iter().filter(|h| h.censored).count() as f64 / cfg.samples as f64,
        config: cfg.clone(),
        heights,
        survival,
        fit,
        fit_error,
    })
}

impl Report for HeightTailReport {
    fn id(&self) -> &'static str {
        "height-tail"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            n: u64,
            p: f64,
            ci_lo: f64,
            ci_hi: f64,
        }
        write_rows(
            out,
            self.survival.iter().enumerate().map(|(i, e)| Row {
                n: i as u64 + 1,
                p: e.value,
                ci_lo: e.ci95.0,
                ci_hi: e.ci95.1,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({
                "censored_fraction": self.censored_fraction,
                "monotone": self.is_monotone(),
                "exponent": self.fit.as_ref().map(|f| f.exponent),
                "constant": self.fit.as_ref().map(|f| f.constant),
                "r2": self.fit.as_ref().map(|f| f.r2),
                "fit_range": self.fit.as_ref().map(|f| f.fit_range),
                "plateau_min": self.fit.as_ref().map(|f| f.plateau_min()),
                "plateau_mean": self.fit.as_ref().map(|f| f.plateau_mean()),
                "conjectured_plateau": CONJECTURED_PLATEAU,
                "fit_error": self.fit_error,
            }),
        }
        .to_value()
    }

    fn extra_tables(&self) -> Vec<(&'static str, Box<dyn Fn(&mut dyn Write) -> Result<()> + '_>)> {
        vec![(
            "samples",
            Box::new(|out: &mut dyn Write| forest::write_heights_csv(out, &self.heights)),
        )]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualConfig {
    pub m: i64,
    pub replicas: u64,
    /// Level budget `N` of both arms.
    pub n: i64,
    pub seed: u64,
    /// Parameter of the exponential weighted substrate on both sides.
    pub p: f64,
    pub geodesics: GeodesicMode,
}

/// How the semi-infinite geodesics of the `T(m)` arm are approximated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeodesicMode {
    /// Geodesics to the far corner `(N, N)`.
    PointToPoint,
    /// Geodesics leaving the box through Busemann exit values.
    Stationary,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            m: 4,
            replicas: 5_000,
            n: 400,
            seed: 0,
            p: 0.5,
            geodesics: GeodesicMode::PointToPoint,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DualRecord {
    /// `min(T(m), N)`.
    pub t: i64,
    pub t_censored: bool,
    /// `min(T(m), N)` from the box of side `2N`.
    pub t_doubled: i64,
    /// `min(H(m), N)`.
    pub h: i64,
    pub h_censored: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DualReport {
    pub config: DualConfig,
    pub records: Vec<DualRecord>,
    pub changed_on_doubling: f64,
    pub ks: f64,
    pub ks_critical_01: f64,
    pub mean_t: Estimate,
    pub mean_h: Estimate,
}

fn truncated_coalescence(mode: GeodesicMode, seed: u64, m: i64, n: i64, cap: i64) -> Result<(i64, bool)> {
    let t = match mode {
        GeodesicMode::PointToPoint => forest::coalescence_time(seed, m, n),
        GeodesicMode::Stationary => forest::coalescence_time_stationary(seed, m, n),
    };
    match t {
        Ok(t) => Ok((t.min(cap), t >= cap)),
        Err(Error::NotCoalesced) => Ok((cap, true)),
        Err(e) => Err(e),
    }
}

/// Coalescence times `T(m)` of direction-`(1, 1)` geodesics against the
/// maximal tree height `H(m)` over the weighted substrate, both truncated
/// at `N`, with their two-sample KS statistic. Each `T(m)` is recomputed in
/// a box of side `2N` to measure the finite-box effect.
pub fn dual(cfg: &DualConfig) -> Result<DualReport> {
    if cfg.m < 0 || cfg.n <= cfg.m || cfg.replicas < 1 {
        return Err(invalid("need 0 <= m < N and replicas >= 1"));
    }
    let records = run_replicated(cfg.replicas, cfg.seed, |r| {
        let [t_seed, h_seed] = r.seeds();
        let (t, t_censored) = truncated_coalescence(cfg.geodesics, t_seed, cfg.m, cfg.n, cfg.n)?;
        let (t_doubled, _) = truncated_coalescence(cfg.geodesics, t_seed, cfg.m, 2 * cfg.n, cfg.n)?;
        let (h, h_censored) = if cfg.m == 0 {
            (0, false)
        } else {
            let rec = forest::weighted_max_height(cfg.p, h_seed, cfg.m, cfg.n as u64)?;
            (rec.height as i64, rec.censored)
        };
        Ok(DualRecord { t, t_censored, t_doubled, h, h_censored })
    })?;
    let t: Vec<f64> = records.iter().map(|r| r.t as f64).collect();
    let h: Vec<f64> = records.iter().map(|r| r.h as f64).collect();
    let changed = records.iter().filter(|r| r.t != r.t_doubled).count();
    Ok(DualReport {
        config: cfg.clone(),
        changed_on_doubling: changed as f64 / records.len() as f64,
        ks: stats::ks_statistic(&t, &h),
        ks_critical_01: stats::ks_critical(t.len(), h.len(), 0.01),
        mean_t: stats::estimate_mean(&t),
        mean_h: stats::estimate_mean(&h),
        records,
    })
}

impl Report for DualReport {
    fn id(&self) -> &'static str {
        "dual"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            replica: usize,
            t: i64,
            t_censored: bool,
            t_doubled: i64,
            h: i64,
            h_censored: bool,
        }
        write_rows(
            out,
            self.records.iter().enumerate().map(|(replica, r)| Row {
                replica,
                t: r.t,
                t_censored: r.t_censored,
                t_doubled: r.t_doubled,
                h: r.h,
                h_censored: r.h_censored,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({
                "ks": self.ks,
                "ks_critical_01": self.ks_critical_01,
                "changed_on_doubling": self.changed_on_doubling,
                "mean_t": self.mean_t,
                "mean_h": self.mean_h,
                "t_censored": self.records.iter().filter(|r| r.t_censored).count(),
                "h_censored": self.records.iter().filter(|r| r.h_censored).count(),
            }),
        }
        .to_value()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootEscapeConfig {
    pub p_minus: f64,
    pub p_plus: f64,
    /// Increasing slopes.
    pub a_grid: Vec<f64>,
    pub replicas: u64,
    /// Antidiagonal level at which roots are read.
    pub level: i64,
    pub seed: u64,
}

impl Default for RootEscapeConfig {
    fn default() -> Self {
        Self {
            p_minus: 2.0 / 3.0,
            p_plus: 1.0 / 3.0,
            a_grid: vec![1.0, 1.5, 2.5, 3.5, 3.9],
            replicas: 400,
            level: 1024,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EscapeRow {
    pub a: f64,
    pub median_abs_z: i64,
    pub mean_z: f64,
    pub p0: Estimate,
    pub closed_form_p0: Option<f64>,
    /// Fraction of replicas whose root at half the level is the same.
    pub agree_half_level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RootEscapeReport {
    pub config: RootEscapeConfig,
    /// `roots[replica][i]` is the root for `a_grid[i]`.
    pub roots: Vec<Vec<i64>>,
    pub rows: Vec<EscapeRow>,
    /// Pairs of neighbouring slopes whose roots are out of order.
    pub violations: u64,
}

impl RootEscapeReport {
    pub fn medians(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.median_abs_z).collect()
    }
}

/// Roots of the directions `(1, a)` over a grid of slopes, all read on one
/// antidiagonal of a single forest per replica.
pub fn root_escape(cfg: &RootEscapeConfig) -> Result<RootEscapeReport> {
    if cfg.a_grid.is_empty() || cfg.a_grid.windows(2).any(|w| w[1] <= w[0]) || cfg.a_grid[0] <= 0.0 {
        return Err(invalid("the slope grid must be positive and increasing"));
    }
    if cfg.level < 4 || cfg.replicas < 1 {
        return Err(invalid("need level >= 4 and replicas >= 1"));
    }
    let spec = SubstrateSpec::Bernoulli {
        p_minus: cfg.p_minus,
        p_plus: cfg.p_plus,
    };
    let k = cfg.a_grid.len();
    let traces = run_replicated(cfg.replicas, cfg.seed, |r| {
        let [sub_seed, lattice_seed] = r.seeds();
        let mut points: Vec<Point> = cfg.a_grid.iter().map(|&a| forest::direction_point(a, cfg.level)).collect();
        points.extend(cfg.a_grid.iter().map(|&a| forest::direction_point(a, cfg.level / 2)));
        let target = points.iter().copied().reduce(Point::join).unwrap();
        let sub = spec.covering(target, sub_seed)?;
        forest::roots_at(&sub, lattice_seed, &points)
    })?;
    let roots: Vec<Vec<i64>> = traces.iter().map(|t| t[..k].to_vec()).collect();
    let violations = roots.iter().map(|z| z.windows(2).filter(|w| w[1] > w[0]).count() as u64).sum();
    let rows = (0..k)
        .map(|i| {
            let z: Vec<i64> = roots.iter().map(|t| t[i]).collect();
            let mut abs: Vec<i64> = z.iter().map(|z| z.abs()).collect();
            abs.sort_unstable();
            let agree = traces.iter().filter(|t| t[i] == t[k + i]).count();
            EscapeRow {
                a: cfg.a_grid[i],
                median_abs_z: abs[abs.len() / 2],
                mean_z: z.iter().sum::<i64>() as f64 / z.len() as f64,
                p0: zero_fraction(&z),
                closed_form_p0: spec.root_prob(cfg.a_grid[i]),
                agree_half_level: agree as f64 / traces.len() as f64,
            }
        })
        .collect();
    Ok(RootEscapeReport {
        config: cfg.clone(),
        roots,
        rows,
        violations,
    })
}

impl Report for RootEscapeReport {
    fn id(&self) -> &'static str {
        "root-escape"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            a: f64,
            median_abs_z: i64,
            mean_z: f64,
            p0: f64,
            p0_ci_lo: f64,
            p0_ci_hi: f64,
            agree_half_level: f64,
        }
        write_rows(
            out,
            self.rows.iter().map(|r| Row {
                a: r.a,
                median_abs_z: r.median_abs_z,
                mean_z: r.mean_z,
                p0: r.p0.value,
                p0_ci_lo: r.p0.ci95.0,
                p0_ci_hi: r.p0.ci95.1,
                agree_half_level: r.agree_half_level,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({ "violations": self.violations, "rows": self.rows }),
        }
        .to_value()
    }

    fn extra_tables(&self) -> Vec<(&'static str, Box<dyn Fn(&mut dyn Write) -> Result<()> + '_>)> {
        #[derive(Serialize)]
        struct Row {
            replica: usize,
            a: f64,
            z: i64,
        }
        vec![(
            "roots",
            Box::new(|out: &mut dyn Write| {
                write_rows(
                    out,
                    self.roots.iter().enumerate().flat_map(|(replica, zs)| {
                        zs.iter().zip(&self.config.a_grid).map(move |(&z, &a)| Row { replica, a, z })
                    }),
                )
            }),
        )]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub substrate: SubstrateSpec,
    pub a: f64,
    /// `(s, u)` evaluation points.
    pub points: Vec<(f64, f64)>,
    pub series: SeriesConfig,
    pub seed: u64,
    /// Direct Monte Carlo samples per point; 0 skips the comparison.
    pub oracle_samples: u64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            substrate: SubstrateSpec::Bernoulli {
                p_minus: 2.0 / 3.0,
                p_plus: 1.0 / 3.0,
            },
            a: 1.0,
            points: vec![(0.5, 0.0)],
            series: SeriesConfig::default(),
            seed: 0,
            oracle_samples: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TransformRow {
    pub s: f64,
    pub u: f64,
    pub value: TransformValue,
    pub oracle: Option<Estimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformReport {
    pub config: TransformConfig,
    pub rows: Vec<TransformRow>,
}

/// Direct Monte Carlo estimate of `E[s^|Z| exp(u M)]` from pairs of
/// one-sided walks.
pub fn transform_oracle(s: f64, u: f64, plus: &StepLaw, minus: &StepLaw, samples: u64, seed: u64) -> Result<Estimate> {
    let values = run_replicated(samples, seed, |r| {
        let mut rng = r.rng();
        let p = one_sided_max(plus, &mut rng)?;
        let m = one_sided_max(minus, &mut rng)?;
        let (z, max) = combine_sides(p, m);
        Ok(s.powi(z.unsigned_abs() as i32) * (u * max).exp())
    })?;
    Ok(stats::estimate_mean(&values))
}

/// The joint transform of `(|Z|, M)` at each configured point, optionally
/// next to a direct Monte Carlo estimate.
pub fn transform(cfg: &TransformConfig) -> Result<TransformReport> {
    let (plus, minus) = cfg
        .substrate
        .step_laws(cfg.a)
        .ok_or_else(|| invalid("the transform needs a substrate with i.i.d. corner steps"))??;
    let rows = cfg
        .points
        .iter()
        .enumerate()
        .map(|(i, &(s, u))| {
            let value = analytics::joint_transform(s, u, &plus, &minus, &cfg.series, arm_seed(cfg.seed, 2 * i as u64))?;
            let oracle = match cfg.oracle_samples {
                0 => None,
                n => Some(transform_oracle(s, u, &plus, &minus, n, arm_seed(cfg.seed, 2 * i as u64 + 1))?),
            };
            Ok(TransformRow { s, u, value, oracle })
        })
        .collect::<Result<_>>()?;
    Ok(TransformReport { config: cfg.clone(), rows })
}

impl Report for TransformReport {
    fn id(&self) -> &'static str {
        "transform"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            s: f64,
            u: f64,
            value: f64,
            truncation_bound: f64,
        }
        write_rows(
            out,
            self.rows.iter().map(|r| Row {
                s: r.s,
                u: r.u,
                value: r.value.value,
                truncation_bound: r.value.truncation_bound,
            }),
        )
    }

    fn summary(&self) -> serde_json::Value {
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({ "rows": self.rows }),
        }
        .to_value()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub substrate: SubstrateSpec,
    /// Lower-left corner; defaults to the lowest corner seed below `hi`.
    pub lo: Option<(i64, i64)>,
    pub hi: (i64, i64),
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForestReport {
    pub config: ForestConfig,
    pub map: RootMap,
}

/// Root map of a box for one substrate and weight realization.
pub fn forest_map(cfg: &ForestConfig) -> Result<ForestReport> {
    let [sub_seed, lattice_seed] = Replica::new(cfg.seed, 0).seeds();
    let hi = Point::new(cfg.hi.0, cfg.hi.1);
    let sub = cfg.substrate.covering(hi, sub_seed)?;
    let need = sub.required_origin(hi)?;
    let lo = cfg.lo.map_or(need, |(a, b)| Point::new(a, b));
    let grid = WeightGrid::sample_box(lo, hi, lattice_seed)?;
    let region = Region {
        lo,
        hi,
        approximate: !lo.is_below(need),
    };
    Ok(ForestReport {
        config: cfg.clone(),
        map: build_forest(&grid, &sub, region)?,
    })
}

impl Report for ForestReport {
    fn id(&self) -> &'static str {
        "forest"
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        self.map.write_csv(out)
    }

    fn summary(&self) -> serde_json::Value {
        let mut roots: Vec<i64> = self.map.iter().map(|(_, r)| r).collect();
        roots.sort_unstable();
        roots.dedup();
        let region = self.map.region();
        Summary {
            experiment: self.id(),
            seed: self.config.seed,
            config: &self.config,
            metrics: json!({
                "lo": (region.lo.x1, region.lo.x2),
                "approximate": region.approximate,
                "distinct_roots": roots.len(),
                "non_crossing": self.map.is_non_crossing(),
            }),
        }
        .to_value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_schedule() -> CheckpointSchedule {
        CheckpointSchedule { n0: 16, count: 3, agree: 2 }
    }

    #[test]
    fn single_corner_puts_all_mass_on_it() {
        let cfg = RootDistConfig {
            substrate: SubstrateSpec::SingleCorner,
            replicas: 20,
            schedule: small_schedule(),
            ..Default::default()
        };
        let r = root_dist(&cfg).unwrap();
        assert_eq!(r.lattice, vec![0; 20]);
        assert!(r.walk.iter().all(|w| w.z == 0 && w.m == 0.0));
        assert_eq!(r.tv, 0.0);
        assert_eq!(r.excluded, 0);
    }

    #[test]
    fn root_dist_is_deterministic() {
        let cfg = RootDistConfig {
            replicas: 30,
            schedule: small_schedule(),
            max_exclusion: 1.0,
            ..Default::default()
        };
        let a = root_dist(&cfg).unwrap();
        let b = super::super::with_threads(Some(3), || root_dist(&cfg)).unwrap().unwrap();
        assert_eq!(a, b);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_csv(&mut x).unwrap();
        b.write_csv(&mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn exclusion_limit_aborts() {
        let cfg = RootDistConfig {
            replicas: 200,
            schedule: CheckpointSchedule { n0: 2, count: 3, agree: 3 },
            max_exclusion: 0.0,
            ..Default::default()
        };
        assert!(matches!(root_dist(&cfg), Err(Error::ExclusionRateExceeded { .. })));
    }

    #[test]
    fn max_law_matches_queue_formulas() {
        let q = analytics::mm1_params(1.0 / 3.0, 1.0, analytics::Side::Plus).unwrap();
        for x in [0.0, 0.5, 2.0] {
            let want = if x == 0.0 { analytics::prob_max_zero(&q) } else { analytics::max_tail(&q, x) };
            assert!((max_law(&q.law(), x).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn walk_dist_small() {
        let cfg = WalkDistConfig { replicas: 2000, ..Default::default() };
        let r = walk_dist(&cfg).unwrap();
        assert_eq!(r.one_sided.len(), 8);
        for row in &r.one_sided {
            assert!(row.estimate.z_score(row.closed_form) < 4.5, "{row:?}");
        }
        assert!(r.p0.z_score(0.25) < 4.5);
    }

    #[test]
    fn height_tail_small() {
        let cfg = HeightTailConfig { samples: 300, n_max: 64, seed: 2, fit_range: None };
        let r = height_tail(&cfg).unwrap();
        assert!(r.is_monotone());
        assert_eq!(r.survival[0].value, 1.0);
        let censored = r.heights.iter().filter(|h| h.height == 64).count() as f64 / 300.0;
        assert_eq!(r.censored_fraction, censored);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("n,p,ci_lo,ci_hi\n1,1.0,"));
    }

    #[test]
    fn dual_degenerate_and_small() {
        let zero = dual(&DualConfig { m: 0, replicas: 5, n: 20, ..Default::default() }).unwrap();
        assert!(zero.records.iter().all(|r| r.t == 0 && r.h == 0));
        let r = dual(&DualConfig { m: 2, replicas: 20, n: 40, ..Default::default() }).unwrap();
        assert!(r.records.iter().all(|x| x.t >= 0 && x.t <= 40 && x.h <= 40));
    }

    #[test]
    fn root_escape_small() {
        let cfg = RootEscapeConfig { replicas: 20, level: 128, ..Default::default() };
        let r = root_escape(&cfg).unwrap();
        assert_eq!(r.violations, 0);
        assert_eq!(r.rows.len(), 5);
        assert!(root_escape(&RootEscapeConfig { a_grid: vec![2.0, 1.0], ..cfg }).is_err());
    }

    #[test]
    fn transform_rows() {
        let cfg = TransformConfig {
            series: SeriesConfig { n_max: 400, mc_samples_per_term: 5000, tolerance: 1e-3 },
            oracle_samples: 2000,
            ..Default::default()
        };
        let r = transform(&cfg).unwrap();
        let row = r.rows[0];
        let oracle = row.oracle.unwrap();
        assert!((row.value.value - oracle.value).abs() < 5.0 * oracle.stderr + 0.01);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("s,u,value,truncation_bound\n"));
    }

    #[test]
    fn forest_map_default_region_is_exact() {
        let cfg = ForestConfig {
            substrate: SubstrateSpec::Bernoulli { p_minus: 0.7, p_plus: 0.3 },
            lo: None,
            hi: (12, 10),
            seed: 3,
        };
        let r = forest_map(&cfg).unwrap();
        assert!(!r.map.region().approximate);
        assert!(r.map.is_non_crossing());
        assert_eq!(r.map.root(Point::new(1, 1)).is_some(), true);
    }
}
