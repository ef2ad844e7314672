//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a flat JSON object whose keys
//! are long flag names; flags given on the command line win over the file.
//! The master seed is taken from `--seed`, then the config file, then
//! `GEOFOREST_SEED`, and is otherwise drawn at random; it is always printed
//! to stderr.
//!
//! Exit codes: 0 on success, 2 on usage or configuration errors, 3 when an
//! experiment fails.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, SeriesConfig, Side};
use crate::error::Error;
use crate::forest::CheckpointSchedule;
use crate::harness::experiments::{self as exp, GeodesicMode, RootPolicy};
use crate::harness::report::{write_report, write_rows, Report};
use crate::harness::{with_threads, SubstrateSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_EXPERIMENT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "geoforest", version, about = "Geodesic forests in exponential last-passage percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Root map (x1, x2, root_z) of a box above a substrate
    Forest(ForestArgs),
    /// Law of the root of direction (1, a) from the lattice and from the dual walk
    RootDist(RootDistArgs),
    /// Law of the argmax and maximum of the dual walk
    WalkDist(WalkDistArgs),
    /// Survival function of the tree height at the origin of the flat substrate
    HeightTail(HeightTailArgs),
    /// Coalescence times T(m) against maximal tree heights H(m)
    Dual(DualArgs),
    /// Joint transform E[s^|Z| exp(u M)] by its series
    Transform(TransformArgs),
    /// Closed-form probabilities and queue parameters
    ClosedForms(ClosedFormsArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct Common {
    /// Flat JSON file of flag values; command-line flags take precedence
    #[arg(long, value_name = "FILE")]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// Master seed [default: $GEOFOREST_SEED, else random]
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: one per core]
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory for the CSV tables and the JSON summary
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SubstrateKind {
    Bernoulli,
    Periodic,
    FiniteRooted,
    SingleCorner,
    FlatDiagonal,
    /// Exponential weights on the horizontal axis (closed-forms only)
    Weighted,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SubstrateArgs {
    /// Substrate family
    #[arg(long, value_enum, default_value_t = SubstrateKind::Bernoulli)]
    substrate: SubstrateKind,
    /// Bernoulli: probability of an up step left of the origin
    #[arg(long, default_value_t = 2.0 / 3.0)]
    p_minus: f64,
    /// Bernoulli: probability of a down step right of the origin
    #[arg(long, default_value_t = 1.0 / 3.0)]
    p_plus: f64,
    /// Periodic: right steps per down step right of the origin
    #[arg(long, default_value_t = 1)]
    k_plus: u32,
    /// Periodic: up steps per left step left of the origin
    #[arg(long, default_value_t = 2)]
    k_minus: u32,
    /// Finite rooted: right steps between the origin and the last corner
    #[arg(long, default_value_t = 1)]
    m: u32,
}

impl SubstrateArgs {
    fn spec(&self) -> Result<SubstrateSpec, Error> {
        Ok(match self.substrate {
            SubstrateKind::Bernoulli => SubstrateSpec::Bernoulli {
                p_minus: self.p_minus,
                p_plus: self.p_plus,
            },
            SubstrateKind::Periodic => SubstrateSpec::Periodic {
                k_plus: self.k_plus,
                k_minus: self.k_minus,
            },
            SubstrateKind::FiniteRooted => SubstrateSpec::FiniteRooted { m: self.m },
            SubstrateKind::SingleCorner => SubstrateSpec::SingleCorner,
            SubstrateKind::FlatDiagonal => SubstrateSpec::FlatDiagonal,
            SubstrateKind::Weighted => {
                return Err(Error::InvalidParameter(
                    "the weighted substrate is only available in closed-forms".into(),
                ))
            }
        })
    }
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct ForestArgs {
    #[command(flatten)]
    #[serde(flatten)]
    substrate: SubstrateArgs,
    /// First coordinate of the upper-right corner of the box (lattice units)
    #[arg(long, default_value_t = 20)]
    x1: i64,
    /// Second coordinate of the upper-right corner of the box (lattice units)
    #[arg(long, default_value_t = 20)]
    x2: i64,
    /// First coordinate of the lower-left corner [default: lowest corner seed]
    #[arg(long, allow_negative_numbers = true)]
    lo_x1: Option<i64>,
    /// Second coordinate of the lower-left corner [default: lowest corner seed]
    #[arg(long, allow_negative_numbers = true)]
    lo_x2: Option<i64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct RootDistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    substrate: SubstrateArgs,
    /// Slope a of the direction (1, a), dimensionless
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Replicas per arm
    #[arg(long, default_value_t = 10_000)]
    replicas: u64,
    /// First checkpoint level (antidiagonal levels)
    #[arg(long, default_value_t = 128)]
    n0: i64,
    /// Number of checkpoints, doubling the level each time
    #[arg(long, default_value_t = 4)]
    checkpoints: u32,
    /// Trailing checkpoints that must share the root
    #[arg(long, default_value_t = 3)]
    agree: u32,
    /// Tabulate root atoms in [-zmax, zmax] (corner ranks)
    #[arg(long, default_value_t = 20)]
    zmax: i64,
    /// Handling of replicas whose checkpoints disagree
    #[arg(long, value_enum, default_value_t = PolicyArg::Exclude)]
    policy: PolicyArg,
    /// Largest tolerated fraction of excluded replicas
    #[arg(long, default_value_t = 0.01)]
    max_exclusion: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum PolicyArg {
    Exclude,
    LastCheckpoint,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct WalkDistArgs {
    #[command(flatten)]
    #[serde(flatten)]
    substrate: SubstrateArgs,
    /// Slope a of the direction (1, a), dimensionless
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Walk realizations, and one-sided walks per side
    #[arg(long, default_value_t = 100_000)]
    replicas: u64,
    /// Tabulate argmax atoms in [-zmax, zmax] (corner ranks)
    #[arg(long, default_value_t = 20)]
    zmax: i64,
    /// Levels x at which P(M > x) is checked (walk units)
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0])]
    tail_points: Vec<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct HeightTailArgs {
    /// Independent samples of the height
    #[arg(long, default_value_t = 20_000)]
    samples: u64,
    /// Level budget; larger heights are censored (antidiagonal levels)
    #[arg(long, default_value_t = 512)]
    nmax: u64,
    /// Lower end of the fit range [default: nmax / 16] (levels)
    #[arg(long)]
    fit_lo: Option<u64>,
    /// Upper end of the fit range [default: nmax / 2] (levels)
    #[arg(long)]
    fit_hi: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum GeodesicArg {
    PointToPoint,
    Stationary,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct DualArgs {
    /// Distance m between the starting points (lattice units)
    #[arg(long, default_value_t = 4)]
    m: i64,
    /// Replicas per arm
    #[arg(long, default_value_t = 5_000)]
    replicas: u64,
    /// Level budget N of both arms (levels)
    #[arg(long, default_value_t = 400)]
    n: i64,
    /// Weighted substrate parameter on both sides
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Approximation of the semi-infinite geodesics
    #[arg(long, value_enum, default_value_t = GeodesicArg::PointToPoint)]
    geodesics: GeodesicArg,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct TransformArgs {
    #[command(flatten)]
    #[serde(flatten)]
    substrate: SubstrateArgs,
    /// Slope a of the direction (1, a), dimensionless
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Values of s in (0, 1); every s is paired with every u
    #[arg(long, value_delimiter = ',', default_values_t = [0.5])]
    s: Vec<f64>,
    /// Values of u in [0, min Lundberg exponent) (inverse walk units)
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    u: Vec<f64>,
    /// Largest number of series terms
    #[arg(long, default_value_t = 400)]
    n_max: usize,
    /// Walk paths per side in the shared Monte Carlo pool
    #[arg(long, default_value_t = 100_000)]
    mc_samples: usize,
    /// Largest accepted truncation bound
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    /// Direct Monte Carlo samples per point for comparison; 0 skips it
    #[arg(long, default_value_t = 0)]
    oracle_samples: u64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct ClosedFormsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    substrate: SubstrateArgs,
    /// Slope a of the direction (1, a), dimensionless
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Weighted: rate parameter mu of the weights left of the origin
    #[arg(long, default_value_t = 3.0)]
    mu_minus: f64,
    /// Weighted: rate parameter mu of the weights right of the origin
    #[arg(long, default_value_t = 1.5)]
    mu_plus: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

/// Failure of a run, with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::Json(_) => EXIT_CONFIG,
            _ => EXIT_EXPERIMENT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return EXIT_CONFIG;
        }
    };
    let sub = matches.subcommand().map(|s| s.1).expect("a subcommand is required");
    match dispatch(cli.command, sub) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, m: &ArgMatches) -> Result<(), Failure> {
    match command {
        Command::Forest(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let cfg = exp::ForestConfig {
                substrate: a.substrate.spec()?,
                lo: a.lo_x1.zip(a.lo_x2),
                hi: (a.x1, a.x2),
                seed,
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::forest_map(&cfg))
        }
        Command::RootDist(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let cfg = exp::RootDistConfig {
                substrate: a.substrate.spec()?,
                a: a.a,
                replicas: a.replicas,
                seed,
                schedule: CheckpointSchedule {
                    n0: a.n0,
                    count: a.checkpoints,
                    agree: a.agree,
                },
                zmax: a.zmax,
                policy: match a.policy {
                    PolicyArg::Exclude => RootPolicy::Exclude,
                    PolicyArg::LastCheckpoint => RootPolicy::LastCheckpoint,
                },
                max_exclusion: a.max_exclusion,
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::root_dist(&cfg))
        }
        Command::WalkDist(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let cfg = exp::WalkDistConfig {
                substrate: a.substrate.spec()?,
                a: a.a,
                replicas: a.replicas,
                seed,
                zmax: a.zmax,
                tail_points: a.tail_points.clone(),
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::walk_dist(&cfg))
        }
        Command::HeightTail(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let fit_range = match (a.fit_lo, a.fit_hi) {
                (None, None) => None,
                (lo, hi) => Some((lo.unwrap_or((a.nmax / 16).max(1)), hi.unwrap_or((a.nmax / 2).max(1)))),
            };
            let cfg = exp::HeightTailConfig {
                samples: a.samples,
                n_max: a.nmax,
                seed,
                fit_range,
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::height_tail(&cfg))
        }
        Command::Dual(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let cfg = exp::DualConfig {
                m: a.m,
                replicas: a.replicas,
                n: a.n,
                seed,
                p: a.p,
                geodesics: match a.geodesics {
                    GeodesicArg::PointToPoint => GeodesicMode::PointToPoint,
                    GeodesicArg::Stationary => GeodesicMode::Stationary,
                },
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::dual(&cfg))
        }
        Command::Transform(a) => {
            let a = merge(a, m, |a| &a.common)?;
            let seed = resolve_seed(&a.common)?;
            let points = a.s.iter().flat_map(|&s| a.u.iter().map(move |&u| (s, u))).collect();
            let cfg = exp::TransformConfig {
                substrate: a.substrate.spec()?,
                a: a.a,
                points,
                series: SeriesConfig {
                    n_max: a.n_max,
                    mc_samples_per_term: a.mc_samples,
                    tolerance: a.tolerance,
                },
                seed,
                oracle_samples: a.oracle_samples,
            };
            let out = out_dir(&a.common)?;
            run_report(&a.common, out, || exp::transform(&cfg))
        }
        Command::ClosedForms(a) => {
            let a = merge(a, m, |a| &a.common)?;
            closed_forms(&a)
        }
    }
}

/// Fills every flag not given on the command line from the config file.
fn merge<T>(args: T, m: &ArgMatches, common: impl Fn(&T) -> &Common) -> Result<T, Failure>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = common(&args).config.clone() else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    let config: serde_json::Map<String, serde_json::Value> =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("malformed config {}: {e}", path.display())))?;
    let serde_json::Value::Object(mut map) = serde_json::to_value(&args).map_err(Error::from)? else {
        unreachable!("flag structs serialize to objects")
    };
    for (key, value) in config {
        if !map.contains_key(&key) {
            return Err(Failure::config(format!("unknown config key `{key}`")));
        }
        if m.value_source(&key.replace('-', "_")) != Some(ValueSource::CommandLine) {
            map.insert(key, value);
        }
    }
    serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| Failure::config(format!("malformed config {}: {e}", path.display())))
}

fn resolve_seed(common: &Common) -> Result<u64, Failure> {
    let seed = match common.seed {
        Some(s) => s,
        None => match std::env::var("GEOFOREST_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| Failure::config(format!("GEOFOREST_SEED is not an unsigned integer: {v:?}")))?,
            Err(_) => rand::random(),
        },
    };
    eprintln!("seed: {seed}");
    Ok(seed)
}

fn out_dir(common: &Common) -> Result<&Path, Failure> {
    common
        .out
        .as_deref()
        .ok_or_else(|| Failure::config("missing output path (--out)"))
}

fn run_report<R, F>(common: &Common, out: &Path, f: F) -> Result<(), Failure>
where
    R: Report + Send,
    F: FnOnce() -> Result<R, Error> + Send,
{
    let report = with_threads(common.threads, f)??;
    for path in write_report(&report, out)? {
        eprintln!("wrote {}", path.display());
    }
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &report.summary()["metrics"]).map_err(Error::from)?;
    writeln!(stdout).map_err(Error::from)?;
    Ok(())
}

fn closed_forms(a: &ClosedFormsArgs) -> Result<(), Failure> {
    let x = a.a;
    let s = &a.substrate;
    let mut rows: Vec<(&'static str, f64)> = vec![("rho", analytics::rho(x))];
    match s.substrate {
        SubstrateKind::Bernoulli => {
            let plus = analytics::mm1_params(s.p_plus, x, Side::Plus)?;
            let minus = analytics::mm1_params(s.p_minus, x, Side::Minus)?;
            let (slope, best) = analytics::bernoulli_optimum(s.p_minus, s.p_plus)?;
            rows.extend([
                ("delta_plus", plus.delta),
                ("gamma_plus", plus.gamma),
                ("p_max_zero_plus", analytics::prob_max_zero(&plus)),
                ("delta_minus", minus.delta),
                ("gamma_minus", minus.gamma),
                ("p_max_zero_minus", analytics::prob_max_zero(&minus)),
                ("root_prob", analytics::bernoulli_root_prob(x, s.p_minus, s.p_plus)?),
                ("optimal_slope", slope),
                ("optimal_root_prob", best),
            ]);
        }
        SubstrateKind::Periodic => {
            let r = analytics::rho(x);
            rows.extend([
                ("alpha_plus", analytics::periodic_alpha(s.k_plus, r, Side::Plus)?),
                ("alpha_minus", analytics::periodic_alpha(s.k_minus, r, Side::Minus)?),
                ("root_prob", analytics::periodic_root_prob(x, s.k_plus, s.k_minus)?),
            ]);
        }
        SubstrateKind::FiniteRooted => rows.extend([
            ("finite_prob", analytics::finite_rooted_finite_prob(s.m)?),
            ("direction_prob", analytics::finite_rooted_direction_prob(x, s.m)?),
        ]),
        SubstrateKind::SingleCorner => rows.push(("root_prob", 1.0)),
        SubstrateKind::FlatDiagonal => rows.push(("conjectured_height_plateau", exp::CONJECTURED_PLATEAU)),
        SubstrateKind::Weighted => rows.extend([
            ("root_prob", analytics::weighted_root_prob(x, a.mu_minus, a.mu_plus)?),
            ("root_prob_bound", analytics::weighted_bound(a.mu_minus, a.mu_plus)),
        ]),
    }
    #[derive(Serialize)]
    struct Row {
        quantity: &'static str,
        value: f64,
    }
    let table = |out: &mut dyn Write| write_rows(out, rows.iter().map(|&(quantity, value)| Row { quantity, value }));
    table(&mut io::stdout().lock())?;
    if let Some(dir) = &a.common.out {
        std::fs::create_dir_all(dir).map_err(Error::from)?;
        let mut f = std::fs::File::create(dir.join("closed-forms.csv")).map_err(Error::from)?;
        table(&mut f)?;
        let summary: serde_json::Map<String, serde_json::Value> =
            rows.iter().map(|&(k, v)| (k.to_string(), serde_json::json!(v))).collect();
        let json = serde_json::json!({ "experiment": "closed-forms", "config": a, "metrics": summary });
        std::fs::write(dir.join("closed-forms.json"), serde_json::to_string_pretty(&json).map_err(Error::from)? + "\n")
            .map_err(Error::from)?;
    }
    Ok(())
}
