//! Replica scheduling and the Monte Carlo experiments.
//!
//! A kernel receives a [`Replica`] whose seeds depend only on the master
//! seed and the replica id, and results are collected in replica order, so
//! every experiment is reproducible under any thread count.

pub mod experiments;
pub mod report;
pub mod stats;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::error::{invalid, Error, Result};
use crate::lattice::Point;
use crate::rng;
use crate::substrate::{self, Step, Substrate};
use crate::walk::{Certify, StepLaw};

/// One replica of an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Replica {
    pub id: u64,
    master: u64,
}

impl Replica {
    pub fn new(master: u64, id: u64) -> Self {
        Self { id, master }
    }

    /// `K` independent seeds for this replica.
    pub fn seeds<const K: usize>(&self) -> [u64; K] {
        let mut rng = rng::replica_rng(self.master, self.id);
        std::array::from_fn(|_| rng.next_u64())
    }

    /// The sequential stream of this replica.
    pub fn rng(&self) -> rand_chacha::ChaCha8Rng {
        rng::replica_rng(self.master, self.id)
    }
}

/// Master seed of an independent arm of an experiment.
pub fn arm_seed(master: u64, arm: u64) -> u64 {
    rng::replica_rng(master, u64::MAX - arm).next_u64()
}

/// Runs `kernel` on replicas `0..replicas` and returns the outcomes in
/// replica order.
pub fn run_replicas<T, F>(replicas: u64, seed: u64, kernel: F) -> Vec<Result<T>>
where
    T: Send,
    F: Fn(Replica) -> Result<T> + Sync,
{
    (0..replicas).into_par_iter().map(|id| kernel(Replica::new(seed, id))).collect()
}

/// Like [`run_replicas`], failing with the error of the lowest failing id.
pub fn run_replicated<T, F>(replicas: u64, seed: u64, kernel: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(Replica) -> Result<T> + Sync,
{
    if replicas < 1 {
        return Err(invalid("replica count must be at least 1"));
    }
    run_replicas(replicas, seed, kernel)
        .into_iter()
        .enumerate()
        .map(|(id, r)| {
            r.map_err(|e| Error::Replica {
                id: id as u64,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(invalid("thread count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// A substrate family, as named in configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SubstrateSpec {
    Bernoulli { p_minus: f64, p_plus: f64 },
    Periodic { k_plus: u32, k_minus: u32 },
    FiniteRooted { m: u32 },
    /// A vertical ray down to the origin and a horizontal ray from it.
    SingleCorner,
    FlatDiagonal,
}

pub(crate) const MAX_WINDOW: usize = 1 << 24;

impl SubstrateSpec {
    pub fn is_random(&self) -> bool {
        matches!(self, SubstrateSpec::Bernoulli { .. })
    }

    /// The substrate over edges `-window..=window`.
    pub fn generate(&self, window: usize, seed: u64) -> Result<Substrate> {
        match *self {
            SubstrateSpec::Bernoulli { p_minus, p_plus } => substrate::gen_bernoulli(p_minus, p_plus, window, seed),
            SubstrateSpec::Periodic { k_plus, k_minus } => substrate::gen_periodic(k_plus as usize, k_minus as usize, window),
            SubstrateSpec::FiniteRooted { m } => substrate::gen_finite_rooted(m as usize, window),
            SubstrateSpec::SingleCorner => {
                let w = window.max(2);
                Ok(Substrate::from_sides(&vec![Step::Down; w], &vec![Step::Right; w]))
            }
            SubstrateSpec::FlatDiagonal => Ok(substrate::gen_flat_diagonal(window.div_ceil(2))),
        }
    }

    /// The substrate with a window grown until it covers `target`.
    pub fn covering(&self, target: Point, seed: u64) -> Result<Substrate> {
        if let SubstrateSpec::Bernoulli { p_minus, p_plus } = *self {
            return substrate::gen_bernoulli_covering(p_minus, p_plus, target, seed);
        }
        let mut window = 64;
        loop {
            let sub = self.generate(window, seed)?;
            if sub.covers(target) {
                return Ok(sub);
            }
            if window >= MAX_WINDOW {
                return Err(Error::InsufficientWindow(format!("no window up to {MAX_WINDOW} covers {target}")));
            }
            window *= 2;
        }
    }

    /// Corner increment laws `(plus, minus)` when the corners are spaced
    /// i.i.d. on each side.
    pub fn step_laws(&self, a: f64) -> Option<Result<(StepLaw, StepLaw)>> {
        match *self {
            SubstrateSpec::Bernoulli { p_minus, p_plus } => Some(analytics::bernoulli_step_laws(p_minus, p_plus, a)),
            SubstrateSpec::Periodic { k_plus, k_minus } => Some(analytics::periodic_step_laws(k_plus, k_minus, a)),
            _ => None,
        }
    }

    /// How the walk maximum is certified at slope `a`.
    pub fn certify(&self, a: f64) -> Result<Certify> {
        match self {
            SubstrateSpec::FiniteRooted { .. } | SubstrateSpec::SingleCorner => Ok(Certify::Exhaustive),
            SubstrateSpec::FlatDiagonal => {
                let r = analytics::rho(a);
                let drift = 1.0 / r - 1.0 / (1.0 - r);
                if drift >= 0.0 {
                    return Err(invalid(format!("the flat substrate has no asymptotic root at a={a}")));
                }
                Ok(Certify::margin_from_drift(drift, drift))
            }
            _ => {
                let (plus, minus) = self.step_laws(a).unwrap()?;
                Certify::lundberg(&plus, &minus)
            }
        }
    }

    /// Closed form of `P(Z(a) = 0)` where one is known.
    pub fn root_prob(&self, a: f64) -> Option<f64> {
        match *self {
            SubstrateSpec::Bernoulli { p_minus, p_plus } => analytics::bernoulli_root_prob(a, p_minus, p_plus).ok(),
            SubstrateSpec::Periodic { k_plus, k_minus } => analytics::periodic_root_prob(a, k_plus, k_minus).ok(),
            SubstrateSpec::SingleCorner => Some(1.0),
            _ => None,
        }
    }
}
