//! Random number contracts.
//!
//! Two generators are used, each with a fixed, documented role:
//!
//! * **Lattice weights and substrate noise** come from Philox4x32-10, a
//!   counter-based generator. A weight is a pure function of
//!   `(seed, tag, x1, x2)`, so any window of the infinite lattice can be
//!   materialized in any order and enlarged later without changing the
//!   values already seen.
//! * **Sequential randomness** (walk increments, substrate steps, replica
//!   seeds) comes from ChaCha8 with one stream per replica:
//!   `ChaCha8Rng::seed_from_u64(master)` followed by `set_stream(replica)`.
//!
//! Exponential variates are always produced by inversion, `-ln(U) / rate`,
//! with `U = (k + 1/2) 2^-52` for a uniform 52-bit integer `k`, so `U` lies
//! strictly inside `(0, 1)` and every weight is strictly positive.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

/// The Philox4x32 block function with 10 rounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Philox4x32 {
    key: [u32; 2],
}

impl Philox4x32 {
    pub fn new(seed: u64) -> Self {
        Self::from_key([seed as u32, (seed >> 32) as u32])
    }

    pub fn from_key(key: [u32; 2]) -> Self {
        Self { key }
    }

    #[inline]
    pub fn block(&self, mut ctr: [u32; 4]) -> [u32; 4] {
        let mut key = self.key;
        for round in 0..10 {
            if round > 0 {
                key[0] = key[0].wrapping_add(PHILOX_W0);
                key[1] = key[1].wrapping_add(PHILOX_W1);
            }
            let p0 = u64::from(PHILOX_M0) * u64::from(ctr[0]);
            let p1 = u64::from(PHILOX_M1) * u64::from(ctr[2]);
            let (hi0, lo0) = ((p0 >> 32) as u32, p0 as u32);
            let (hi1, lo1) = ((p1 >> 32) as u32, p1 as u32);
            ctr = [hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0];
        }
        ctr
    }
}

/// Maps 64 random bits to a uniform variate strictly inside `(0, 1)`.
#[inline]
pub fn open01(bits: u64) -> f64 {
    ((bits >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
}

/// Standard exponential by inversion.
#[inline]
pub fn unit_exp(bits: u64) -> f64 {
    -open01(bits).ln()
}

/// Exponential variate of the given rate (intensity) from a sequential source.
#[inline]
pub fn exp_sample<R: RngCore + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    unit_exp(rng.next_u64()) / rate
}

/// Uniform variate in `(0, 1)` from a sequential source.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    open01(rng.next_u64())
}

/// Purpose tags that separate independent fields under one seed.
pub mod tag {
    pub const LATTICE_WEIGHTS: u32 = 0;
    pub const SUBSTRATE_NU: u32 = 1;
    pub const WALK_EDGES: u32 = 2;
    pub const BUSEMANN_BOUNDARY: u32 = 3;
}

/// An infinite i.i.d. field of standard exponentials indexed by lattice
/// coordinates.
#[derive(Clone, Copy, Debug)]
pub struct ExpField {
    philox: Philox4x32,
    tag: u32,
}

impl ExpField {
    pub fn new(seed: u64, tag: u32) -> Self {
        Self {
            philox: Philox4x32::new(seed),
            tag,
        }
    }

    /// Lattice weights with the default tag.
    pub fn lattice(seed: u64) -> Self {
        Self::new(seed, tag::LATTICE_WEIGHTS)
    }

    /// Coordinates are taken modulo 2^32; simulated windows are far smaller.
    #[inline]
    pub fn at(&self, x1: i64, x2: i64) -> f64 {
        let out = self.philox.block([x1 as u32, x2 as u32, self.tag, 0]);
        unit_exp(u64::from(out[0]) | (u64::from(out[1]) << 32))
    }
}

/// The sequential stream for one replica of an experiment.
pub fn replica_rng(master: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replica);
    rng
}

/// A deterministic sub-seed drawn from a sequential stream.
pub fn sub_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.next_u64()
}
