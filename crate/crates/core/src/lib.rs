//! Geodesic forests in exponential last-passage percolation.
//!
//! Weights are i.i.d. Exp(1) on the sites above a down-right substrate path
//! and the last-passage value of a site is built from the corners of the
//! substrate. Every site has a unique geodesic back to a corner, and the
//! geodesics form a forest whose trees are rooted at the corners.
//!
//! - [`lattice`] and [`substrate`]: sites, paths and the substrate families.
//! - [`forest`]: passage times, roots, the asymptotic root of a direction,
//!   tree heights and coalescence of geodesics.
//! - [`walk`]: the dual random walk whose argmax is the root of a direction.
//! - [`analytics`]: closed forms and the joint transform series.
//! - [`harness`]: seeded replicas, statistics and the experiments behind
//!   the `geoforest` command line.

pub mod analytics;
pub mod cli;
pub mod error;
pub mod forest;
pub mod harness;
pub mod lattice;
pub mod rng;
pub mod substrate;
pub mod walk;

pub use error::{Error, Result};
pub use harness::SubstrateSpec;
pub use lattice::Point;
pub use substrate::{Step, Substrate};
pub use walk::StepLaw;
