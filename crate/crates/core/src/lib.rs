//! Collision-risk estimation for rectangular vehicle footprints.
//!
//! The instantaneous probability that a target's footprint overlaps the ego
//! footprint is computed with Gauss-Legendre cubature over the ego rectangle,
//! turned into a hazard rate, and integrated over the horizon with
//! Gauss-Legendre quadrature under a non-homogeneous Poisson model. The crate
//! also carries the baseline estimators, a dense Monte Carlo oracle and the
//! scenario format used to benchmark them.

pub mod baselines;
pub mod error;
pub mod geometry;
pub mod glr;
pub mod oracle;
pub mod probability;
pub mod quadrature;
pub mod scenario;
pub mod trajectory;

pub use error::{Error, Result};
