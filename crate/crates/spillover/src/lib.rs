//! Design-based analysis of randomized experiments under network
//! interference.
//!
//! The crate covers the full loop of such an experiment:
//!
//! - [`netgraph`]: the interference network (small-world generation, tie
//!   perturbation, BFS, file round-trips);
//! - [`design`]: assignment designs (complete, Bernoulli, enumerated
//!   support, ε-net graph-cluster randomization, two-stage saturation);
//! - [`exposure`]: exposure mappings and exact or Monte Carlo individual
//!   and joint exposure probabilities;
//! - [`outcomes`]: dilated-effects potential outcome tables and observed
//!   outcome realization;
//! - [`estimators`]: Horvitz-Thompson and Hajek contrasts with
//!   conservative, constant-effects, and linearized variances;
//! - [`hierarchical`]: direct/indirect/total/overall marginal effects for
//!   two-stage designs.

pub mod design;
pub mod error;
pub mod estimators;
pub mod exposure;
pub mod hierarchical;
pub mod netgraph;
pub mod outcomes;
pub mod stats;

#[cfg(test)]
pub(crate) mod fixtures;

pub use error::{Error, Result};
