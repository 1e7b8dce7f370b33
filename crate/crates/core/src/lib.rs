//! Bayesian inference for latent binary spatial fields on areal units.
//!
//! The latent field gets either a mixture of directed graphical models
//! (spanning-tree, rooted, or acyclic-orientation DAG classes compatible with
//! the neighborhood graph), an exact Ising-type Markov random field, or its
//! pseudo-likelihood approximation. Observations are per-unit Bernoulli
//! ratings with label-ordered noise rates.

pub mod dag;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod model;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
