//! Extreme event propagation across multivariate time series.
//!
//! The pipeline fits semiparametric marginals (empirical body, generalized
//! Pareto tail), a translation-invariant D-vine copula over time-stacked
//! observations, and then estimates and maximizes probabilities of causation
//! between a marginal extreme event and weighted future impact events.

pub mod artifact;
pub mod counterfactual;
pub mod diagnostics;
pub mod error;
pub mod margins;
pub mod numerics;
pub mod optimize;
pub mod paircopula;
pub mod rng;
pub mod vine;

pub use error::{Error, ErrorKind, Result};
