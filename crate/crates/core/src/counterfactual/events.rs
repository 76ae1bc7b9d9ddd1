use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::{MarginTransform, MarginalModel};

/// `X^i_t > threshold` for the cause variable `i` (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauseEvent {
    pub variable: usize,
    pub threshold: f64,
}

impl CauseEvent {
    /// Uses the marginal's GPD threshold as the cause threshold.
    pub fn from_marginal(variable: usize, marginal: &MarginalModel) -> Self {
        Self {
            variable,
            threshold: marginal.threshold(),
        }
    }

    pub fn occurs(&self, slice: &[f64]) -> bool {
        slice[self.variable] > self.threshold
    }
}

/// Weighted impact `sum_c w_c H(F(x_c))` over the next `horizon` slices.
///
/// Weights are time-major: coordinate `(l - 1) * d + j` is variable `j` at
/// step `l`. With `transform = None` the impact is the raw `w^T x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactEvent {
    pub horizon: usize,
    pub weights: Vec<f64>,
    pub impact_threshold: f64,
    pub transform: Option<MarginTransform>,
    pub include_cause: bool,
}

impl ImpactEvent {
    /// Uniform weights (over admissible coordinates).
    pub fn uniform(horizon: usize, d: usize, cause: usize, include_cause: bool, transform: Option<MarginTransform>, v: f64) -> Self {
        let mask = admissible_mask(horizon, d, cause, include_cause);
        let count = mask.iter().filter(|&&m| m).count() as f64;
        let weights = mask.iter().map(|&m| if m { 1.0 / count } else { 0.0 }).collect();
        Self {
            horizon,
            weights,
            impact_threshold: v,
            transform,
            include_cause,
        }
    }

    pub fn with_threshold(&self, v: f64) -> Self {
        Self {
            impact_threshold: v,
            ..self.clone()
        }
    }

    pub fn validate(&self, d: usize, cause: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Precondition("impact horizon must be at least 1".into()));
        }
        if self.weights.len() != self.horizon * d {
            return Err(Error::Precondition(format!(
                "{} weights for horizon {} and {d} variables",
                self.weights.len(),
                self.horizon
            )));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::Precondition("weights must be finite and nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Precondition(format!("weights sum to {total}, expected 1")));
        }
        if !self.include_cause {
            let mask = admissible_mask(self.horizon, d, cause, false);
            if self.weights.iter().zip(&mask).any(|(&w, &m)| !m && w != 0.0) {
                return Err(Error::Precondition("cause coordinates carry weight while excluded".into()));
            }
        }
        if !self.impact_threshold.is_finite() {
            return Err(Error::Precondition("impact threshold must be finite".into()));
        }
        Ok(())
    }
}

/// `true` for coordinates that may carry weight.
pub fn admissible_mask(horizon: usize, d: usize, cause: usize, include_cause: bool) -> Vec<bool> {
    (0..horizon * d).map(|c| include_cause || c % d != cause).collect()
}

/// `H(F_j(x))` with the level kept strictly inside (0, 1).
pub(crate) fn transformed_coordinate(x: f64, marginal: &MarginalModel, transform: &MarginTransform) -> Result<f64> {
    let u = marginal.pit_forward(x).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    transform.apply(u)
}

/// Per-coordinate values entering the impact sum for one future block.
pub fn coordinate_values(future: &[f64], transform: Option<&MarginTransform>, marginals: &[MarginalModel]) -> Result<Vec<f64>> {
    let d = marginals.len();
    future
        .iter()
        .enumerate()
        .map(|(c, &x)| match transform {
            None => Ok(x),
            Some(t) => transformed_coordinate(x, &marginals[c % d], t),
        })
        .collect()
}

/// Impact of a future block (`horizon * d` data values, time-major).
pub fn impact_value(future: &[f64], event: &ImpactEvent, marginals: &[MarginalModel]) -> Result<f64> {
    if future.len() != event.weights.len() {
        return Err(Error::Precondition(format!(
            "future block of length {} for {} weights",
            future.len(),
            event.weights.len()
        )));
    }
    let d = marginals.len();
    let mut total = 0.0;
    for (c, (&x, &w)) in future.iter().zip(&event.weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let value = match &event.transform {
            None => x,
            Some(t) => transformed_coordinate(x, &marginals[c % d], t)?,
        };
        total += w * value;
    }
    Ok(total)
}

/// `sum_c w_c H(q0_c)`, the level above which the tail approximation applies.
pub fn impact_anchor(event: &ImpactEvent, marginals: &[MarginalModel]) -> Result<f64> {
    let t = event
        .transform
        .as_ref()
        .ok_or_else(|| Error::Precondition("tail approximation needs a transformed impact".into()))?;
    let d = marginals.len();
    let mut total = 0.0;
    for (c, &w) in event.weights.iter().enumerate() {
        if w != 0.0 {
            total += w * t.apply(marginals[c % d].gpd.threshold_quantile)?;
        }
    }
    Ok(total)
}
