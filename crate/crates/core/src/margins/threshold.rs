//! Automated threshold choice: Anderson–Darling goodness of fit with
//! parametric-bootstrap p-values, combined across ordered candidate
//! thresholds by the ForwardStop rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ecdf::EmpiricalCdf;
use super::gpd::{fit_gpd_mle, GpdParams};
use crate::error::{Error, Result};
use crate::rng::{child_seed, open_uniform, substream};

pub const MIN_BOOTSTRAP_REPLICATES: usize = 100;

/// Anderson–Darling statistic of `exceedances` against a GPD tail.
pub fn anderson_darling(exceedances: &[f64], gpd: &GpdParams) -> f64 {
    let mut x = exceedances.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let nf = n as f64;
    let floor = 1e-300;
    let mut acc = 0.0;
    for i in 0..n {
        let cdf_i = gpd.cdf(x[i]).max(floor);
        let surv_rev = gpd.survival(x[n - 1 - i]).max(floor);
        acc += (2 * i + 1) as f64 * (cdf_i.ln() + surv_rev.ln());
    }
    -nf - acc / nf
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GofResult {
    pub statistic: f64,
    pub p_value: f64,
    pub replicates_used: usize,
}

/// Parametric-bootstrap p-value of the Anderson–Darling test for a GPD tail.
///
/// Each replicate simulates a sample of the same size from the fitted tail,
/// refits, and recomputes the statistic; the p-value is the fraction of
/// replicate statistics exceeding the observed one. Replicates whose refit
/// fails are discarded, and more than 20% failures is an error.
pub fn bootstrap_gof_pvalue(
    exceedances: &[f64],
    threshold: f64,
    replicates: usize,
    seed: u64,
) -> Result<GofResult> {
    if replicates < MIN_BOOTSTRAP_REPLICATES {
        return Err(Error::Precondition(format!(
            "bootstrap needs at least {MIN_BOOTSTRAP_REPLICATES} replicates, got {replicates}"
        )));
    }
    let fit = fit_gpd_mle(exceedances, threshold)?;
    let fitted = fit.params(0.5)?;
    let observed = anderson_darling(exceedances, &fitted);
    let n = exceedances.len();

    let stats: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(seed, "gof-bootstrap", r as u64);
            let sample: Vec<f64> = (0..n)
                .map(|_| {
                    let x = fitted.quantile(open_uniform(&mut rng)).unwrap_or(threshold);
                    x.max(threshold.next_up())
                })
                .collect();
            let refit = fit_gpd_mle(&sample, threshold).ok()?;
            let params = refit.params(0.5).ok()?;
            Some(anderson_darling(&sample, &params))
        })
        .collect();
    let ok: Vec<f64> = stats.into_iter().flatten().collect();
    if (ok.len() as f64) < 0.8 * replicates as f64 {
        return Err(Error::ConvergenceFailure(format!(
            "{} of {replicates} bootstrap refits failed",
            replicates - ok.len()
        )));
    }
    let exceed = ok.iter().filter(|&&s| s > observed).count();
    Ok(GofResult {
        statistic: observed,
        p_value: exceed as f64 / ok.len() as f64,
        replicates_used: ok.len(),
    })
}

/// ForwardStop: the largest `k` with `mean(-ln(1 - p_i), i <= k) <= alpha`,
/// or 0 when no prefix qualifies.
pub fn forward_stop(p_values: &[f64], alpha: f64) -> usize {
    let mut total = 0.0;
    let mut rejected = 0;
    for (i, &p) in p_values.iter().enumerate() {
        total += -(-p.clamp(0.0, 1.0)).ln_1p();
        if total / (i + 1) as f64 <= alpha {
            rejected = i + 1;
        }
    }
    rejected
}

/// Parameters of the sequential threshold search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSearch {
    /// Ascending candidate probability levels in (0, 1).
    pub quantiles: Vec<f64>,
    pub alpha: f64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for ThresholdSearch {
    fn default() -> Self {
        Self {
            quantiles: default_candidate_quantiles(),
            alpha: 0.05,
            replicates: 500,
            seed: 0,
        }
    }
}

/// 0.80, 0.82, ..., 0.98.
pub fn default_candidate_quantiles() -> Vec<f64> {
    (0..10).map(|i| 0.80 + 0.02 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSelectionResult {
    pub candidates: Vec<f64>,
    pub quantiles: Vec<f64>,
    pub p_values: Vec<f64>,
    pub rejected_count: usize,
    pub chosen_index: usize,
}

impl ThresholdSelectionResult {
    pub fn threshold(&self) -> f64 {
        self.candidates[self.chosen_index]
    }

    pub fn quantile(&self) -> f64 {
        self.quantiles[self.chosen_index]
    }
}

impl ThresholdSearch {
    fn validate(&self) -> Result<()> {
        if self.quantiles.is_empty() {
            return Err(Error::Precondition("no candidate quantiles".into()));
        }
        if self.quantiles.iter().any(|&q| !(q > 0.0 && q < 1.0))
            || self.quantiles.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::Precondition(
                "candidate quantiles must be strictly ascending in (0,1)".into(),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Precondition(format!("alpha {} outside (0,1)", self.alpha)));
        }
        Ok(())
    }
}

pub(crate) fn select_on_ecdf(ecdf: &EmpiricalCdf, search: &ThresholdSearch) -> Result<ThresholdSelectionResult> {
    search.validate()?;
    let candidates: Vec<f64> = search.quantiles.iter().map(|&q| ecdf.quantile(q)).collect();
    if candidates.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InsufficientData(
            "candidate thresholds are not distinct; sample too small or too discrete".into(),
        ));
    }
    let mut p_values = Vec::with_capacity(candidates.len());
    for (i, &threshold) in candidates.iter().enumerate() {
        let exceedances = ecdf.values_above(threshold);
        let seed = child_seed(search.seed, "threshold-candidate", i as u64);
        let gof = bootstrap_gof_pvalue(exceedances, threshold, search.replicates, seed)?;
        p_values.push(gof.p_value);
    }
    let rejected_count = forward_stop(&p_values, search.alpha);
    if rejected_count == candidates.len() {
        return Err(Error::AllThresholdsRejected(candidates.len()));
    }
    Ok(ThresholdSelectionResult {
        candidates,
        quantiles: search.quantiles.clone(),
        p_values,
        rejected_count,
        chosen_index: rejected_count,
    })
}

/// Runs the goodness-of-fit sequence over the candidate thresholds (empirical
/// quantiles of `sample`) and picks the first one not rejected by ForwardStop.
pub fn select_threshold_forward_stop(sample: &[f64], search: &ThresholdSearch) -> Result<ThresholdSelectionResult> {
    let ecdf = EmpiricalCdf::new(sample)?;
    select_on_ecdf(&ecdf, search)
}
