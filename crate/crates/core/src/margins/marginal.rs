use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ecdf::EmpiricalCdf;
use super::gpd::{fit_gpd_mle, GpdFit, GpdParams};
use super::threshold::{select_on_ecdf, ThresholdSearch, ThresholdSelectionResult};
use crate::error::{Error, Result};

pub const MIN_MARGINAL_SAMPLE: usize = 500;

/// Semiparametric marginal: interpolated empirical cdf below the threshold,
/// GPD tail above it.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalModel {
    pub name: String,
    ecdf: EmpiricalCdf,
    pub gpd: GpdParams,
    pub shape_se: f64,
    pub scale_se: f64,
    /// Present when the threshold came from the automated search.
    pub selection: Option<ThresholdSelectionResult>,
}

/// JSON summary of a marginal; the full sample lives in a sidecar file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalSummary {
    pub name: String,
    pub threshold: f64,
    pub threshold_quantile: f64,
    pub shape: f64,
    pub scale: f64,
    pub shape_se: f64,
    pub scale_se: f64,
    pub n: usize,
    pub sorted_sample_digest: String,
}

impl MarginalModel {
    /// Fits the GPD tail at a fixed threshold quantile, skipping the search.
    pub fn with_threshold_quantile(name: &str, sample: &[f64], quantile: f64) -> Result<Self> {
        let ecdf = checked_ecdf(sample)?;
        if !(quantile > 0.0 && quantile < 1.0) {
            return Err(Error::Precondition(format!("threshold quantile {quantile} outside (0,1)")));
        }
        let threshold = ecdf.quantile(quantile);
        let fit = fit_gpd_mle(ecdf.values_above(threshold), threshold)?;
        Self::assemble(name, ecdf, fit, quantile, None)
    }

    fn assemble(
        name: &str,
        ecdf: EmpiricalCdf,
        fit: GpdFit,
        quantile: f64,
        selection: Option<ThresholdSelectionResult>,
    ) -> Result<Self> {
        Ok(Self {
            name: name.to_string(),
            gpd: fit.params(quantile)?,
            shape_se: fit.shape_se,
            scale_se: fit.scale_se,
            ecdf,
            selection,
        })
    }

    /// Rebuilds a model from its summary and stored sample, checking the digest.
    pub fn from_summary(summary: &MarginalSummary, sample: &[f64]) -> Result<Self> {
        let ecdf = EmpiricalCdf::new(sample)?;
        let digest = sample_digest(ecdf.sorted_sample());
        if digest != summary.sorted_sample_digest {
            return Err(Error::Schema(format!(
                "sample digest mismatch for marginal '{}'",
                summary.name
            )));
        }
        Ok(Self {
            name: summary.name.clone(),
            gpd: GpdParams::new(
                summary.shape,
                summary.scale,
                summary.threshold,
                summary.threshold_quantile,
            )?,
            shape_se: summary.shape_se,
            scale_se: summary.scale_se,
            ecdf,
            selection: None,
        })
    }

    pub fn summary(&self) -> MarginalSummary {
        MarginalSummary {
            name: self.name.clone(),
            threshold: self.gpd.threshold,
            threshold_quantile: self.gpd.threshold_quantile,
            shape: self.gpd.shape,
            scale: self.gpd.scale,
            shape_se: self.shape_se,
            scale_se: self.scale_se,
            n: self.ecdf.len(),
            sorted_sample_digest: sample_digest(self.ecdf.sorted_sample()),
        }
    }

    pub fn sorted_sample(&self) -> &[f64] {
        self.ecdf.sorted_sample()
    }

    pub fn threshold(&self) -> f64 {
        self.gpd.threshold
    }

    /// Probability integral transform into (0, 1); nondecreasing in `x`.
    pub fn pit_forward(&self, x: f64) -> f64 {
        let q0 = self.gpd.threshold_quantile;
        if x <= self.gpd.threshold {
            self.ecdf.cdf(x).min(q0)
        } else {
            q0 + (1.0 - q0) * self.gpd.cdf(x)
        }
    }

    /// Inverse of [`MarginalModel::pit_forward`].
    pub fn pit_inverse(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("PIT level {u} outside (0,1)")));
        }
        let q0 = self.gpd.threshold_quantile;
        if u <= q0 {
            Ok(self.ecdf.quantile(u).min(self.gpd.threshold))
        } else {
            self.gpd.quantile((u - q0) / (1.0 - q0))
        }
    }
}

fn checked_ecdf(sample: &[f64]) -> Result<EmpiricalCdf> {
    if sample.len() < MIN_MARGINAL_SAMPLE {
        return Err(Error::InsufficientData(format!(
            "marginal sample of {} points, at least {MIN_MARGINAL_SAMPLE} required",
            sample.len()
        )));
    }
    EmpiricalCdf::new(sample)
}

/// Threshold search followed by the GPD fit at the chosen threshold.
pub fn fit_marginal_model(name: &str, sample: &[f64], search: &ThresholdSearch) -> Result<MarginalModel> {
    let ecdf = checked_ecdf(sample)?;
    let selection = select_on_ecdf(&ecdf, search)?;
    let threshold = selection.threshold();
    let quantile = selection.quantile();
    let fit = fit_gpd_mle(ecdf.values_above(threshold), threshold)?;
    MarginalModel::assemble(name, ecdf, fit, quantile, Some(selection))
}

/// Hex SHA-256 of the little-endian bytes of a sorted sample.
pub fn sample_digest(sorted: &[f64]) -> String {
    let mut hasher = Sha256::new();
    for x in sorted {
        hasher.update(x.to_le_bytes());
    }
    hex::encode(hasher.finalize())
}
