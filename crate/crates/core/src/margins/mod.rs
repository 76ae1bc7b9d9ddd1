//! Univariate peaks-over-threshold modelling.

mod ecdf;
mod gpd;
mod marginal;
mod threshold;
mod transform;

pub use ecdf::EmpiricalCdf;
pub use gpd::{fit_gpd_mle, gpd_loglik, GpdFit, GpdParams, MIN_EXCEEDANCES};
pub use marginal::{fit_marginal_model, sample_digest, MarginalModel, MarginalSummary, MIN_MARGINAL_SAMPLE};
pub use threshold::{
    anderson_darling, bootstrap_gof_pvalue, default_candidate_quantiles, forward_stop,
    select_threshold_forward_stop, GofResult, ThresholdSearch, ThresholdSelectionResult,
    MIN_BOOTSTRAP_REPLICATES,
};
pub use transform::MarginTransform;
