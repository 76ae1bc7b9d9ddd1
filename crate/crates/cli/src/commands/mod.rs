pub mod causation;
pub mod diagnose;
pub mod fit;
pub mod optimize;
pub mod simulate;

use eep_core::artifact::{LoadedModel, ModelArtifact};
use eep_core::counterfactual::{
    generate_counterfactual_samples, split_worlds, CauseEvent, ImpactEvent, WorldImpacts,
};
use eep_core::rng::child_seed;
use eep_core::Error;

use crate::config::{CommandKind, RunConfig};
use crate::error::{CliError, CliResult, StageContext};

/// A loaded model plus the cause position, checked against the config.
pub(crate) struct Setup {
    pub model: LoadedModel,
    pub cause: usize,
}

pub(crate) fn load_for_causation(cfg: &RunConfig, command: CommandKind) -> CliResult<Setup> {
    cfg.validate(command)?;
    let model = ModelArtifact::load(&cfg.model_dir()).stage("artifact")?;
    let name = cfg.cause_variable.as_deref().expect("validated");
    let cause = model
        .artifact
        .variables
        .iter()
        .position(|v| v == name)
        .ok_or_else(|| CliError::Config(format!("cause column '{name}' not in the fitted model")))?;
    let p = model.artifact.vine.p();
    if cfg.horizon > p {
        return Err(CliError::Stage {
            stage: "counterfactual",
            source: Error::HorizonExceedsOrder {
                horizon: cfg.horizon,
                order: p,
            },
        });
    }
    Ok(Setup { model, cause })
}

impl Setup {
    pub fn d(&self) -> usize {
        self.model.artifact.variables.len()
    }

    pub fn cause_event(&self) -> CauseEvent {
        CauseEvent::from_marginal(self.cause, &self.model.marginals[self.cause])
    }

    /// Uniform-weight impact event at threshold `v`.
    pub fn event(&self, cfg: &RunConfig, include_cause: bool, v: f64) -> ImpactEvent {
        ImpactEvent::uniform(cfg.horizon, self.d(), self.cause, include_cause, Some(cfg.transform), v)
    }

    pub fn empirical(&self, event: &ImpactEvent) -> CliResult<WorldImpacts> {
        let split = split_worlds(&self.model.series, &self.cause_event(), event.horizon).stage("counterfactual")?;
        WorldImpacts::from_data(&self.model.series, &split, event, &self.model.marginals).stage("counterfactual")
    }

    /// Synthetic worlds; the same seed gives the same worlds in every command.
    pub fn synthetic(&self, cfg: &RunConfig, event: &ImpactEvent, seed: u64) -> CliResult<WorldImpacts> {
        let stream = child_seed(seed, "synthetic-worlds", 0);
        let samples = generate_counterfactual_samples(
            &self.model.artifact.vine,
            &self.model.marginals,
            &self.model.series,
            &self.cause_event(),
            event.horizon,
            cfg.n_synthetic,
            stream,
        )
        .stage("counterfactual")?;
        WorldImpacts::from_samples(&samples.factual, &samples.counterfactual, event, &self.model.marginals, stream)
            .stage("counterfactual")
    }
}

/// The single impact threshold: explicit, or the transform of the impact
/// quantile.
pub(crate) fn impact_threshold(cfg: &RunConfig) -> CliResult<f64> {
    match cfg.impact_threshold {
        Some(v) => Ok(v),
        None => cfg.transform.apply(cfg.impact_quantile).stage("counterfactual"),
    }
}

/// The configured grid, or 20 transformed levels from the impact quantile
/// to 0.99.
pub(crate) fn v_grid(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    if !cfg.v_grid.is_empty() {
        return Ok(cfg.v_grid.clone());
    }
    let (lo, hi) = (cfg.impact_quantile, 0.99f64.max(cfg.impact_quantile));
    (0..20)
        .map(|i| cfg.transform.apply(lo + (hi - lo) * i as f64 / 19.0))
        .collect::<eep_core::Result<Vec<f64>>>()
        .stage("counterfactual")
}
