//! Cause and impact events, factual/counterfactual worlds, and
//! probabilities of causation.

mod events;
mod samples;
mod worlds;

pub use events::{admissible_mask, coordinate_values, impact_anchor, impact_value, CauseEvent, ImpactEvent};
pub use samples::{generate_counterfactual_samples, CounterfactualSamples};
pub use worlds::{
    empirical_world_probability, future_block, pc_curve, probabilities_of_causation, split_worlds,
    tail_probability_approx, tail_world_probability, CausationProbabilities, CausationReport, Estimator,
    ProbabilitySource, World, WorldImpacts, WorldSplit,
};
