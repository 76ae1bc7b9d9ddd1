//! Stationary Markov D-vine copulas over time-stacked observations.

mod blocks;
mod fit;
mod model;

pub use blocks::{build_blocks, BlockMatrix};
pub use fit::{
    class_counts, criteria_from_parts, fit_stationary_vine, information_criteria, mbicv_penalty, path_weight,
    select_cross_section_order, select_markov_order, vine_loglik, InformationCriteria, OrderCriteria, OrderSelection,
    VineCriterion,
};
pub use model::{ClassRecord, StationaryVine, VineRecord, VINE_SCHEMA_VERSION};
