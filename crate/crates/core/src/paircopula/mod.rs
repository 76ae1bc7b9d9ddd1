//! Bivariate copula families, Kendall's tau, and pair selection.

mod family;
mod fit;
mod tau;

pub use family::{Conditioning, CopulaFamily, PairCopula, Rotation, CLAMP};
pub use fit::{
    fit_pair, independence_test, sample_pair, select_pair, FitCriterion, IndependenceTest, PairFit,
    SelectionOptions,
};
pub use tau::{kendall_tau, kendall_tau_b, theta_from_tau};
