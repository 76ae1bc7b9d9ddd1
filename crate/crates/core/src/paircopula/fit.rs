use serde::{Deserialize, Serialize};

use super::family::{CopulaFamily, PairCopula, Rotation};
use super::tau::{kendall_tau_b, theta_from_tau};
use crate::error::{Error, Result};
use crate::numerics::{brent_minimize, normal_quantile};
use crate::rng::{open_uniform, substream};

/// Maximum-likelihood pair fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairFit {
    pub copula: PairCopula,
    pub loglik: f64,
    pub n: usize,
}

impl PairFit {
    pub fn aic(&self) -> f64 {
        -2.0 * self.loglik + 2.0 * self.copula.parameter_count() as f64
    }

    pub fn bic(&self) -> f64 {
        -2.0 * self.loglik + (self.n as f64).ln() * self.copula.parameter_count() as f64
    }

    pub fn criterion(&self, c: FitCriterion) -> f64 {
        match c {
            FitCriterion::Aic => self.aic(),
            FitCriterion::Bic => self.bic(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FitCriterion {
    #[default]
    Aic,
    Bic,
}

fn check_pseudo_obs(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::Precondition(format!(
            "pseudo-observation lengths differ ({} vs {})",
            u.len(),
            v.len()
        )));
    }
    if u.iter().chain(v).any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain("pseudo-observations must lie in (0,1)".into()));
    }
    Ok(())
}

/// Sum of log densities over the sample.
pub(crate) fn pair_loglik(pc: &PairCopula, u: &[f64], v: &[f64]) -> f64 {
    if pc.is_independence() {
        return 0.0;
    }
    u.iter().zip(v).map(|(&a, &b)| pc.log_pdf(a, b)).sum()
}

/// Kendall's tau the unrotated family must reproduce for this rotation.
fn family_tau_target(tau: f64, rotation: Rotation) -> f64 {
    if rotation.is_negative() {
        -tau
    } else {
        tau
    }
}

/// Maps an unbounded search coordinate to the parameter, and back.
fn to_theta(family: CopulaFamily, negative: bool, s: f64) -> f64 {
    match family {
        CopulaFamily::Gumbel | CopulaFamily::Joe => 1.0 + s.exp(),
        CopulaFamily::Frank if negative => -s.exp(),
        _ => s.exp(),
    }
}

fn to_coord(family: CopulaFamily, theta: f64) -> f64 {
    match family {
        CopulaFamily::Gumbel | CopulaFamily::Joe => (theta - 1.0).ln(),
        _ => theta.abs().ln(),
    }
}

fn fit_with_tau(u: &[f64], v: &[f64], family: CopulaFamily, rotation: Rotation, tau: f64) -> Result<PairFit> {
    let n = u.len();
    if family == CopulaFamily::Independence {
        return Ok(PairFit {
            copula: PairCopula::independence(),
            loglik: 0.0,
            n,
        });
    }
    // validates the family/rotation combination
    let (lo, hi) = family.search_bounds();
    PairCopula::new(family, rotation, hi)?;
    let target = family_tau_target(tau, rotation);
    let negative = family == CopulaFamily::Frank && target < 0.0;
    let start = theta_from_tau(target, family)
        .ok()
        .map(|t| t.abs().clamp(lo, hi))
        .map(|t| if negative { -t } else { t });

    let nll = |s: f64| {
        let theta = to_theta(family, negative, s);
        let pc = PairCopula {
            family,
            rotation,
            theta,
        };
        let ll = pair_loglik(&pc, u, v);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let (clo, chi) = (to_coord(family, lo), to_coord(family, hi));
    let (s_opt, f_opt, _) = brent_minimize(nll, clo, chi, 1e-10, 200);
    let mut best = (s_opt, f_opt);
    if let Some(t0) = start {
        let s0 = to_coord(family, t0);
        let f0 = nll(s0);
        if f0 < best.1 {
            best = (s0, f0);
        }
    }
    if !best.1.is_finite() {
        return Err(Error::ConvergenceFailure(format!(
            "{family} likelihood not finite anywhere in the search interval"
        )));
    }
    Ok(PairFit {
        copula: PairCopula::new(family, rotation, to_theta(family, negative, best.0))?,
        loglik: -best.1,
        n,
    })
}

/// Maximum-likelihood fit of one family and rotation, started at the
/// Kendall's tau inversion.
pub fn fit_pair(u: &[f64], v: &[f64], family: CopulaFamily, rotation: Rotation) -> Result<PairFit> {
    check_pseudo_obs(u, v)?;
    let tau = if family == CopulaFamily::Independence {
        0.0
    } else {
        kendall_tau_b(u, v)?
    };
    fit_with_tau(u, v, family, rotation, tau)
}

/// Outcome of the Kendall's tau independence test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub tau: f64,
    pub statistic: f64,
    pub critical_value: f64,
    pub dependent: bool,
}

/// Two-sided asymptotic test of `tau = 0`:
/// `T = |tau| * sqrt(9 n (n - 1) / (2 (2 n + 5)))` against `z_{1 - level/2}`.
pub fn independence_test(u: &[f64], v: &[f64], level: f64) -> Result<IndependenceTest> {
    if u.len() < 10 {
        return Err(Error::Precondition(format!(
            "independence test needs at least 10 pairs, got {}",
            u.len()
        )));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Precondition(format!("test level {level} outside (0,1)")));
    }
    let tau = kendall_tau_b(u, v)?;
    let n = u.len() as f64;
    let statistic = tau.abs() * (9.0 * n * (n - 1.0) / (2.0 * (2.0 * n + 5.0))).sqrt();
    let critical_value = normal_quantile(1.0 - level / 2.0);
    Ok(IndependenceTest {
        tau,
        statistic,
        critical_value,
        dependent: statistic > critical_value,
    })
}

/// Candidate set and criterion for [`select_pair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub candidates: Vec<(CopulaFamily, Rotation)>,
    pub criterion: FitCriterion,
    /// Level of the preliminary independence test; `None` skips the test.
    pub independence_level: Option<f64>,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        Self {
            candidates: CopulaFamily::ALL
                .iter()
                .flat_map(|&f| f.rotations().iter().map(move |&r| (f, r)))
                .collect(),
            criterion: FitCriterion::Aic,
            independence_level: Some(0.05),
        }
    }
}

fn sign_feasible(family: CopulaFamily, rotation: Rotation, tau: f64) -> bool {
    match family {
        CopulaFamily::Independence | CopulaFamily::Frank => true,
        _ => family_tau_target(tau, rotation) > 0.0,
    }
}

/// Independence when the test does not reject; otherwise the candidate with
/// the smallest information criterion (first listed wins ties).
pub fn select_pair(u: &[f64], v: &[f64], options: &SelectionOptions) -> Result<PairFit> {
    check_pseudo_obs(u, v)?;
    let independent = PairFit {
        copula: PairCopula::independence(),
        loglik: 0.0,
        n: u.len(),
    };
    let tau = match options.independence_level {
        Some(level) => {
            let test = independence_test(u, v, level)?;
            if !test.dependent {
                return Ok(independent);
            }
            test.tau
        }
        None => kendall_tau_b(u, v)?,
    };
    let mut best: Option<PairFit> = None;
    for &(family, rotation) in &options.candidates {
        if !sign_feasible(family, rotation, tau) {
            continue;
        }
        let fit = fit_with_tau(u, v, family, rotation, tau)?;
        let better = best
            .as_ref()
            .is_none_or(|b| fit.criterion(options.criterion) < b.criterion(options.criterion));
        if better {
            best = Some(fit);
        }
    }
    Ok(best.unwrap_or(independent))
}

/// `n` draws by the conditional method: `(w1, hinv(w2 | w1))`.
pub fn sample_pair(n: usize, pc: &PairCopula, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = substream(seed, "sample-pair", 0);
    (0..n)
        .map(|_| {
            let w1 = open_uniform(&mut rng);
            let w2 = open_uniform(&mut rng);
            (w1, pc.hinv_given_first(w2, w1))
        })
        .collect()
}
