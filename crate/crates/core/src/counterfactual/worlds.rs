use serde::{Deserialize, Serialize};

use super::events::{coordinate_values, impact_anchor, impact_value, CauseEvent, ImpactEvent};
use crate::error::{Error, Result};
use crate::margins::{GpdParams, MarginalModel};

/// Factual (cause occurred) and counterfactual time indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldSplit {
    pub factual: Vec<usize>,
    pub counterfactual: Vec<usize>,
    pub horizon: usize,
}

impl WorldSplit {
    pub fn n_f(&self) -> usize {
        self.factual.len()
    }

    pub fn n_cf(&self) -> usize {
        self.counterfactual.len()
    }

    pub fn indices(&self, side: World) -> &[usize] {
        match side {
            World::Factual => &self.factual,
            World::Counterfactual => &self.counterfactual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum World {
    Factual,
    Counterfactual,
}

/// Splits `t = 0 .. N - k` by whether the cause exceeds its threshold at `t`.
pub fn split_worlds(data: &[Vec<f64>], cause: &CauseEvent, horizon: usize) -> Result<WorldSplit> {
    if horizon == 0 || data.len() <= horizon {
        return Err(Error::InsufficientData(format!(
            "{} observations leave no origins for horizon {horizon}",
            data.len()
        )));
    }
    if data.iter().any(|r| cause.variable >= r.len()) {
        return Err(Error::Precondition(format!("cause variable {} outside the data", cause.variable)));
    }
    let (factual, counterfactual): (Vec<usize>, Vec<usize>) =
        (0..data.len() - horizon).partition(|&t| cause.occurs(&data[t]));
    if factual.is_empty() {
        return Err(Error::EmptyWorld {
            side: "factual",
            threshold: cause.threshold,
        });
    }
    if counterfactual.is_empty() {
        return Err(Error::EmptyWorld {
            side: "counterfactual",
            threshold: cause.threshold,
        });
    }
    Ok(WorldSplit {
        factual,
        counterfactual,
        horizon,
    })
}

/// The `horizon * d` values following origin `t`, time-major.
pub fn future_block(data: &[Vec<f64>], t: usize, horizon: usize) -> Vec<f64> {
    data[t + 1..=t + horizon].iter().flatten().copied().collect()
}

/// Fraction of the side's origins whose following block has impact above `v`.
pub fn empirical_world_probability(
    data: &[Vec<f64>],
    split: &WorldSplit,
    event: &ImpactEvent,
    side: World,
    marginals: &[MarginalModel],
) -> Result<f64> {
    let idx = split.indices(side);
    if idx.is_empty() {
        return Err(Error::EmptyWorld {
            side: match side {
                World::Factual => "factual",
                World::Counterfactual => "counterfactual",
            },
            threshold: f64::NAN,
        });
    }
    let mut hits = 0usize;
    for &t in idx {
        if impact_value(&future_block(data, t, event.horizon), event, marginals)? > event.impact_threshold {
            hits += 1;
        }
    }
    Ok(hits as f64 / idx.len() as f64)
}

/// Probabilities of necessity, sufficiency, and necessity-and-sufficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CausationProbabilities {
    pub pn: f64,
    pub ps: f64,
    pub pns: f64,
    /// A zero denominator forced PN or PS to 0.
    pub degenerate: bool,
}

/// `pn = (1 - p_cf/p_f)+`, `ps = (1 - (1-p_f)/(1-p_cf))+`, `pns = (p_f - p_cf)+`.
pub fn probabilities_of_causation(p_f: f64, p_cf: f64) -> CausationProbabilities {
    let pos = |x: f64| x.max(0.0);
    let mut degenerate = false;
    let pn = if p_f > 0.0 {
        pos(1.0 - p_cf / p_f)
    } else {
        degenerate = true;
        0.0
    };
    let ps = if p_cf < 1.0 {
        pos(1.0 - (1.0 - p_f) / (1.0 - p_cf))
    } else {
        degenerate = true;
        0.0
    };
    CausationProbabilities {
        pn,
        ps,
        pns: pos(p_f - p_cf),
        degenerate,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilitySource {
    Empirical,
    Synthetic,
    TailApprox,
}

impl std::fmt::Display for ProbabilitySource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProbabilitySource::Empirical => "empirical",
            ProbabilitySource::Synthetic => "synthetic",
            ProbabilitySource::TailApprox => "tail_approx",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausationReport {
    pub v: f64,
    pub p_f: f64,
    pub p_cf: f64,
    pub pn: f64,
    pub ps: f64,
    pub pns: f64,
    pub source: ProbabilitySource,
    pub n_f: usize,
    pub n_cf: usize,
    pub seed: Option<u64>,
    pub degenerate: bool,
    /// Observed `p_f < p_cf`, contradicting the monotonicity assumption.
    pub monotonicity_violated: bool,
}

/// `p_anchor * S_GPD(v; anchor, shape, scale)` for `v >= anchor`.
pub fn tail_probability_approx(p_anchor: f64, v: f64, anchor: f64, reference: &GpdParams) -> Result<f64> {
    if v < anchor {
        return Err(Error::AnchorViolation { v, anchor });
    }
    let shifted = GpdParams { threshold: anchor, ..*reference };
    Ok(p_anchor * shifted.survival(v))
}

/// How world probabilities are computed from an impact table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Direct,
    TailApprox,
}

/// Per-origin coordinate values `H(F(x_c))` (or raw `x_c`) for both worlds,
/// so impacts for any weight vector are cheap dot products.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldImpacts {
    pub factual: Vec<Vec<f64>>,
    pub counterfactual: Vec<Vec<f64>>,
    pub source: ProbabilitySource,
    pub seed: Option<u64>,
    /// `H(q0)` per coordinate and the law of `H(U)`, when the transform has one.
    tail: Option<(Vec<f64>, GpdParams)>,
}

fn tail_reference(event: &ImpactEvent, marginals: &[MarginalModel]) -> Result<Option<(Vec<f64>, GpdParams)>> {
    let Some(t) = event.transform.as_ref() else {
        return Ok(None);
    };
    let Some(reference) = t.reference() else {
        return Ok(None);
    };
    let d = marginals.len();
    let anchors = (0..event.weights.len())
        .map(|c| t.apply(marginals[c % d].gpd.threshold_quantile))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Some((anchors, reference)))
}

impl WorldImpacts {
    /// Impact coordinates of the observed future blocks.
    pub fn from_data(data: &[Vec<f64>], split: &WorldSplit, event: &ImpactEvent, marginals: &[MarginalModel]) -> Result<Self> {
        let rows = |idx: &[usize]| -> Result<Vec<Vec<f64>>> {
            idx.iter()
                .map(|&t| coordinate_values(&future_block(data, t, event.horizon), event.transform.as_ref(), marginals))
                .collect()
        };
        Ok(Self {
            factual: rows(&split.factual)?,
            counterfactual: rows(&split.counterfactual)?,
            source: ProbabilitySource::Empirical,
            seed: None,
            tail: tail_reference(event, marginals)?,
        })
    }

    /// Impact coordinates of simulated data-scale future blocks.
    pub fn from_samples(
        factual: &[Vec<f64>],
        counterfactual: &[Vec<f64>],
        event: &ImpactEvent,
        marginals: &[MarginalModel],
        seed: u64,
    ) -> Result<Self> {
        let rows = |blocks: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
            blocks
                .iter()
                .map(|b| coordinate_values(b, event.transform.as_ref(), marginals))
                .collect()
        };
        if factual.is_empty() || counterfactual.is_empty() {
            return Err(Error::EmptyWorld {
                side: if factual.is_empty() { "factual" } else { "counterfactual" },
                threshold: f64::NAN,
            });
        }
        Ok(Self {
            factual: rows(factual)?,
            counterfactual: rows(counterfactual)?,
            source: ProbabilitySource::Synthetic,
            seed: Some(seed),
            tail: tail_reference(event, marginals)?,
        })
    }

    pub fn dimension(&self) -> usize {
        self.factual.first().map_or(0, Vec::len)
    }

    pub fn n_f(&self) -> usize {
        self.factual.len()
    }

    pub fn n_cf(&self) -> usize {
        self.counterfactual.len()
    }

    pub fn rows(&self, side: World) -> &[Vec<f64>] {
        match side {
            World::Factual => &self.factual,
            World::Counterfactual => &self.counterfactual,
        }
    }

    pub fn impacts(&self, side: World, weights: &[f64]) -> Vec<f64> {
        self.rows(side)
            .iter()
            .map(|r| r.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }

    /// Direct (empirical or synthetic) exceedance frequency.
    pub fn probability(&self, side: World, weights: &[f64], v: f64) -> f64 {
        let rows = self.rows(side);
        let hits = rows
            .iter()
            .filter(|r| r.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() > v)
            .count();
        hits as f64 / rows.len() as f64
    }

    /// `sum_c w_c H(q0_c)`, if the impact transform has a GPD law.
    pub fn anchor(&self, weights: &[f64]) -> Option<f64> {
        self.tail
            .as_ref()
            .map(|(a, _)| a.iter().zip(weights).map(|(x, w)| x * w).sum())
    }

    /// `(p_f, p_cf)` under the chosen estimator.
    pub fn world_probabilities(&self, weights: &[f64], v: f64, estimator: Estimator) -> Result<(f64, f64)> {
        match estimator {
            Estimator::Direct => Ok((
                self.probability(World::Factual, weights, v),
                self.probability(World::Counterfactual, weights, v),
            )),
            Estimator::TailApprox => {
                let (anchors, reference) = self
                    .tail
                    .as_ref()
                    .ok_or_else(|| Error::Precondition("tail approximation needs an exponential or GPD transform".into()))?;
                let anchor: f64 = anchors.iter().zip(weights).map(|(x, w)| x * w).sum();
                let pf = self.probability(World::Factual, weights, anchor);
                let pcf = self.probability(World::Counterfactual, weights, anchor);
                Ok((
                    tail_probability_approx(pf, v, anchor, reference)?,
                    tail_probability_approx(pcf, v, anchor, reference)?,
                ))
            }
        }
    }

    pub fn report(&self, weights: &[f64], v: f64, estimator: Estimator) -> Result<CausationReport> {
        let (p_f, p_cf) = self.world_probabilities(weights, v, estimator)?;
        let pcs = probabilities_of_causation(p_f, p_cf);
        Ok(CausationReport {
            v,
            p_f,
            p_cf,
            pn: pcs.pn,
            ps: pcs.ps,
            pns: pcs.pns,
            source: match estimator {
                Estimator::TailApprox => ProbabilitySource::TailApprox,
                Estimator::Direct => self.source,
            },
            n_f: self.n_f(),
            n_cf: self.n_cf(),
            seed: self.seed,
            degenerate: pcs.degenerate,
            monotonicity_violated: p_f < p_cf,
        })
    }
}

/// One report per impact threshold in `v_grid`, weights fixed.
pub fn pc_curve(impacts: &WorldImpacts, weights: &[f64], v_grid: &[f64], estimator: Estimator) -> Result<Vec<CausationReport>> {
    v_grid.iter().map(|&v| impacts.report(weights, v, estimator)).collect()
}

/// Tail approximation of one world's probability directly from data.
pub fn tail_world_probability(
    data: &[Vec<f64>],
    split: &WorldSplit,
    event: &ImpactEvent,
    side: World,
    marginals: &[MarginalModel],
) -> Result<f64> {
    let anchor = impact_anchor(event, marginals)?;
    let reference = event
        .transform
        .as_ref()
        .and_then(|t| t.reference())
        .ok_or_else(|| Error::Precondition("tail approximation needs an exponential or GPD transform".into()))?;
    let at_anchor = empirical_world_probability(data, split, &event.with_threshold(anchor), side, marginals)?;
    tail_probability_approx(at_anchor, event.impact_threshold, anchor, &reference)
}
