//! Maximization of probabilities of causation over the weight simplex.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counterfactual::{probabilities_of_causation, Estimator, WorldImpacts};
use crate::error::{Error, Result};
use crate::numerics::{nelder_mead, NelderMeadOptions};
use crate::rng::{child_seed, substream};

/// Euclidean projection onto `{w >= 0, sum w = 1}` (sort-based algorithm).
pub fn project_to_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|&xi| (xi - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegSpec {
    pub norm: Norm,
    pub lambda: f64,
}

impl Default for RegSpec {
    fn default() -> Self {
        Self {
            norm: Norm::L1,
            lambda: 0.0,
        }
    }
}

impl RegSpec {
    pub fn penalty(&self, w: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        let norm = match self.norm {
            Norm::L1 => w.iter().map(|x| x.abs()).sum::<f64>(),
            Norm::L2 => w.iter().map(|x| x * x).sum::<f64>().sqrt(),
        };
        self.lambda * norm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PcKind {
    Pn,
    Ps,
    Pns,
}

impl std::str::FromStr for PcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pn" => Ok(PcKind::Pn),
            "ps" => Ok(PcKind::Ps),
            "pns" => Ok(PcKind::Pns),
            other => Err(Error::Precondition(format!("unknown probability of causation '{other}'"))),
        }
    }
}

/// Anything that scores a full-length weight vector.
pub trait PcModel: Sync {
    fn dimension(&self) -> usize;
    fn pc(&self, weights: &[f64], kind: PcKind) -> Result<f64>;
}

/// World impact table at a fixed impact threshold.
#[derive(Debug, Clone)]
pub struct PcContext<'a> {
    pub impacts: &'a WorldImpacts,
    pub v: f64,
    pub estimator: Estimator,
}

impl PcModel for PcContext<'_> {
    fn dimension(&self) -> usize {
        self.impacts.dimension()
    }

    /// Under the tail estimator, weights whose anchor lies above `v` fall back
    /// to the direct estimate.
    fn pc(&self, weights: &[f64], kind: PcKind) -> Result<f64> {
        let estimator = match (self.estimator, self.impacts.anchor(weights)) {
            (Estimator::TailApprox, Some(a)) if self.v < a => Estimator::Direct,
            (e, _) => e,
        };
        let (p_f, p_cf) = self.impacts.world_probabilities(weights, self.v, estimator)?;
        let pcs = probabilities_of_causation(p_f, p_cf);
        Ok(match kind {
            PcKind::Pn => pcs.pn,
            PcKind::Ps => pcs.ps,
            PcKind::Pns => pcs.pns,
        })
    }
}

/// `PC(w) - lambda ||w||_p`.
pub fn regularized_pc_objective(model: &dyn PcModel, w: &[f64], kind: PcKind, reg: &RegSpec) -> Result<f64> {
    Ok(model.pc(w, kind)? - reg.penalty(w))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub population_factor: usize,
    pub generations: usize,
    pub crossover: f64,
    pub differential_weight: f64,
    pub refine_iterations: usize,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self {
            population_factor: 10,
            generations: 300,
            crossover: 0.9,
            differential_weight: 0.8,
            refine_iterations: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    /// Best value after initialization and after each generation.
    pub trace: Vec<f64>,
}

fn dirichlet_point<R: Rng>(dim: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn finite_or_worst(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// DE/rand/1/bin maximization over `[0, 1]^dim`, with every candidate
/// projected to the simplex before evaluation.
pub fn differential_evolution_stage<F>(objective: &F, dim: usize, config: &OptConfig) -> DeOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if dim == 0 {
        return DeOutcome {
            best: Vec::new(),
            value: finite_or_worst(objective(&[])),
            trace: Vec::new(),
        };
    }
    let np = (config.population_factor * dim).max(4);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|i| {
            if i == 0 {
                vec![1.0 / dim as f64; dim]
            } else {
                dirichlet_point(dim, &mut substream(config.seed, "de-init", i as u64))
            }
        })
        .collect();
    let mut values: Vec<f64> = pop.par_iter().map(|x| finite_or_worst(objective(x))).collect();
    let best_index = |values: &[f64]| {
        (0..values.len()).fold(0, |b, i| if values[i] > values[b] { i } else { b })
    };
    let mut trace = vec![values[best_index(&values)]];

    for g in 0..config.generations {
        let gen_seed = child_seed(config.seed, "de-generation", g as u64);
        let next: Vec<(Vec<f64>, f64)> = (0..np)
            .into_par_iter()
            .map(|i| {
                let mut rng = substream(gen_seed, "de-candidate", i as u64);
                let mut pick = |exclude: &[usize]| loop {
                    let r = rng.random_range(0..np);
                    if !exclude.contains(&r) {
                        return r;
                    }
                };
                let r1 = pick(&[i]);
                let r2 = pick(&[i, r1]);
                let r3 = pick(&[i, r1, r2]);
                let jrand = rng.random_range(0..dim);
                let trial: Vec<f64> = (0..dim)
                    .map(|j| {
                        if j == jrand || rng.random::<f64>() < config.crossover {
                            (pop[r1][j] + config.differential_weight * (pop[r2][j] - pop[r3][j])).clamp(0.0, 1.0)
                        } else {
                            pop[i][j]
                        }
                    })
                    .collect();
                let trial = project_to_simplex(&trial);
                let value = finite_or_worst(objective(&trial));
                if value >= values[i] {
                    (trial, value)
                } else {
                    (pop[i].clone(), values[i])
                }
            })
            .collect();
        (pop, values) = next.into_iter().unzip();
        trace.push(values[best_index(&values)]);
    }
    let b = best_index(&values);
    DeOutcome {
        best: pop[b].clone(),
        value: values[b],
        trace,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    /// Best-to-worst objective spread over the final search simplex.
    pub spread: f64,
    pub iterations: usize,
}

/// Projected Nelder–Mead polish; never returns a point worse than `start`.
pub fn local_refine_stage<F>(objective: &F, start: &[f64], iterations: usize) -> RefineOutcome
where
    F: Fn(&[f64]) -> f64,
{
    let start_value = finite_or_worst(objective(start));
    let unchanged = |spread, iterations| RefineOutcome {
        point: start.to_vec(),
        value: start_value,
        spread,
        iterations,
    };
    if start.len() < 2 || iterations == 0 {
        return unchanged(0.0, 0);
    }
    let steps = vec![0.05; start.len()];
    let options = NelderMeadOptions {
        max_iterations: iterations,
        f_tolerance: 1e-12,
        x_tolerance: 1e-10,
    };
    let result = nelder_mead(
        |w| -finite_or_worst(objective(w)),
        |w: &mut Vec<f64>| *w = project_to_simplex(w),
        start,
        &steps,
        options,
    );
    let point = project_to_simplex(&result.x);
    let value = finite_or_worst(objective(&point));
    if value > start_value {
        RefineOutcome {
            point,
            value,
            spread: result.spread,
            iterations: result.iterations,
        }
    } else {
        unchanged(result.spread, result.iterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub weights: Vec<f64>,
    /// Regularized objective at `weights`.
    pub objective: f64,
    /// Unpenalized probability of causation at `weights`.
    pub pc_value: f64,
    pub pc_kind: PcKind,
    pub entropy: f64,
    pub trace: Vec<f64>,
    pub norm: Norm,
    pub lambda: f64,
    /// Objective at the uniform (admissible) weights.
    pub uniform_objective: f64,
}

fn embed(reduced: &[f64], admissible: &[usize], dim: usize) -> Vec<f64> {
    let mut w = vec![0.0; dim];
    for (&i, &x) in admissible.iter().zip(reduced) {
        w[i] = x;
    }
    w
}

/// DE followed by projected Nelder–Mead over the admissible coordinates
/// (`mask[c] == false` pins coordinate `c` to zero).
pub fn maximize_pc(
    model: &dyn PcModel,
    kind: PcKind,
    reg: &RegSpec,
    mask: Option<&[bool]>,
    config: &OptConfig,
) -> Result<OptResult> {
    let dim = model.dimension();
    let admissible: Vec<usize> = match mask {
        Some(m) if m.len() != dim => {
            return Err(Error::Precondition(format!("mask of length {} for dimension {dim}", m.len())));
        }
        Some(m) => (0..dim).filter(|&c| m[c]).collect(),
        None => (0..dim).collect(),
    };
    if admissible.is_empty() {
        return Err(Error::Precondition("no admissible weight coordinates".into()));
    }
    if !(reg.lambda >= 0.0) {
        return Err(Error::Precondition(format!("lambda {} must be nonnegative", reg.lambda)));
    }
    let full = |reduced: &[f64]| embed(reduced, &admissible, dim);
    // propagate the first estimation error rather than silently scoring it
    model.pc(&full(&vec![1.0 / admissible.len() as f64; admissible.len()]), kind)?;
    let objective = |reduced: &[f64]| {
        regularized_pc_objective(model, &full(reduced), kind, reg).unwrap_or(f64::NEG_INFINITY)
    };
    let uniform = vec![1.0 / admissible.len() as f64; admissible.len()];
    let uniform_objective = objective(&uniform);
    let de = differential_evolution_stage(&objective, admissible.len(), config);
    let refined = local_refine_stage(&objective, &de.best, config.refine_iterations);
    let value = refined.value;
    let weights = full(&refined.point);
    Ok(OptResult {
        pc_value: model.pc(&weights, kind)?,
        entropy: relative_entropy(&weights),
        weights,
        objective: value,
        pc_kind: kind,
        trace: de.trace,
        norm: reg.norm,
        lambda: reg.lambda,
        uniform_objective,
    })
}

/// `w / max(w)`.
pub fn standardize_weights(w: &[f64]) -> Result<Vec<f64>> {
    let max = w.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok(w.iter().map(|x| x / max).collect())
}

/// `-sum w ln w / ln(dim)`, with `0 ln 0 = 0`.
pub fn relative_entropy(w: &[f64]) -> f64 {
    if w.len() < 2 {
        return 0.0;
    }
    if w[0] > 0.0 && w.iter().all(|&x| x == w[0]) {
        return 1.0;
    }
    let h: f64 = w.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.ln()).sum();
    (h / (w.len() as f64).ln()).clamp(0.0, 1.0)
}
