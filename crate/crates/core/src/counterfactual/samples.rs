use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use super::events::CauseEvent;
use super::worlds::{split_worlds, World};
use crate::error::{Error, Result};
use crate::margins::MarginalModel;
use crate::paircopula::CLAMP;
use crate::rng::substream;
use crate::vine::StationaryVine;

/// Synthetic future blocks (`horizon * d`, data scale, time-major) per world.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterfactualSamples {
    pub factual: Vec<Vec<f64>>,
    pub counterfactual: Vec<Vec<f64>>,
    pub horizon: usize,
    pub seed: u64,
}

/// `n` origins from `pool`: without replacement when the pool is large
/// enough, otherwise every origin in turn plus a random remainder.
fn pick_origins<R: Rng>(pool: &[usize], n: usize, rng: &mut R) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    while n - out.len() >= pool.len() {
        out.extend_from_slice(pool);
    }
    let rest = n - out.len();
    out.extend(sample(rng, pool.len(), rest).into_iter().map(|i| pool[i]));
    out
}

/// Conditions the vine on observed slices from each world and maps the
/// simulated continuations back to the data scale.
pub fn generate_counterfactual_samples(
    vine: &StationaryVine,
    marginals: &[MarginalModel],
    data: &[Vec<f64>],
    cause: &CauseEvent,
    horizon: usize,
    n_per_world: usize,
    seed: u64,
) -> Result<CounterfactualSamples> {
    let d = vine.d();
    if marginals.len() != d {
        return Err(Error::Precondition(format!("{} marginals for a vine over {d} variables", marginals.len())));
    }
    if horizon > vine.p() {
        return Err(Error::HorizonExceedsOrder {
            horizon,
            order: vine.p(),
        });
    }
    let split = split_worlds(data, cause, horizon)?;
    let draw = |side: World, tag: &str| -> Result<Vec<Vec<f64>>> {
        let mut rng = substream(seed, tag, 0);
        let origins = pick_origins(split.indices(side), n_per_world, &mut rng);
        origins
            .par_iter()
            .enumerate()
            .map(|(i, &t)| {
                let slice: Vec<f64> = data[t].iter().zip(marginals).map(|(&x, m)| m.pit_forward(x).clamp(CLAMP, 1.0 - CLAMP)).collect();
                let mut rng = substream(seed, tag, 1 + i as u64);
                let u = vine.simulate_from_prefix(&slice, horizon, &mut rng)?;
                u.iter()
                    .enumerate()
                    .map(|(c, &q)| marginals[c % d].pit_inverse(q))
                    .collect()
            })
            .collect()
    };
    Ok(CounterfactualSamples {
        factual: draw(World::Factual, "cf-factual")?,
        counterfactual: draw(World::Counterfactual, "cf-counterfactual")?,
        horizon,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_picking() {
        let mut rng = substream(1, "t", 0);
        let pool = [3, 5, 7];
        let two = pick_origins(&pool, 2, &mut rng);
        assert_eq!(two.len(), 2);
        assert_ne!(two[0], two[1]);
        let seven = pick_origins(&pool, 7, &mut rng);
        assert_eq!(seven.len(), 7);
        assert_eq!(&seven[..6], &[3, 5, 7, 3, 5, 7]);
    }
}
