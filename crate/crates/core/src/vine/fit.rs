use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::blocks::{build_blocks, check_pit, BlockMatrix};
use super::model::StationaryVine;
use crate::error::{Error, Result};
use crate::paircopula::{kendall_tau_b, select_pair, PairCopula, SelectionOptions};

/// Greedy maximum-weight Hamiltonian path over `|tau|` between variables.
///
/// Starts from the heaviest edge and repeatedly extends either end by the
/// heaviest edge to an unused variable. Ties go to the lowest variable index
/// (and the tail end before the head end).
pub fn select_cross_section_order(pit: &[Vec<f64>]) -> Result<Vec<usize>> {
    let d = check_pit(pit)?;
    if d == 1 {
        return Ok(vec![0]);
    }
    let cols: Vec<Vec<f64>> = (0..d).map(|j| pit.iter().map(|r| r[j]).collect()).collect();
    let mut w = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in i + 1..d {
            let tau = kendall_tau_b(&cols[i], &cols[j])?.abs();
            w[i][j] = tau;
            w[j][i] = tau;
        }
    }
    let (mut bi, mut bj) = (0, 1);
    for i in 0..d {
        for j in i + 1..d {
            if w[i][j] > w[bi][bj] {
                (bi, bj) = (i, j);
            }
        }
    }
    let mut path = std::collections::VecDeque::from([bi, bj]);
    let mut used = vec![false; d];
    used[bi] = true;
    used[bj] = true;
    while path.len() < d {
        let tail = *path.back().unwrap();
        let head = *path.front().unwrap();
        let mut best: Option<(f64, usize, bool)> = None;
        for v in (0..d).filter(|&v| !used[v]) {
            for (end, at_tail) in [(tail, true), (head, false)] {
                let cand = (w[end][v], v, at_tail);
                let better = match best {
                    None => true,
                    Some((bw, bv, bt)) => cand.0 > bw || (cand.0 == bw && (v < bv || (v == bv && at_tail && !bt))),
                };
                if better {
                    best = Some(cand);
                }
            }
        }
        let (_, v, at_tail) = best.unwrap();
        used[v] = true;
        if at_tail {
            path.push_back(v);
        } else {
            path.push_front(v);
        }
    }
    Ok(path.into_iter().collect())
}

/// Sum of `|tau|` along consecutive variables of `order`.
pub fn path_weight(pit: &[Vec<f64>], order: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for w in order.windows(2) {
        let x: Vec<f64> = pit.iter().map(|r| r[w[0]]).collect();
        let y: Vec<f64> = pit.iter().map(|r| r[w[1]]).collect();
        total += kendall_tau_b(&x, &y)?.abs();
    }
    Ok(total)
}

/// Sequential tree-by-tree estimation with one shared copula per class.
///
/// Each class is fitted on the member edge whose later variable lies in the
/// last slice of the block, giving one observation per block row.
pub fn fit_stationary_vine(
    blocks: &BlockMatrix,
    cross_order: &[usize],
    options: &SelectionOptions,
) -> Result<StationaryVine> {
    let (d, p) = (blocks.d(), blocks.p());
    let mut vine = StationaryVine::independence(d, p, cross_order.to_vec())?;
    let m = vine.m();
    let n = blocks.n_blocks();
    // left[a][row], right[a][row] for the edges of the current tree
    let mut left: Vec<Vec<f64>> = (0..m).map(|a| blocks.rows().map(|r| r[vine.column(a)]).collect()).collect();
    let mut right: Vec<Vec<f64>> = left[1..].to_vec();
    left.pop();

    for t in 1..m {
        let n_classes = vine.classes_in_tree(t);
        let fits: Vec<PairCopula> = (0..n_classes)
            .into_par_iter()
            .map(|c| {
                let a = (m - 1 - t - c) / d * d + c;
                match select_pair(&left[a], &right[a], options) {
                    Ok(fit) => fit.copula,
                    Err(e) => {
                        log::warn!("tree {t} class {c}: pair fit failed ({e}); using independence");
                        PairCopula::independence()
                    }
                }
            })
            .collect();
        for (c, pc) in fits.into_iter().enumerate() {
            vine.set_class(t, c, pc);
        }
        if t + 1 == m {
            break;
        }
        let edges = m - t;
        let next: Vec<(Vec<f64>, Vec<f64>)> = (0..edges - 1)
            .into_par_iter()
            .map(|a| {
                let lo = vine.pair(t, a);
                let hi = vine.pair(t, a + 1);
                let l: Vec<f64> = (0..n).map(|r| lo.h_given_second(left[a][r], right[a][r])).collect();
                let rr: Vec<f64> = (0..n).map(|r| hi.h_given_first(left[a + 1][r], right[a + 1][r])).collect();
                (l, rr)
            })
            .collect();
        (left, right) = next.into_iter().unzip();
    }
    Ok(vine)
}

/// Sum over block rows of the log density of the last slice given the
/// earlier ones (the Markov conditional likelihood).
pub fn vine_loglik(vine: &StationaryVine, blocks: &BlockMatrix) -> Result<f64> {
    check_compatible(vine, blocks)?;
    let terms: Vec<Result<f64>> = blocks
        .rows()
        .enumerate()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(i, row)| {
            vine.conditional_log_density(row)
                .map_err(|_| Error::NonFiniteDensity { row: i })
        })
        .collect();
    terms.into_iter().sum()
}

fn check_compatible(vine: &StationaryVine, blocks: &BlockMatrix) -> Result<()> {
    if vine.d() != blocks.d() || vine.p() != blocks.p() {
        return Err(Error::Precondition(format!(
            "vine (d={}, p={}) does not match blocks (d={}, p={})",
            vine.d(),
            vine.p(),
            blocks.d(),
            blocks.p()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub loglik: f64,
    pub parameters: usize,
    pub n_blocks: usize,
    pub aic: f64,
    pub bic: f64,
    pub mbicv: f64,
}

/// Sparsity prior term `-2 * sum_t [q_t ln(psi0^t) + (m_t - q_t) ln(1 - psi0^t)]`.
pub fn mbicv_penalty(class_counts: &[(usize, usize)], psi0: f64) -> f64 {
    class_counts
        .iter()
        .enumerate()
        .map(|(i, &(m_t, q_t))| {
            let psi = psi0.powi(i as i32 + 1);
            q_t as f64 * psi.ln() + (m_t - q_t) as f64 * (-psi).ln_1p()
        })
        .sum::<f64>()
        * -2.0
}

/// Criteria from a log-likelihood, parameter count and sample size.
pub fn criteria_from_parts(loglik: f64, parameters: usize, n_blocks: usize, class_counts: &[(usize, usize)], psi0: f64) -> InformationCriteria {
    let nu = parameters as f64;
    let bic = -2.0 * loglik + nu * (n_blocks as f64).ln();
    InformationCriteria {
        loglik,
        parameters,
        n_blocks,
        aic: -2.0 * loglik + 2.0 * nu,
        bic,
        mbicv: bic + mbicv_penalty(class_counts, psi0),
    }
}

/// `(classes, non-independence classes)` per tree.
pub fn class_counts(vine: &StationaryVine) -> Vec<(usize, usize)> {
    (1..vine.m())
        .map(|t| {
            let m_t = vine.classes_in_tree(t);
            let q_t = (0..m_t).filter(|&c| !vine.class(t, c).is_independence()).count();
            (m_t, q_t)
        })
        .collect()
}

/// AIC, BIC and mBICV with `nu` = number of non-independence classes.
pub fn information_criteria(vine: &StationaryVine, blocks: &BlockMatrix, psi0: f64) -> Result<InformationCriteria> {
    if !(psi0 > 0.0 && psi0 < 1.0) {
        return Err(Error::Precondition(format!("psi0 {psi0} outside (0,1)")));
    }
    let loglik = vine_loglik(vine, blocks)?;
    Ok(criteria_from_parts(loglik, vine.parameter_count(), blocks.n_blocks(), &class_counts(vine), psi0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum VineCriterion {
    Aic,
    Bic,
    #[default]
    Mbicv,
}

impl InformationCriteria {
    pub fn get(&self, c: VineCriterion) -> f64 {
        match c {
            VineCriterion::Aic => self.aic,
            VineCriterion::Bic => self.bic,
            VineCriterion::Mbicv => self.mbicv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCriteria {
    pub order: usize,
    pub criteria: InformationCriteria,
}

#[derive(Debug, Clone)]
pub struct OrderSelection {
    pub table: Vec<OrderCriteria>,
    pub vines: Vec<StationaryVine>,
    pub chosen: usize,
}

impl OrderSelection {
    pub fn chosen_vine(&self) -> &StationaryVine {
        &self.vines[self.chosen]
    }

    pub fn chosen_order(&self) -> usize {
        self.table[self.chosen].order
    }
}

/// Fits a vine for every order in `orders` and picks the criterion minimizer
/// (lowest order on ties). All orders are scored on the same trailing
/// observations so the likelihoods are comparable.
pub fn select_markov_order(
    pit: &[Vec<f64>],
    orders: &[usize],
    cross_order: &[usize],
    options: &SelectionOptions,
    psi0: f64,
    criterion: VineCriterion,
) -> Result<OrderSelection> {
    if orders.is_empty() {
        return Err(Error::Precondition("no Markov orders to compare".into()));
    }
    let p_max = *orders.iter().max().unwrap();
    let common = pit.len().saturating_sub(p_max);
    let mut table = Vec::new();
    let mut vines = Vec::new();
    for &p in orders {
        let blocks = build_blocks(pit, p)?;
        let vine = fit_stationary_vine(&blocks, cross_order, options)?;
        let criteria = information_criteria(&vine, &blocks.tail(common), psi0)?;
        log::info!("order {p}: loglik {:.3}, mBICV {:.3}", criteria.loglik, criteria.mbicv);
        table.push(OrderCriteria { order: p, criteria });
        vines.push(vine);
    }
    let mut chosen = 0;
    for (i, row) in table.iter().enumerate() {
        let (c, b) = (row.criteria.get(criterion), table[chosen].criteria.get(criterion));
        if c < b || (c == b && row.order < table[chosen].order) {
            chosen = i;
        }
    }
    Ok(OrderSelection { table, vines, chosen })
}
