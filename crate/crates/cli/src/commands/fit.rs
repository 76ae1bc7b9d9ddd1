use eep_core::artifact::{json_digest, pit_rows, FitMetadata, ModelArtifact};
use eep_core::diagnostics::jitter_and_normalize;
use eep_core::margins::{fit_marginal_model, MarginalModel, ThresholdSearch};
use eep_core::paircopula::{FitCriterion, SelectionOptions};
use eep_core::rng::child_seed;
use eep_core::vine::{build_blocks, select_cross_section_order, select_markov_order, vine_loglik};

use crate::config::{CommandKind, RunConfig};
use crate::data::{ensure_dir, load_columns, num, read_header, resolve_variables, write_csv, write_json};
use crate::error::{CliResult, StageContext};

pub const CONFIG_FILE: &str = "config.json";

pub fn selection_options(cfg: &RunConfig) -> SelectionOptions {
    SelectionOptions {
        candidates: cfg
            .families
            .iter()
            .flat_map(|&f| f.rotations().iter().map(move |&r| (f, r)))
            .collect(),
        criterion: FitCriterion::Aic,
        independence_level: (cfg.independence_level > 0.0).then_some(cfg.independence_level),
    }
}

fn fit_marginals(cfg: &RunConfig, names: &[String], series: &[Vec<f64>], seed: u64) -> CliResult<Vec<MarginalModel>> {
    names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let col: Vec<f64> = series.iter().map(|r| r[j]).collect();
            let model = match cfg.threshold_quantile {
                Some(q) => MarginalModel::with_threshold_quantile(name, &col, q),
                None => {
                    let search = ThresholdSearch {
                        quantiles: cfg.candidate_quantiles.clone(),
                        alpha: cfg.alpha,
                        replicates: cfg.bootstrap_replicates,
                        seed: child_seed(seed, "threshold", j as u64),
                    };
                    fit_marginal_model(name, &col, &search)
                }
            };
            let model = model.stage("margins")?;
            log::info!(
                "{name}: threshold {:.4} (q {:.2}), shape {:.4}, scale {:.4}",
                model.gpd.threshold,
                model.gpd.threshold_quantile,
                model.gpd.shape,
                model.gpd.scale
            );
            Ok(model)
        })
        .collect()
}

pub fn run(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(CommandKind::Fit)?;
    let seed = cfg.seed_for(CommandKind::Fit)?;
    let input = cfg.input_path.as_deref().expect("validated");
    let names = resolve_variables(&read_header(input)?, cfg)?;
    let data = load_columns(input, &names)?;

    let mut streams = Vec::new();
    let series = if cfg.jitter {
        streams.push("jitter".to_string());
        let cols = (0..data.d())
            .map(|j| jitter_and_normalize(&data.column(j), cfg.noise_fraction, child_seed(seed, "jitter", j as u64)))
            .collect::<eep_core::Result<Vec<_>>>()
            .stage("diagnostics")?;
        (0..data.rows.len()).map(|t| cols.iter().map(|c| c[t]).collect()).collect()
    } else {
        data.rows.clone()
    };
    if cfg.threshold_quantile.is_none() {
        streams.push("threshold".to_string());
    }

    let marginals = fit_marginals(cfg, &names, &series, seed)?;
    let pit = pit_rows(&series, &marginals);
    let cross_order = select_cross_section_order(&pit).stage("vine")?;
    let orders: Vec<usize> = (1..=cfg.markov_order).collect();
    let selection = select_markov_order(&pit, &orders, &cross_order, &selection_options(cfg), cfg.psi0, cfg.criterion)
        .stage("vine")?;
    let vine = selection.chosen_vine().clone();
    let blocks = build_blocks(&pit, vine.p()).stage("vine")?;
    let training_loglik = vine_loglik(&vine, &blocks).stage("vine")?;

    let portable = cfg.portable();
    let metadata = FitMetadata {
        criterion: cfg.criterion,
        psi0: cfg.psi0,
        orders: selection.table.clone(),
        chosen_order: selection.chosen_order(),
        training_loglik,
        n_blocks: blocks.n_blocks(),
        config_hash: json_digest(&portable).stage("artifact")?,
        seed,
        random_streams: streams,
        series_digest: String::new(),
    };
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join(CONFIG_FILE), &portable)?;
    let mut artifact = ModelArtifact::new(&marginals, vine, metadata);
    artifact.save(&out, &series).stage("artifact")?;

    let chosen = selection.chosen_order();
    write_csv(
        &out.join("order_criteria.csv"),
        &["order", "loglik", "parameters", "n_blocks", "aic", "bic", "mbicv", "selected"],
        selection.table.iter().map(|r| {
            let c = &r.criteria;
            vec![
                r.order.to_string(),
                num(c.loglik),
                c.parameters.to_string(),
                c.n_blocks.to_string(),
                num(c.aic),
                num(c.bic),
                num(c.mbicv),
                (r.order == chosen).to_string(),
            ]
        }),
    )?;
    write_csv(
        &out.join("marginals.csv"),
        &["variable", "threshold", "threshold_quantile", "shape", "scale", "shape_se", "scale_se", "n", "rejected_candidates"],
        marginals.iter().map(|m| {
            vec![
                m.name.clone(),
                num(m.gpd.threshold),
                num(m.gpd.threshold_quantile),
                num(m.gpd.shape),
                num(m.gpd.scale),
                num(m.shape_se),
                num(m.scale_se),
                m.sorted_sample().len().to_string(),
                m.selection.as_ref().map_or(String::new(), |s| s.rejected_count.to_string()),
            ]
        }),
    )?;
    write_csv(
        &out.join("threshold_pvalues.csv"),
        &["variable", "quantile", "threshold", "p_value"],
        marginals.iter().flat_map(|m| {
            m.selection.iter().flat_map(move |s| {
                (0..s.candidates.len())
                    .map(move |i| vec![m.name.clone(), num(s.quantiles[i]), num(s.candidates[i]), num(s.p_values[i])])
            })
        }),
    )?;
    println!(
        "fit: {} variables, {} observations; selected Markov order {chosen} by {}; model written to {}",
        names.len(),
        series.len(),
        format!("{:?}", cfg.criterion).to_lowercase(),
        out.display()
    );
    Ok(())
}
