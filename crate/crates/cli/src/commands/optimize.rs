use eep_core::counterfactual::admissible_mask;
use eep_core::optimize::{maximize_pc, OptConfig, OptResult, PcContext, RegSpec};
use eep_core::rng::child_seed;

use super::{impact_threshold, load_for_causation};
use crate::commands::fit::CONFIG_FILE;
use crate::config::{CauseInclusion, CommandKind, RunConfig, WorldSource};
use crate::data::{ensure_dir, num, write_csv, write_json};
use crate::error::{CliResult, StageContext};

struct Run {
    include_cause: bool,
    result: OptResult,
}

/// Maximizes the chosen probability of causation over impact weights for
/// every (cause inclusion, lambda) combination.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let setup = load_for_causation(cfg, CommandKind::Optimize)?;
    let seed = cfg.seed_for(CommandKind::Optimize)?;
    let d = setup.d();
    let v = impact_threshold(cfg)?;
    let event = setup.event(cfg, true, v);
    let impacts = match cfg.source {
        WorldSource::Empirical => setup.empirical(&event)?,
        WorldSource::Synthetic => setup.synthetic(cfg, &event, seed)?,
    };
    let context = PcContext {
        impacts: &impacts,
        v,
        estimator: cfg.estimator,
    };
    let opt = OptConfig {
        population_factor: cfg.de_population_factor,
        generations: cfg.de_generations,
        refine_iterations: cfg.refine_iterations,
        seed: child_seed(seed, "optimize", 0),
        ..OptConfig::default()
    };

    let mut runs = Vec::new();
    for include_cause in cfg.include_cause.settings() {
        let mask = admissible_mask(cfg.horizon, d, setup.cause, include_cause);
        for &lambda in &cfg.lambdas {
            let reg = RegSpec { norm: cfg.norm, lambda };
            let result = maximize_pc(&context, cfg.pc_kind, &reg, Some(&mask), &opt).stage("optimize")?;
            log::info!(
                "include_cause={include_cause} lambda={lambda}: {:?}={:.5}, entropy {:.4}",
                cfg.pc_kind,
                result.pc_value,
                result.entropy
            );
            runs.push(Run { include_cause, result });
        }
    }

    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join(CONFIG_FILE), &cfg.portable())?;
    let names = &setup.model.artifact.variables;
    write_csv(
        &out.join("optimize_results.csv"),
        &["include_cause", "norm", "lambda", "pc_kind", "v", "objective", "pc_value", "entropy", "uniform_objective"],
        runs.iter().map(|r| {
            let o = &r.result;
            vec![
                r.include_cause.to_string(),
                format!("{:?}", o.norm).to_lowercase(),
                num(o.lambda),
                format!("{:?}", o.pc_kind).to_lowercase(),
                num(v),
                num(o.objective),
                num(o.pc_value),
                num(o.entropy),
                num(o.uniform_objective),
            ]
        }),
    )?;
    let mut header = vec!["include_cause", "norm", "lambda", "lag"];
    header.extend(names.iter().map(String::as_str));
    write_csv(
        &out.join("optimize_weights.csv"),
        &header,
        runs.iter().flat_map(|r| {
            let o = &r.result;
            (0..cfg.horizon).map(move |l| {
                let mut row = vec![
                    r.include_cause.to_string(),
                    format!("{:?}", o.norm).to_lowercase(),
                    num(o.lambda),
                    (l + 1).to_string(),
                ];
                row.extend(o.weights[l * d..(l + 1) * d].iter().map(|&w| num(w)));
                row
            })
        }),
    )?;
    if cfg.include_cause == CauseInclusion::Both {
        let with: Vec<&Run> = runs.iter().filter(|r| r.include_cause).collect();
        let without: Vec<&Run> = runs.iter().filter(|r| !r.include_cause).collect();
        write_csv(
            &out.join("mass_shift.csv"),
            &["lambda", "lag", "variable", "weight_with_cause", "weight_without_cause", "shift"],
            with.iter().zip(&without).flat_map(|(a, b)| {
                (0..cfg.horizon * d).map(move |c| {
                    let (wa, wb) = (a.result.weights[c], b.result.weights[c]);
                    vec![
                        num(a.result.lambda),
                        (c / d + 1).to_string(),
                        names[c % d].clone(),
                        num(wa),
                        num(wb),
                        num(wb - wa),
                    ]
                })
            }),
        )?;
    }
    println!(
        "optimize: {} result set(s) for cause '{}' at v = {v}; outputs in {}",
        runs.len(),
        names[setup.cause],
        out.display()
    );
    Ok(())
}
