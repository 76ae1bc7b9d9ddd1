use eep_core::counterfactual::{pc_curve, CausationReport};

use super::{load_for_causation, v_grid};
use crate::commands::fit::CONFIG_FILE;
use crate::config::{CauseInclusion, CommandKind, RunConfig};
use crate::data::{ensure_dir, num, write_csv, write_json};
use crate::error::{CliResult, StageContext};

const CURVE_HEADER: [&str; 11] =
    ["v", "p_f", "p_cf", "pn", "ps", "pns", "n_f", "n_cf", "source", "degenerate", "monotonicity_violated"];

fn curve_row(r: &CausationReport) -> Vec<String> {
    vec![
        num(r.v),
        num(r.p_f),
        num(r.p_cf),
        num(r.pn),
        num(r.ps),
        num(r.pns),
        r.n_f.to_string(),
        r.n_cf.to_string(),
        r.source.to_string(),
        r.degenerate.to_string(),
        r.monotonicity_violated.to_string(),
    ]
}

/// Empirical and synthetic PC curves under uniform weights, plus a
/// side-by-side comparison.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    let setup = load_for_causation(cfg, CommandKind::Causation)?;
    let seed = cfg.seed_for(CommandKind::Causation)?;
    let grid = v_grid(cfg)?;
    let event = setup.event(cfg, cfg.include_cause != CauseInclusion::Exclude, grid[0]);

    let empirical_impacts = setup.empirical(&event)?;
    let empirical = pc_curve(&empirical_impacts, &event.weights, &grid, cfg.estimator).stage("counterfactual")?;
    let synthetic_impacts = setup.synthetic(cfg, &event, seed)?;
    let synthetic = pc_curve(&synthetic_impacts, &event.weights, &grid, cfg.estimator).stage("counterfactual")?;

    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join(CONFIG_FILE), &cfg.portable())?;
    write_csv(&out.join("pc_curve_empirical.csv"), &CURVE_HEADER, empirical.iter().map(curve_row))?;
    write_csv(&out.join("pc_curve_synthetic.csv"), &CURVE_HEADER, synthetic.iter().map(curve_row))?;
    let mut header = vec!["v"];
    let names = ["p_f", "p_cf", "pn", "ps", "pns"];
    let emp: Vec<String> = names.iter().map(|n| format!("empirical_{n}")).collect();
    let syn: Vec<String> = names.iter().map(|n| format!("synthetic_{n}")).collect();
    header.extend(emp.iter().map(String::as_str));
    header.extend(syn.iter().map(String::as_str));
    write_csv(
        &out.join("pc_curve_comparison.csv"),
        &header,
        empirical.iter().zip(&synthetic).map(|(e, s)| {
            let mut row = vec![num(e.v)];
            for r in [e, s] {
                row.extend([num(r.p_f), num(r.p_cf), num(r.pn), num(r.ps), num(r.pns)]);
            }
            row
        }),
    )?;
    println!(
        "causation: cause '{}', horizon {}, {} thresholds; empirical worlds {}/{}, synthetic worlds {}/{}",
        setup.model.artifact.variables[setup.cause],
        cfg.horizon,
        grid.len(),
        empirical_impacts.n_f(),
        empirical_impacts.n_cf(),
        synthetic_impacts.n_f(),
        synthetic_impacts.n_cf()
    );
    Ok(())
}
