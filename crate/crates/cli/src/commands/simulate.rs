use eep_core::artifact::ModelArtifact;
use eep_core::rng::child_seed;

use crate::commands::fit::CONFIG_FILE;
use crate::config::{CommandKind, RunConfig};
use crate::data::{ensure_dir, num, write_csv, write_json};
use crate::error::{CliResult, StageContext};

/// Simulates a path from the fitted vine and maps it to the data scale.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(CommandKind::Simulate)?;
    let seed = cfg.seed_for(CommandKind::Simulate)?;
    let model = ModelArtifact::load(&cfg.model_dir()).stage("artifact")?;
    let pit = model.artifact.vine.simulate_series(cfg.n_steps, child_seed(seed, "simulate", 0));
    let rows = pit
        .iter()
        .enumerate()
        .map(|(t, u)| {
            let mut row = vec![t.to_string()];
            for (x, m) in u.iter().zip(&model.marginals) {
                row.push(num(m.pit_inverse(*x)?));
            }
            Ok(row)
        })
        .collect::<eep_core::Result<Vec<_>>>()
        .stage("margins")?;
    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join(CONFIG_FILE), &cfg.portable())?;
    let mut header = vec!["t"];
    header.extend(model.artifact.variables.iter().map(String::as_str));
    write_csv(&out.join("simulated.csv"), &header, rows)?;
    println!("simulate: {} steps written to {}", cfg.n_steps, out.join("simulated.csv").display());
    Ok(())
}
