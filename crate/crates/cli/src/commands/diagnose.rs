use eep_core::diagnostics::{
    adf_test, correlation_functions, empirical_extremal_correlation, histogram, jitter_and_normalize, CorrelationKind,
    ADF_CRITICAL_1PCT,
};
use eep_core::numerics::{mean, variance};
use eep_core::rng::child_seed;

use crate::commands::fit::CONFIG_FILE;
use crate::config::{CommandKind, RunConfig};
use crate::data::{ensure_dir, load_columns, num, read_header, resolve_variables, write_csv, write_json};
use crate::error::{CliResult, StageContext};

/// Histograms, correlation functions, ADF statistics and extremal
/// correlations of the (jittered, unit-variance) input series.
pub fn run(cfg: &RunConfig) -> CliResult<()> {
    cfg.validate(CommandKind::Diagnose)?;
    let seed = cfg.seed.unwrap_or(0);
    let input = cfg.input_path.as_deref().expect("validated");
    let names = resolve_variables(&read_header(input)?, cfg)?;
    let data = load_columns(input, &names)?;
    let d = data.d();
    let raw: Vec<Vec<f64>> = (0..d).map(|j| data.column(j)).collect();
    let scaled = raw
        .iter()
        .enumerate()
        .map(|(j, x)| jitter_and_normalize(x, cfg.noise_fraction, child_seed(seed, "jitter", j as u64)))
        .collect::<eep_core::Result<Vec<_>>>()
        .stage("diagnostics")?;

    let mut tidy: Vec<Vec<String>> = Vec::new();
    let mut push = |kind: &str, i: usize, j: usize, at: String, value: f64, ci: String| {
        tidy.push(vec![kind.to_string(), names[i].clone(), names[j].clone(), at, num(value), ci]);
    };
    let mut adf = Vec::with_capacity(d);
    for i in 0..d {
        for kind in [CorrelationKind::Acf, CorrelationKind::Pacf] {
            let c = correlation_functions(&scaled[i], None, cfg.max_lag, kind).stage("diagnostics")?;
            for (lag, v) in c.lags.iter().zip(&c.values) {
                push(&kind.to_string(), i, i, lag.to_string(), *v, num(c.ci_halfwidth));
            }
        }
        let a = adf_test(&scaled[i], cfg.adf_lag).stage("diagnostics")?;
        push("adf", i, i, cfg.adf_lag.to_string(), a.statistic, num(ADF_CRITICAL_1PCT));
        adf.push(a);
    }
    for i in 0..d {
        for j in (0..d).filter(|&j| j != i) {
            for kind in [CorrelationKind::Ccf, CorrelationKind::Pccf] {
                let c = correlation_functions(&scaled[i], Some(&scaled[j]), cfg.max_lag, kind).stage("diagnostics")?;
                for (lag, v) in c.lags.iter().zip(&c.values) {
                    push(&kind.to_string(), i, j, lag.to_string(), *v, num(c.ci_halfwidth));
                }
            }
        }
    }
    for i in 0..d {
        for j in 0..d {
            for h in (0..=cfg.max_lag).filter(|&h| !(i == j && h == 0)) {
                let chi = empirical_extremal_correlation(&scaled[i], &scaled[j], h, cfg.extremal_u).stage("diagnostics")?;
                push("extremal", i, j, h.to_string(), chi, String::new());
            }
        }
    }

    let out = cfg.output_dir();
    ensure_dir(&out)?;
    write_json(&out.join(CONFIG_FILE), &cfg.portable())?;
    write_csv(&out.join("diagnostics.csv"), &["kind", "i", "j", "lag_or_u", "value", "ci"], tidy)?;
    let mut bins = Vec::new();
    for (name, x) in names.iter().zip(&raw) {
        for (b, bin) in histogram(x, cfg.histogram_bins).stage("diagnostics")?.iter().enumerate() {
            bins.push(vec![name.clone(), b.to_string(), num(bin.lower), num(bin.upper), bin.count.to_string()]);
        }
    }
    write_csv(&out.join("histograms.csv"), &["variable", "bin", "lower", "upper", "count"], bins)?;
    write_csv(
        &out.join("summary.csv"),
        &["variable", "n", "mean", "sd", "normalized_variance", "adf_statistic", "adf_reject_1pct"],
        (0..d).map(|j| {
            vec![
                names[j].clone(),
                raw[j].len().to_string(),
                num(mean(&raw[j])),
                num(variance(&raw[j]).sqrt()),
                num(variance(&scaled[j])),
                num(adf[j].statistic),
                adf[j].reject_at_1pct.to_string(),
            ]
        }),
    )?;
    println!(
        "diagnose: {d} variables, {} observations; extremal level u = {}; outputs in {}",
        data.rows.len(),
        cfg.extremal_u,
        out.display()
    );
    Ok(())
}
