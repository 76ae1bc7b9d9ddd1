//! Run configuration: defaults, overridden by a JSON file, overridden by flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use eep_core::counterfactual::Estimator;
use eep_core::margins::{default_candidate_quantiles, MarginTransform, MIN_BOOTSTRAP_REPLICATES};
use eep_core::optimize::{Norm, PcKind};
use eep_core::paircopula::CopulaFamily;
use eep_core::vine::VineCriterion;

use crate::error::{CliError, CliResult};

pub const DEFAULT_OUTPUT_DIR: &str = "eep-out";

/// Which impact coordinates the optimizer may weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CauseInclusion {
    #[default]
    Include,
    Exclude,
    /// Run both and report the mass shift between them.
    Both,
}

impl CauseInclusion {
    pub fn settings(self) -> Vec<bool> {
        match self {
            CauseInclusion::Include => vec![true],
            CauseInclusion::Exclude => vec![false],
            CauseInclusion::Both => vec![true, false],
        }
    }
}

/// World probabilities used by the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WorldSource {
    Empirical,
    #[default]
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input_path: Option<PathBuf>,
    pub timestamp_column: Option<String>,
    /// Columns to model; empty means every non-timestamp column.
    pub variables: Vec<String>,
    pub cause_variable: Option<String>,
    pub horizon: usize,
    /// Largest Markov order tried by `fit` (orders `1..=markov_order`).
    pub markov_order: usize,
    pub candidate_quantiles: Vec<f64>,
    /// Fixed threshold level; skips the sequential threshold search.
    pub threshold_quantile: Option<f64>,
    pub alpha: f64,
    pub bootstrap_replicates: usize,
    pub families: Vec<CopulaFamily>,
    pub criterion: VineCriterion,
    pub psi0: f64,
    /// Level of the pair independence pre-test; 0 disables it.
    pub independence_level: f64,
    pub transform: MarginTransform,
    pub impact_threshold: Option<f64>,
    pub impact_quantile: f64,
    /// Impact thresholds for the causation curves; empty derives a grid.
    pub v_grid: Vec<f64>,
    pub estimator: Estimator,
    pub pc_kind: PcKind,
    pub lambdas: Vec<f64>,
    pub norm: Norm,
    pub include_cause: CauseInclusion,
    pub source: WorldSource,
    pub n_synthetic: usize,
    pub jitter: bool,
    pub noise_fraction: f64,
    pub de_generations: usize,
    pub de_population_factor: usize,
    pub refine_iterations: usize,
    pub max_lag: usize,
    pub adf_lag: usize,
    pub extremal_u: f64,
    pub histogram_bins: usize,
    pub n_steps: usize,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    /// Directory holding a fitted model; defaults to `output_dir`.
    pub model_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_path: None,
            timestamp_column: None,
            variables: Vec::new(),
            cause_variable: None,
            horizon: 1,
            markov_order: 1,
            candidate_quantiles: default_candidate_quantiles(),
            threshold_quantile: None,
            alpha: 0.05,
            bootstrap_replicates: 500,
            families: CopulaFamily::ALL.to_vec(),
            criterion: VineCriterion::Mbicv,
            psi0: 0.9,
            independence_level: 0.05,
            transform: MarginTransform::Exponential,
            impact_threshold: None,
            impact_quantile: 0.8,
            v_grid: Vec::new(),
            estimator: Estimator::Direct,
            pc_kind: PcKind::Pns,
            lambdas: vec![1.0],
            norm: Norm::L1,
            include_cause: CauseInclusion::Include,
            source: WorldSource::Synthetic,
            n_synthetic: 4000,
            jitter: false,
            noise_fraction: 0.0,
            de_generations: 300,
            de_population_factor: 10,
            refine_iterations: 500,
            max_lag: 24,
            adf_lag: 1,
            extremal_u: 0.95,
            histogram_bins: 30,
            n_steps: 1000,
            seed: None,
            output_dir: None,
            model_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Fit,
    Causation,
    Optimize,
    Simulate,
    Diagnose,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Fit => "fit",
            CommandKind::Causation => "causation",
            CommandKind::Optimize => "optimize",
            CommandKind::Simulate => "simulate",
            CommandKind::Diagnose => "diagnose",
        }
    }
}

fn parse_list<T, F: Fn(&str) -> Result<T, String>>(s: &str, item: F) -> Result<Vec<T>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|p| item(p.trim())).collect()
}

fn parse_float(s: &str) -> Result<f64, String> {
    s.parse::<f64>().map_err(|e| format!("'{s}': {e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct NameList(pub Vec<String>);

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyList(pub Vec<CopulaFamily>);

fn float_list(s: &str) -> Result<FloatList, String> {
    parse_list(s, parse_float).map(FloatList)
}

fn name_list(s: &str) -> Result<NameList, String> {
    parse_list(s, |p| Ok(p.to_string())).map(NameList)
}

fn family_list(s: &str) -> Result<FamilyList, String> {
    parse_list(s, |p| p.parse::<CopulaFamily>().map_err(|e| e.to_string())).map(FamilyList)
}

fn criterion(s: &str) -> Result<VineCriterion, String> {
    match s.to_ascii_lowercase().as_str() {
        "aic" => Ok(VineCriterion::Aic),
        "bic" => Ok(VineCriterion::Bic),
        "mbicv" => Ok(VineCriterion::Mbicv),
        _ => Err(format!("unknown criterion '{s}' (aic, bic, mbicv)")),
    }
}

fn norm(s: &str) -> Result<Norm, String> {
    match s.to_ascii_lowercase().as_str() {
        "l1" => Ok(Norm::L1),
        "l2" => Ok(Norm::L2),
        _ => Err(format!("unknown norm '{s}' (l1, l2)")),
    }
}

fn pc_kind(s: &str) -> Result<PcKind, String> {
    s.parse::<PcKind>().map_err(|e| e.to_string())
}

fn estimator(s: &str) -> Result<Estimator, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "direct" => Ok(Estimator::Direct),
        "tail_approx" => Ok(Estimator::TailApprox),
        _ => Err(format!("unknown estimator '{s}' (direct, tail-approx)")),
    }
}

/// `identity`, `exponential` or `gpd:<shape>:<scale>`.
fn transform(s: &str) -> Result<MarginTransform, String> {
    let lower = s.to_ascii_lowercase();
    let mut parts = lower.split(':');
    match parts.next() {
        Some("identity") if parts.next().is_none() => Ok(MarginTransform::Identity),
        Some("exponential") if parts.next().is_none() => Ok(MarginTransform::Exponential),
        Some("gpd") => {
            let shape = parse_float(parts.next().ok_or("gpd transform needs shape and scale")?)?;
            let scale = parse_float(parts.next().ok_or("gpd transform needs shape and scale")?)?;
            if parts.next().is_some() {
                return Err(format!("malformed transform '{s}'"));
            }
            Ok(MarginTransform::Gpd { shape, scale })
        }
        _ => Err(format!("unknown transform '{s}' (identity, exponential, gpd:<shape>:<scale>)")),
    }
}

fn inclusion(s: &str) -> Result<CauseInclusion, String> {
    match s.to_ascii_lowercase().as_str() {
        "include" | "yes" | "true" => Ok(CauseInclusion::Include),
        "exclude" | "no" | "false" => Ok(CauseInclusion::Exclude),
        "both" => Ok(CauseInclusion::Both),
        _ => Err(format!("unknown cause inclusion '{s}' (include, exclude, both)")),
    }
}

fn source(s: &str) -> Result<WorldSource, String> {
    match s.to_ascii_lowercase().as_str() {
        "empirical" => Ok(WorldSource::Empirical),
        "synthetic" => Ok(WorldSource::Synthetic),
        _ => Err(format!("unknown source '{s}' (empirical, synthetic)")),
    }
}

/// Flags shared by every subcommand; each overrides the matching config field.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON file of configuration overrides.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Headered CSV input, one row per time step.
    #[arg(long)]
    pub input_path: Option<PathBuf>,
    #[arg(long)]
    pub timestamp_column: Option<String>,
    /// Comma-separated column names to model.
    #[arg(long, value_parser = name_list)]
    pub variables: Option<NameList>,
    #[arg(long)]
    pub cause_variable: Option<String>,
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub markov_order: Option<usize>,
    #[arg(long, value_parser = float_list)]
    pub candidate_quantiles: Option<FloatList>,
    #[arg(long)]
    pub threshold_quantile: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub bootstrap_replicates: Option<usize>,
    /// Comma-separated pair-copula families.
    #[arg(long, value_parser = family_list)]
    pub families: Option<FamilyList>,
    #[arg(long, value_parser = criterion)]
    pub criterion: Option<VineCriterion>,
    #[arg(long)]
    pub psi0: Option<f64>,
    #[arg(long)]
    pub independence_level: Option<f64>,
    /// identity, exponential or gpd:<shape>:<scale>.
    #[arg(long, value_parser = transform)]
    pub transform: Option<MarginTransform>,
    #[arg(long)]
    pub impact_threshold: Option<f64>,
    #[arg(long)]
    pub impact_quantile: Option<f64>,
    #[arg(long, value_parser = float_list)]
    pub v_grid: Option<FloatList>,
    /// direct or tail-approx.
    #[arg(long, value_parser = estimator)]
    pub estimator: Option<Estimator>,
    /// pn, ps or pns.
    #[arg(long, value_parser = pc_kind)]
    pub pc_kind: Option<PcKind>,
    #[arg(long, value_parser = float_list)]
    pub lambdas: Option<FloatList>,
    /// l1 or l2.
    #[arg(long, value_parser = norm)]
    pub norm: Option<Norm>,
    /// include, exclude or both.
    #[arg(long, value_parser = inclusion)]
    pub include_cause: Option<CauseInclusion>,
    /// empirical or synthetic.
    #[arg(long, value_parser = source)]
    pub source: Option<WorldSource>,
    #[arg(long)]
    pub n_synthetic: Option<usize>,
    #[arg(long)]
    pub jitter: Option<bool>,
    #[arg(long)]
    pub noise_fraction: Option<f64>,
    #[arg(long)]
    pub de_generations: Option<usize>,
    #[arg(long)]
    pub de_population_factor: Option<usize>,
    #[arg(long)]
    pub refine_iterations: Option<usize>,
    #[arg(long)]
    pub max_lag: Option<usize>,
    #[arg(long)]
    pub adf_lag: Option<usize>,
    #[arg(long)]
    pub extremal_u: Option<f64>,
    #[arg(long)]
    pub histogram_bins: Option<usize>,
    #[arg(long)]
    pub n_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long)]
    pub model_dir: Option<PathBuf>,
}

macro_rules! overlay {
    ($cfg:ident, $args:ident; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = v; })*
    };
}

macro_rules! overlay_opt {
    ($cfg:ident, $args:ident; $($field:ident),* $(,)?) => {
        $(if let Some(v) = $args.$field.clone() { $cfg.$field = Some(v); })*
    };
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Defaults, then the `--config` file, then explicit flags.
    pub fn resolve(args: &ConfigArgs) -> CliResult<Self> {
        let mut cfg = match &args.config {
            Some(path) => Self::from_file(path)?,
            None => Self::default(),
        };
        overlay!(cfg, args;
            horizon, markov_order, alpha, bootstrap_replicates, criterion, psi0, independence_level,
            transform, impact_quantile, estimator, pc_kind, norm, include_cause, source, n_synthetic,
            jitter, noise_fraction, de_generations, de_population_factor, refine_iterations, max_lag,
            adf_lag, extremal_u, histogram_bins, n_steps,
        );
        overlay_opt!(cfg, args;
            input_path, timestamp_column, cause_variable, threshold_quantile, impact_threshold, seed,
            output_dir, model_dir,
        );
        if let Some(v) = &args.variables {
            cfg.variables = v.0.clone();
        }
        if let Some(v) = &args.candidate_quantiles {
            cfg.candidate_quantiles = v.0.clone();
        }
        if let Some(v) = &args.families {
            cfg.families = v.0.clone();
        }
        if let Some(v) = &args.v_grid {
            cfg.v_grid = v.0.clone();
        }
        if let Some(v) = &args.lambdas {
            cfg.lambdas = v.0.clone();
        }
        Ok(cfg)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn model_dir(&self) -> PathBuf {
        self.model_dir.clone().unwrap_or_else(|| self.output_dir())
    }

    /// The configuration without output locations, as recorded in outputs and
    /// hashed into the model, so runs differing only in where they write
    /// produce identical files.
    pub fn portable(&self) -> Self {
        Self {
            output_dir: None,
            model_dir: None,
            ..self.clone()
        }
    }

    pub fn seed_for(&self, command: CommandKind) -> CliResult<u64> {
        self.seed
            .ok_or_else(|| CliError::Config(format!("--seed is required for `{}`", command.name())))
    }

    fn is_stochastic(&self, command: CommandKind) -> bool {
        match command {
            CommandKind::Fit | CommandKind::Causation | CommandKind::Optimize | CommandKind::Simulate => true,
            CommandKind::Diagnose => self.noise_fraction > 0.0,
        }
    }

    /// Field-level checks that need no data.
    pub fn validate(&self, command: CommandKind) -> CliResult<()> {
        let fail = |msg: String| Err(CliError::Config(msg));
        let unit_open = |x: f64| x > 0.0 && x < 1.0;
        if self.is_stochastic(command) && self.seed.is_none() {
            return fail(format!("--seed is required for `{}`", command.name()));
        }
        if matches!(command, CommandKind::Fit | CommandKind::Diagnose) && self.input_path.is_none() {
            return fail(format!("`{}` needs --input-path", command.name()));
        }
        if matches!(command, CommandKind::Causation | CommandKind::Optimize) && self.cause_variable.is_none() {
            return fail(format!("`{}` needs --cause-variable", command.name()));
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.markov_order == 0 {
            return fail("markov order must be at least 1".into());
        }
        if command == CommandKind::Fit && self.horizon > self.markov_order {
            return fail(format!("horizon {} exceeds Markov order {}", self.horizon, self.markov_order));
        }
        if let Some(t) = &self.timestamp_column {
            if self.variables.contains(t) {
                return fail(format!("column '{t}' cannot be both timestamp and variable"));
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = self.variables.iter().find(|v| !seen.insert(v.as_str())) {
            return fail(format!("variable '{dup}' listed twice"));
        }
        if self.candidate_quantiles.is_empty()
            || !self.candidate_quantiles.iter().all(|&q| unit_open(q))
            || !self.candidate_quantiles.windows(2).all(|w| w[1] > w[0])
        {
            return fail("candidate quantiles must be strictly increasing values in (0,1)".into());
        }
        if self.threshold_quantile.is_some_and(|q| !unit_open(q)) {
            return fail("threshold quantile must lie in (0,1)".into());
        }
        if !unit_open(self.alpha) {
            return fail(format!("alpha {} outside (0,1)", self.alpha));
        }
        if self.bootstrap_replicates < MIN_BOOTSTRAP_REPLICATES {
            return fail(format!("at least {MIN_BOOTSTRAP_REPLICATES} bootstrap replicates are required"));
        }
        if self.families.is_empty() {
            return fail("no pair-copula families selected".into());
        }
        if !unit_open(self.psi0) {
            return fail(format!("psi0 {} outside (0,1)", self.psi0));
        }
        if !(0.0..1.0).contains(&self.independence_level) {
            return fail("independence level must lie in [0,1)".into());
        }
        if let MarginTransform::Gpd { shape, scale } = self.transform {
            if !(scale > 0.0 && shape.is_finite()) {
                return fail(format!("invalid GPD transform ({shape}, {scale})"));
            }
        }
        if !unit_open(self.impact_quantile) {
            return fail("impact quantile must lie in (0,1)".into());
        }
        if self.impact_threshold.is_some_and(|v| !v.is_finite()) || self.v_grid.iter().any(|v| !v.is_finite()) {
            return fail("impact thresholds must be finite".into());
        }
        if command == CommandKind::Optimize && self.lambdas.is_empty() {
            return fail("the lambda list is empty".into());
        }
        if self.lambdas.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
            return fail("lambdas must be finite and nonnegative".into());
        }
        if self.n_synthetic == 0 || self.n_steps == 0 {
            return fail("sample sizes must be positive".into());
        }
        if !(self.noise_fraction >= 0.0 && self.noise_fraction.is_finite()) {
            return fail("noise fraction must be nonnegative".into());
        }
        if self.de_generations == 0 || self.de_population_factor == 0 {
            return fail("optimizer sizes must be positive".into());
        }
        if !unit_open(self.extremal_u) {
            return fail("extremal quantile level must lie in (0,1)".into());
        }
        if self.histogram_bins == 0 {
            return fail("histogram needs at least one bin".into());
        }
        Ok(())
    }
}
