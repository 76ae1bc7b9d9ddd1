//! Persisted fitted models.
//!
//! A model directory holds `model.json` (marginal summaries, the vine and fit
//! metadata) and `margins.bin`, the time-ordered training series. The sidecar
//! rebuilds the empirical marginals and lets a reloaded model re-evaluate its
//! training log-likelihood.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::margins::{MarginalModel, MarginalSummary};
use crate::vine::{build_blocks, vine_loglik, OrderCriteria, StationaryVine, VineCriterion};

pub const ARTIFACT_SCHEMA_VERSION: &str = "1.0";
pub const MODEL_FILE: &str = "model.json";
pub const SERIES_FILE: &str = "margins.bin";

const SERIES_MAGIC: &[u8; 4] = b"EEPS";
const SERIES_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub criterion: VineCriterion,
    pub psi0: f64,
    /// Information criteria per candidate Markov order.
    pub orders: Vec<OrderCriteria>,
    pub chosen_order: usize,
    /// `vine_loglik` of the selected vine on all training blocks.
    pub training_loglik: f64,
    pub n_blocks: usize,
    /// SHA-256 of the canonical run configuration.
    pub config_hash: String,
    pub seed: u64,
    /// Named random sub-streams consumed during fitting.
    pub random_streams: Vec<String>,
    /// SHA-256 of the series sidecar.
    pub series_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub schema_version: String,
    pub variables: Vec<String>,
    pub marginals: Vec<MarginalSummary>,
    pub vine: StationaryVine,
    pub metadata: FitMetadata,
}

/// A reloaded artifact together with its rebuilt marginals and series.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub artifact: ModelArtifact,
    pub marginals: Vec<MarginalModel>,
    /// Training observations, one row per time step.
    pub series: Vec<Vec<f64>>,
}

impl LoadedModel {
    pub fn pit(&self) -> Vec<Vec<f64>> {
        pit_rows(&self.series, &self.marginals)
    }

    /// Recomputes the training log-likelihood from the stored pieces.
    pub fn training_loglik(&self) -> Result<f64> {
        let blocks = build_blocks(&self.pit(), self.artifact.vine.p())?;
        vine_loglik(&self.artifact.vine, &blocks)
    }
}

/// Row-wise probability integral transform.
pub fn pit_rows(series: &[Vec<f64>], marginals: &[MarginalModel]) -> Vec<Vec<f64>> {
    series
        .iter()
        .map(|row| row.iter().zip(marginals).map(|(&x, m)| m.pit_forward(x)).collect())
        .collect()
}

/// SHA-256 of the compact JSON encoding of `value`.
pub fn json_digest<T: Serialize>(value: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(value)?)))
}

fn major(version: &str) -> Option<u32> {
    version.split('.').next()?.parse().ok()
}

fn encode_series(series: &[Vec<f64>], d: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * d * series.len());
    out.extend_from_slice(SERIES_MAGIC);
    out.extend_from_slice(&SERIES_FORMAT.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&(series.len() as u64).to_le_bytes());
    for j in 0..d {
        for row in series {
            out.extend_from_slice(&row[j].to_le_bytes());
        }
    }
    out
}

fn decode_series(bytes: &[u8]) -> Result<Vec<Vec<f64>>> {
    let bad = |what: &str| Error::Schema(format!("{SERIES_FILE}: {what}"));
    if bytes.len() < 20 || &bytes[..4] != SERIES_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    if word(4) != SERIES_FORMAT {
        return Err(bad(&format!("unsupported format {}", word(4))));
    }
    let d = word(8) as usize;
    let n = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if bytes.len() != 20 + 8 * d * n {
        return Err(bad("length does not match header"));
    }
    let value = |j: usize, t: usize| {
        let at = 20 + 8 * (j * n + t);
        f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
    };
    Ok((0..n).map(|t| (0..d).map(|j| value(j, t)).collect()).collect())
}

impl ModelArtifact {
    pub fn new(marginals: &[MarginalModel], vine: StationaryVine, metadata: FitMetadata) -> Self {
        Self {
            schema_version: ARTIFACT_SCHEMA_VERSION.to_string(),
            variables: marginals.iter().map(|m| m.name.clone()).collect(),
            marginals: marginals.iter().map(MarginalModel::summary).collect(),
            vine,
            metadata,
        }
    }

    /// Writes `model.json` and the series sidecar into `dir`, filling in the
    /// sidecar digest.
    pub fn save(&mut self, dir: &Path, series: &[Vec<f64>]) -> Result<()> {
        let d = self.variables.len();
        if series.iter().any(|r| r.len() != d) {
            return Err(Error::Precondition(format!("series rows must have {d} columns")));
        }
        fs::create_dir_all(dir)?;
        let bytes = encode_series(series, d);
        self.metadata.series_digest = hex::encode(Sha256::digest(&bytes));
        fs::write(dir.join(SERIES_FILE), &bytes)?;
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(dir.join(MODEL_FILE), json)?;
        Ok(())
    }

    /// Reads a model directory, rejecting unknown major schema versions and
    /// any digest mismatch.
    pub fn load(dir: &Path) -> Result<LoadedModel> {
        let path = dir.join(MODEL_FILE);
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let raw: serde_json::Value = serde_json::from_str(&text)?;
        let version = raw
            .get("schema_version")
            .and_then(|v| v.as_str())
            .ok_or_else(|| Error::Schema("model artifact has no schema_version".into()))?;
        if major(version) != major(ARTIFACT_SCHEMA_VERSION) {
            return Err(Error::Schema(format!(
                "artifact schema {version} not supported (reader is {ARTIFACT_SCHEMA_VERSION})"
            )));
        }
        let artifact: ModelArtifact = serde_json::from_value(raw)?;
        let bytes = fs::read(dir.join(SERIES_FILE))?;
        if hex::encode(Sha256::digest(&bytes)) != artifact.metadata.series_digest {
            return Err(Error::Schema(format!("{SERIES_FILE} digest mismatch")));
        }
        let series = decode_series(&bytes)?;
        let d = artifact.variables.len();
        if artifact.marginals.len() != d || artifact.vine.d() != d || series.first().is_some_and(|r| r.len() != d) {
            return Err(Error::Schema("artifact dimensions disagree".into()));
        }
        let marginals = artifact
            .marginals
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let col: Vec<f64> = series.iter().map(|r| r[j]).collect();
                MarginalModel::from_summary(s, &col)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LoadedModel {
            artifact,
            marginals,
            series,
        })
    }
}
