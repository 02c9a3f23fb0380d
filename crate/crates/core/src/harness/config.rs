//! Run configuration, loaded from JSON with CLI overrides applied on top.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::combine::{BgMode, Scheme};
use crate::data::{SeriesPanel, DEFAULT_LAG_ORDER};
use crate::error::{Error, Result};
use crate::eval::MapeKind;
use crate::models::ModelId;
use crate::synth::{generate_panel, DGPSpec};

pub const MAX_HORIZON: usize = 12;

/// Where the panel comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputSource {
    Csv(PathBuf),
    Synthetic(DGPSpec),
}

/// How often penalized models re-run cross-validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    /// Select lambda/alpha at the first forecast step, then refit each step
    /// at that point from the previous coefficients.
    #[default]
    FirstStep,
    /// Full cross-validation at every step.
    EveryStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSource,
    /// Disease subset in panel order; all diseases when absent.
    pub diseases: Option<Vec<String>>,
    pub horizons: Vec<usize>,
    pub lag_order: usize,
    pub split_ratio: f64,
    pub models: Vec<ModelId>,
    /// Combination scheme families, `P1` to `P11`.
    pub combiners: Vec<String>,
    pub seed: u64,
    /// Subset sizes for P10/P11.
    pub p_values: Vec<u8>,
    pub p3_mode: BgMode,
    pub rf_trees: usize,
    pub gbm_trees: usize,
    pub knn_k: usize,
    pub tuning: TuningMode,
    pub mape: MapeKind,
    pub output_dir: PathBuf,
    /// Worker threads; the rayon default when absent.
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: InputSource::Synthetic(DGPSpec::desk(2024, 522)),
            diseases: None,
            horizons: (1..=MAX_HORIZON).collect(),
            lag_order: DEFAULT_LAG_ORDER,
            split_ratio: 0.7,
            models: ModelId::ALL.to_vec(),
            combiners: (1..=11).map(|i| format!("P{i}")).collect(),
            seed: 2024,
            p_values: vec![1, 2, 3],
            p3_mode: BgMode::Feasible,
            rf_trees: 1000,
            gbm_trees: 1000,
            knn_k: 5,
            tuning: TuningMode::FirstStep,
            mape: MapeKind::Standard,
            output_dir: PathBuf::from("out"),
            threads: None,
        }
    }
}

/// Family number of a scheme label such as `P10`.
fn family(label: &str) -> Option<u8> {
    let n: u8 = label.trim().strip_prefix('P')?.parse().ok()?;
    (1..=11).contains(&n).then_some(n)
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        // a run manifest embeds the config that produced it
        let value = match value.get("config") {
            Some(inner) if value.get("config_hash").is_some() => inner.clone(),
            _ => value,
        };
        let cfg: RunConfig =
            serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| {
            Error::InvalidConfig(format!("cannot read {}: {e}", path.as_ref().display()))
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.horizons.is_empty() || self.horizons.iter().any(|h| !(1..=MAX_HORIZON).contains(h)) {
            return bad(format!("horizons must be a non-empty subset of 1..={MAX_HORIZON}"));
        }
        if self.horizons.iter().collect::<BTreeSet<_>>().len() != self.horizons.len() {
            return bad("horizons must be distinct".into());
        }
        if self.lag_order == 0 {
            return bad("lag_order must be positive".into());
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return bad(format!("split_ratio {} must be inside (0, 1)", self.split_ratio));
        }
        if self.models.is_empty() || self.models.iter().collect::<BTreeSet<_>>().len() != self.models.len() {
            return bad("models must be a non-empty list without repeats".into());
        }
        if let Some(c) = self.combiners.iter().find(|c| family(c).is_none()) {
            return bad(format!("unknown combination scheme `{c}`"));
        }
        if self.p_values.is_empty() || self.p_values.iter().any(|p| !(1..=3).contains(p)) {
            return bad("p_values must be a non-empty subset of 1..=3".into());
        }
        if self.rf_trees == 0 || self.gbm_trees == 0 || self.knn_k == 0 {
            return bad("tree counts and k must be positive".into());
        }
        if self.threads == Some(0) {
            return bad("threads must be positive".into());
        }
        if let InputSource::Synthetic(spec) = &self.input {
            spec.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    /// Every combined output series the config asks for, in scheme order.
    pub fn schemes(&self) -> Vec<Scheme> {
        let families: BTreeSet<u8> = self.combiners.iter().filter_map(|c| family(c)).collect();
        Scheme::all(&self.p_values)
            .into_iter()
            .filter(|s| families.contains(&s.family()))
            .collect()
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Loads or generates the panel. The disease subset only picks targets,
    /// so every series stays available as a predictor.
    pub fn load_panel(&self) -> Result<SeriesPanel> {
        let panel = match &self.input {
            InputSource::Csv(path) => SeriesPanel::read_csv_path(path)?,
            InputSource::Synthetic(spec) => generate_panel(spec)?,
        };
        self.target_diseases(&panel)?;
        Ok(panel)
    }

    /// Diseases to forecast, in panel order.
    pub fn target_diseases(&self, panel: &SeriesPanel) -> Result<Vec<String>> {
        let all = panel.disease_names();
        match &self.diseases {
            Some(keep) => {
                if let Some(k) = keep.iter().find(|k| !all.contains(k)) {
                    return Err(Error::UnknownDisease(k.clone()));
                }
                Ok(all.into_iter().filter(|d| keep.contains(d)).collect())
            }
            None => Ok(all),
        }
    }
}
