//! Metrics, the nonequivalence table, combination weights and the report
//! files. Everything here is derived from a forecast store plus its
//! manifest, so reports can be regenerated without refitting.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backtest::{apply_weight_path, bg_path, PairManifest, RunManifest};
use super::store::{ForecastRecord, ForecastStore};
use crate::combine::{ForecastMatrix, Scheme};
use crate::data::EpiWeek;
use crate::error::{Error, Result};
use crate::eval::{mape_with, mase, nonequivalence_proportion, EvalWindow, MetricReport};
use crate::models::ModelId;

type Grouped<'a> = HashMap<(&'a str, usize, &'a str), Vec<&'a ForecastRecord>>;

fn missing(pair: &PairManifest, id: &str) -> Error {
    Error::MissingForecasts(format!(
        "{id} for disease {} horizon {}",
        pair.disease, pair.horizon
    ))
}

fn lookup<'a>(grouped: &'a Grouped<'a>, pair: &'a PairManifest, id: &'a str) -> Result<&'a [&'a ForecastRecord]> {
    grouped
        .get(&(pair.disease.as_str(), pair.horizon, id))
        .map(|v| v.as_slice())
        .ok_or_else(|| missing(pair, id))
}

fn split_fa(records: &[&ForecastRecord]) -> (Vec<f64>, Vec<f64>) {
    records.iter().map(|r| (r.actual, r.forecast)).unzip()
}

/// Submodel forecast matrix of a pair over its last `len` forecast rows.
fn tail_matrix(grouped: &Grouped<'_>, pair: &PairManifest, models: &[ModelId], len: usize) -> Result<ForecastMatrix> {
    let series: Vec<&[&ForecastRecord]> = models
        .iter()
        .map(|m| lookup(grouped, pair, m.as_str()))
        .collect::<Result<_>>()?;
    let n = series[0].len();
    if series.iter().any(|s| s.len() != n) || len > n {
        return Err(missing(pair, "a complete submodel forecast set"));
    }
    let rows = n - len..n;
    let mut forecasts = Vec::with_capacity(len * models.len());
    for i in rows.clone() {
        forecasts.extend(series.iter().map(|s| s[i].forecast));
    }
    let actuals = rows.clone().map(|i| series[0][i].actual).collect();
    let weeks: Vec<EpiWeek> = rows.map(|i| series[0][i].target_week).collect();
    ForecastMatrix::new(models.to_vec(), forecasts, actuals, weeks)
}

/// Stored ids of a pair in reporting order: configured models, then schemes.
fn report_ids(manifest: &RunManifest) -> Vec<String> {
    let mut ids: Vec<String> = manifest.config.models.iter().map(|m| m.to_string()).collect();
    ids.extend(manifest.config.schemes().iter().map(|s| s.to_string()));
    ids
}

/// MAPE and MASE for every stored series. Submodels and P1-P4 are scored on
/// the full forecast set and on the evaluation window; P3/P4 weights are
/// re-estimated inside the evaluation window for the latter. Later schemes
/// exist only on the evaluation window.
pub fn compute_metrics(store: &ForecastStore, manifest: &RunManifest) -> Result<Vec<MetricReport>> {
    let grouped = store.grouped();
    let cfg = &manifest.config;
    let kind = cfg.mape;
    let mut out = Vec::new();
    for pair in &manifest.pairs {
        let full_len = pair.n_rows - pair.train_end;
        let eval_len = pair.n_rows - pair.eval30_start;
        let scale = [pair.mase_scale];
        let tag = |id: &str, e: Error| e.tagged(format!("disease {} horizon {} model {id}", pair.disease, pair.horizon));
        let mut push = |id: &str, window: EvalWindow, a: &[f64], f: &[f64]| -> Result<()> {
            out.push(MetricReport {
                disease: pair.disease.clone(),
                horizon: pair.horizon,
                model: id.to_string(),
                mape: mape_with(a, f, kind).map_err(|e| tag(id, e))?,
                mase: mase(a, f, &scale).map_err(|e| tag(id, e))?,
                eval_window: window,
            });
            Ok(())
        };
        for id in report_ids(manifest) {
            let records = lookup(&grouped, pair, &id)?;
            let (a, f) = split_fa(records);
            let scheme: Option<Scheme> = id.parse().ok();
            if a.len() == full_len {
                push(&id, EvalWindow::FullForecastSet, &a, &f)?;
                let tail = full_len - eval_len..full_len;
                match scheme {
                    Some(s @ (Scheme::P3 | Scheme::P4)) => {
                        let m = tail_matrix(&grouped, pair, &cfg.models, eval_len)?;
                        let path = bg_path(&m, s, pair.horizon, cfg.p3_mode);
                        let native = apply_weight_path(&m, &path);
                        push(&id, EvalWindow::Eval30, &m.actuals, &native)?;
                    }
                    _ => push(&id, EvalWindow::Eval30, &a[tail.clone()], &f[tail])?,
                }
            } else if a.len() == eval_len {
                push(&id, EvalWindow::Eval30, &a, &f)?;
            } else {
                return Err(missing(pair, &id));
            }
        }
    }
    Ok(out)
}

/// One cell of the nonequivalence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmCell {
    pub disease: String,
    pub horizon: usize,
    /// `None` when the pair lacks a model or simple scheme, or has too few rows.
    pub proportion: Option<f64>,
}

/// Share of significant (submodel, simple scheme) comparisons per pair, on
/// the full forecast set.
pub fn dm_table(store: &ForecastStore, manifest: &RunManifest) -> Vec<DmCell> {
    let grouped = store.grouped();
    manifest
        .pairs
        .iter()
        .map(|pair| {
            let errors = |id: &str| -> Option<Vec<f64>> {
                let recs = lookup(&grouped, pair, id).ok()?;
                Some(recs.iter().map(|r| r.actual - r.forecast).collect())
            };
            let proportion = (|| {
                let models: Vec<(ModelId, Vec<f64>)> = ModelId::ALL
                    .iter()
                    .map(|m| Some((*m, errors(m.as_str())?)))
                    .collect::<Option<_>>()?;
                let combos: Vec<(Scheme, Vec<f64>)> = Scheme::SIMPLE
                    .iter()
                    .map(|s| Some((*s, errors(&s.to_string())?)))
                    .collect::<Option<_>>()?;
                let m: Vec<(ModelId, &[f64])> = models.iter().map(|(id, e)| (*id, e.as_slice())).collect();
                let c: Vec<(Scheme, &[f64])> = combos.iter().map(|(s, e)| (*s, e.as_slice())).collect();
                nonequivalence_proportion(&m, &c, pair.horizon).ok().map(|r| r.proportion)
            })();
            DmCell {
                disease: pair.disease.clone(),
                horizon: pair.horizon,
                proportion,
            }
        })
        .collect()
}

/// Diseases as rows, horizons as columns; empty cells where undefined.
pub fn write_dm_table<W: Write>(cells: &[DmCell], mut w: W) -> Result<()> {
    let mut diseases: Vec<&str> = Vec::new();
    let mut horizons: Vec<usize> = Vec::new();
    for c in cells {
        if !diseases.contains(&c.disease.as_str()) {
            diseases.push(&c.disease);
        }
        if !horizons.contains(&c.horizon) {
            horizons.push(c.horizon);
        }
    }
    horizons.sort_unstable();
    let mut out = csv::Writer::from_writer(&mut w);
    let mut header = vec!["disease".to_string()];
    header.extend(horizons.iter().map(|h| format!("h{h}")));
    out.write_record(&header)?;
    for d in diseases {
        let mut row = vec![d.to_string()];
        for h in &horizons {
            let cell = cells.iter().find(|c| c.disease == d && c.horizon == *h);
            row.push(cell.and_then(|c| c.proportion).map(|p| p.to_string()).unwrap_or_default());
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub disease: String,
    pub horizon: usize,
    pub week: EpiWeek,
    pub scheme: String,
    pub model_id: String,
    pub weight: f64,
}

/// Per-week P3 and P4 weights over the full forecast set.
pub fn bg_weight_records(store: &ForecastStore, manifest: &RunManifest) -> Result<Vec<WeightRecord>> {
    let grouped = store.grouped();
    let cfg = &manifest.config;
    let schemes: Vec<Scheme> = cfg
        .schemes()
        .into_iter()
        .filter(|s| matches!(s, Scheme::P3 | Scheme::P4))
        .collect();
    let mut out = Vec::new();
    if schemes.is_empty() {
        return Ok(out);
    }
    for pair in &manifest.pairs {
        let m = tail_matrix(&grouped, pair, &cfg.models, pair.n_rows - pair.train_end)?;
        for &s in &schemes {
            let path = bg_path(&m, s, pair.horizon, cfg.p3_mode);
            for (r, w) in path.iter().enumerate() {
                for (id, v) in m.models.iter().zip(w) {
                    out.push(WeightRecord {
                        disease: pair.disease.clone(),
                        horizon: pair.horizon,
                        week: m.target_weeks[r],
                        scheme: s.to_string(),
                        model_id: id.to_string(),
                        weight: *v,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn write_metrics_csv(path: impl AsRef<Path>, metrics: &[MetricReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["disease", "horizon", "model_id", "eval_window", "mape", "mase"])?;
    for m in metrics {
        w.write_record([
            m.disease.clone(),
            m.horizon.to_string(),
            m.model.clone(),
            m.eval_window.to_string(),
            m.mape.to_string(),
            m.mase.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes forecasts, metrics, the nonequivalence table, weights and the
/// manifest into `dir`, returning the metrics.
pub fn emit_reports(dir: impl AsRef<Path>, store: &ForecastStore, manifest: &RunManifest) -> Result<Vec<MetricReport>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    store.write_csv_path(dir.join("forecasts.csv"))?;
    let metrics = compute_metrics(store, manifest)?;
    write_metrics_csv(dir.join("metrics.csv"), &metrics)?;
    write_json(&dir.join("metrics.json"), &metrics)?;
    let cells = dm_table(store, manifest);
    write_dm_table(&cells, std::fs::File::create(dir.join("dm_table.csv"))?)?;
    write_rows(&dir.join("weights.csv"), &bg_weight_records(store, manifest)?)?;
    write_json(&dir.join("manifest.json"), manifest)?;
    Ok(metrics)
}

/// Reads a manifest written by [`emit_reports`].
pub fn read_manifest(path: impl AsRef<Path>) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig(format!("bad manifest: {e}")))
}
