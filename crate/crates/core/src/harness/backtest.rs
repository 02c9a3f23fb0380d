//! Full backtest over (disease, horizon) pairs: refits, combinations and the
//! run manifest.

use std::collections::BTreeMap;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::{run_submodels, EngineSettings, FitSummary, PcaCache, SubmodelRun};
use super::reports::compute_metrics;
use super::store::{ForecastRecord, ForecastStore};
use super::RunConfig;
use crate::combine::{
    bates_granger_path, combine_equal, combine_median, fit_aenet_combiner, fit_regression_combiner,
    fit_rf_combiner, BgMode, BgWindow, CombinerWeights, ForecastMatrix, RegressionVariant, Scheme,
};
use crate::data::{expanding_schedule, EpiWeek, LagDesign, PredictorSpec, SeriesPanel, SplitPlan};
use crate::error::{Error, Result};
use crate::eval::{naive_abs_errors, MetricReport};
use crate::models::{ForestParams, ModelId, PenaltyKind, PenaltySpec};
use crate::seed::derive_seed;

/// Everything recorded about one (disease, horizon) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairManifest {
    pub disease: String,
    pub horizon: usize,
    pub n_rows: usize,
    pub train_end: usize,
    pub eval30_start: usize,
    /// Mean absolute naive error over the initial training rows.
    pub mase_scale: f64,
    pub fits: Vec<FitSummary>,
    /// Fitted weights of the regression and penalized combiners.
    pub combiners: Vec<CombinerWeights>,
    /// Named seeds for every stochastic scheme of this pair.
    pub seeds: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub config: RunConfig,
    pub config_hash: String,
    pub started_at: String,
    pub wall_clock_seconds: f64,
    pub threads: usize,
    pub pairs: Vec<PairManifest>,
}

impl RunManifest {
    pub fn pair(&self, disease: &str, horizon: usize) -> Option<&PairManifest> {
        self.pairs
            .iter()
            .find(|p| p.disease == disease && p.horizon == horizon)
    }
}

/// In-memory results of one pair.
#[derive(Debug, Clone)]
pub struct PairOutput {
    pub disease: String,
    pub horizon: usize,
    pub split: SplitPlan,
    /// Target weeks of the forecast set.
    pub target_weeks: Vec<EpiWeek>,
    pub actuals: Vec<f64>,
    pub submodels: SubmodelRun,
    /// P1-P4 cover the forecast set; later schemes cover the evaluation rows.
    pub combined: Vec<(Scheme, Vec<f64>)>,
    /// Per-row weights of P3 and P4 over the forecast set.
    pub bg_weights: Vec<(Scheme, Vec<Vec<f64>>)>,
    pub manifest: PairManifest,
}

impl PairOutput {
    pub fn matrix(&self) -> Result<ForecastMatrix> {
        submodel_matrix(&self.submodels, &self.actuals, &self.target_weeks)
    }

    pub fn eval_rows(&self) -> Range<usize> {
        self.split.eval30_start - self.split.train_end..self.actuals.len()
    }

    pub fn submodel(&self, id: ModelId) -> Option<&[f64]> {
        let i = self.submodels.models.iter().position(|m| *m == id)?;
        Some(&self.submodels.forecasts[i])
    }

    pub fn scheme(&self, scheme: Scheme) -> Option<&[f64]> {
        self.combined
            .iter()
            .find(|(s, _)| *s == scheme)
            .map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub store: ForecastStore,
    pub metrics: Vec<MetricReport>,
    pub manifest: RunManifest,
    pub pairs: Vec<PairOutput>,
}

pub(crate) fn submodel_matrix(
    run: &SubmodelRun,
    actuals: &[f64],
    weeks: &[EpiWeek],
) -> Result<ForecastMatrix> {
    let n = actuals.len();
    let mut forecasts = Vec::with_capacity(n * run.models.len());
    for s in 0..n {
        forecasts.extend(run.forecasts.iter().map(|f| f[s]));
    }
    ForecastMatrix::new(run.models.clone(), forecasts, actuals.to_vec(), weeks.to_vec())
}

/// Row-wise dot products of weight paths with the forecast matrix.
pub(crate) fn apply_weight_path(matrix: &ForecastMatrix, weights: &[Vec<f64>]) -> Vec<f64> {
    weights
        .iter()
        .enumerate()
        .map(|(r, w)| w.iter().zip(matrix.row(r)).map(|(a, b)| a * b).sum())
        .collect()
}

/// Weight path of P3 (`mode` as configured) or P4 (always feasible).
pub(crate) fn bg_path(matrix: &ForecastMatrix, scheme: Scheme, horizon: usize, p3_mode: BgMode) -> Vec<Vec<f64>> {
    match scheme {
        Scheme::P3 => bates_granger_path(matrix, horizon, BgWindow::Recent(1), p3_mode),
        _ => bates_granger_path(matrix, horizon, BgWindow::Expanding, BgMode::Feasible),
    }
}

struct PairJob<'a> {
    disease: &'a str,
    design: LagDesign,
    split: SplitPlan,
}

fn run_pair(job: &PairJob<'_>, config: &RunConfig, pca: Option<&PcaCache>) -> Result<PairOutput> {
    let design = &job.design;
    let split = &job.split;
    let h = design.horizon;
    let h_label = h.to_string();
    let schemes = config.schemes();
    let subset_schemes: Vec<Scheme> = schemes.iter().copied().filter(|s| s.uses_predictors()).collect();
    let settings = EngineSettings {
        disease: job.disease,
        models: &config.models,
        subset_schemes: &subset_schemes,
        run_seed: config.seed,
        rf_trees: config.rf_trees,
        gbm_trees: config.gbm_trees,
        knn_k: config.knn_k,
        tuning: config.tuning,
        pca,
    };
    let run = run_submodels(design, split, &settings)?;
    let rows = split.forecast_set();
    let actuals: Vec<f64> = rows.clone().map(|r| design.target(r)).collect();
    let weeks: Vec<EpiWeek> = rows.clone().map(|r| design.target_week(r)).collect();
    let naive = naive_abs_errors(design, split.train());
    let mase_scale = naive.iter().sum::<f64>() / naive.len().max(1) as f64;

    let tag = |s: Scheme, e: Error| e.tagged(format!("disease {} horizon {} scheme {}", job.disease, h, s));
    let matrix = submodel_matrix(&run, &actuals, &weeks)?;
    let n = matrix.n_rows();
    let offset = split.train_end;
    let fit_rows = split.combiner_fit().start - offset..split.combiner_fit().end - offset;
    let eval_rows = split.eval30_start - offset..n;

    let mut combined = Vec::new();
    let mut bg_weights = Vec::new();
    let mut combiners = Vec::new();
    let mut seeds = BTreeMap::new();
    for &scheme in &schemes {
        let series: Vec<f64> = match scheme {
            Scheme::P1 => (0..n)
                .map(|r| combine_equal(matrix.row(r)))
                .collect::<Result<_>>()
                .map_err(|e| tag(scheme, e))?,
            Scheme::P2 => (0..n)
                .map(|r| combine_median(matrix.row(r)))
                .collect::<Result<_>>()
                .map_err(|e| tag(scheme, e))?,
            Scheme::P3 | Scheme::P4 => {
                let path = bg_path(&matrix, scheme, h, config.p3_mode);
                let out = apply_weight_path(&matrix, &path);
                bg_weights.push((scheme, path));
                out
            }
            Scheme::P5 | Scheme::P6 | Scheme::P7 | Scheme::P8 => {
                let w = match scheme {
                    Scheme::P5 => fit_regression_combiner(&matrix, fit_rows.clone(), RegressionVariant::Intercept, h),
                    Scheme::P6 => fit_regression_combiner(&matrix, fit_rows.clone(), RegressionVariant::NoIntercept, h),
                    Scheme::P7 => fit_regression_combiner(&matrix, fit_rows.clone(), RegressionVariant::SumToOne, h),
                    _ => fit_aenet_combiner(
                        &matrix,
                        fit_rows.clone(),
                        h,
                        &PenaltySpec::new(PenaltyKind::AdaptiveElasticNet),
                    ),
                }
                .map_err(|e| tag(scheme, e))?;
                let out = eval_rows.clone().map(|r| w.combine(matrix.row(r))).collect();
                combiners.push(w);
                out
            }
            Scheme::P9 => {
                let seed = derive_seed(config.seed, &[job.disease, &h_label, "P9"]);
                seeds.insert(scheme.to_string(), seed);
                let params = ForestParams {
                    n_trees: config.rf_trees,
                    seed,
                    ..ForestParams::default()
                };
                let forest = fit_rf_combiner(&matrix, fit_rows.clone(), &params).map_err(|e| tag(scheme, e))?;
                eval_rows.clone().map(|r| forest.predict(matrix.row(r))).collect()
            }
            Scheme::P10(_) | Scheme::P11(_) => run
                .subset
                .iter()
                .find(|(s, _)| *s == scheme)
                .map(|(_, v)| v.clone())
                .expect("subset schemes run with the submodels"),
        };
        if series.iter().any(|v| !v.is_finite()) {
            return Err(tag(scheme, Error::NonFiniteInput));
        }
        combined.push((scheme, series));
    }
    for (s, seed) in &run.subset_seeds {
        seeds.insert(s.to_string(), *seed);
    }

    let manifest = PairManifest {
        disease: job.disease.to_string(),
        horizon: h,
        n_rows: split.n_rows,
        train_end: split.train_end,
        eval30_start: split.eval30_start,
        mase_scale,
        fits: run.summaries.clone(),
        combiners,
        seeds,
    };
    Ok(PairOutput {
        disease: job.disease.to_string(),
        horizon: h,
        split: split.clone(),
        target_weeks: weeks,
        actuals,
        submodels: run,
        combined,
        bg_weights,
        manifest,
    })
}

fn pair_records(pair: &PairOutput) -> Vec<ForecastRecord> {
    let mut out = Vec::new();
    let eval = pair.eval_rows();
    let record = |model_id: String, s: usize, forecast: f64| ForecastRecord {
        disease: pair.disease.clone(),
        horizon: pair.horizon,
        target_week: pair.target_weeks[s],
        model_id,
        forecast,
        actual: pair.actuals[s],
    };
    for (m, f) in pair.submodels.models.iter().zip(&pair.submodels.forecasts) {
        out.extend(f.iter().enumerate().map(|(s, v)| record(m.to_string(), s, *v)));
    }
    for (scheme, f) in &pair.combined {
        let start = if f.len() == pair.actuals.len() { 0 } else { eval.start };
        out.extend(
            f.iter()
                .enumerate()
                .map(|(i, v)| record(scheme.to_string(), start + i, *v)),
        );
    }
    out
}

/// Every pair job of one disease with its shared factor cache.
fn disease_jobs<'a>(
    panel: &SeriesPanel,
    disease: &'a str,
    config: &RunConfig,
) -> Result<(Vec<PairJob<'a>>, Option<PcaCache>)> {
    let jobs: Vec<PairJob<'_>> = config
        .horizons
        .iter()
        .map(|&h| {
            let design = LagDesign::build(panel, disease, h, PredictorSpec::C, config.lag_order)?;
            let split = SplitPlan::new(design.n_rows(), h, config.split_ratio)?;
            Ok(PairJob { disease, design, split })
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.tagged(format!("disease {disease}")))?;

    let cache = if config.models.contains(&ModelId::Factor) {
        let counts: Vec<usize> = jobs
            .iter()
            .flat_map(|j| expanding_schedule(&j.split).steps.into_iter().map(|s| s.fit_end))
            .collect();
        let base = LagDesign::build(panel, disease, 1, PredictorSpec::C, config.lag_order)?;
        Some(PcaCache::build(&base, &counts))
    } else {
        None
    };
    Ok((jobs, cache))
}

/// Runs the configured backtest end to end.
pub fn run_backtest(config: &RunConfig) -> Result<RunOutput> {
    config.validate()?;
    let started = Instant::now();
    let started_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let panel = config.load_panel()?;
    let diseases = config.target_diseases(&panel)?;
    // every (disease, horizon) pair is one task; output keeps disease order
    let run = || -> Result<Vec<PairOutput>> {
        let prepared: Vec<(Vec<PairJob<'_>>, Option<PcaCache>)> = diseases
            .iter()
            .map(|d| disease_jobs(&panel, d, config))
            .collect::<Result<_>>()?;
        let tasks: Vec<(&PairJob<'_>, Option<&PcaCache>)> = prepared
            .iter()
            .flat_map(|(jobs, cache)| jobs.iter().map(move |j| (j, cache.as_ref())))
            .collect();
        tasks
            .par_iter()
            .map(|(job, cache)| run_pair(job, config, *cache))
            .collect()
    };
    let (pairs, threads) = match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
            (pool.install(run)?, n)
        }
        None => (run()?, rayon::current_num_threads()),
    };

    let mut store = ForecastStore::new();
    for pair in &pairs {
        store.extend(pair_records(pair));
    }
    let mut manifest = RunManifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        config_hash: config.hash(),
        started_at,
        wall_clock_seconds: 0.0,
        threads,
        pairs: pairs.iter().map(|p| p.manifest.clone()).collect(),
    };
    let metrics = compute_metrics(&store, &manifest)?;
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    Ok(RunOutput {
        store,
        metrics,
        manifest,
        pairs,
    })
}
