//! All-cause exercises: machine-learning models on the summed series, and
//! bottom-up aggregation of cause-specific forecasts against direct
//! all-cause forecasts.

use serde::{Deserialize, Serialize};

use super::engine::{run_submodels, EngineSettings};
use super::store::ForecastStore;
use super::RunConfig;
use crate::data::{EpiWeek, LagDesign, PredictorSpec, SplitPlan};
use crate::error::{Error, Result};
use crate::eval::{mape_with, mase, naive_abs_errors, EvalWindow, MetricReport};
use crate::models::ModelId;

pub const ALL_CAUSE: &str = "all_cause";

/// Models fitted directly on the all-cause series in the aggregation exercise.
pub const DIRECT_MODELS: [ModelId; 12] = [
    ModelId::Naive,
    ModelId::ArA,
    ModelId::Ridge,
    ModelId::Lasso,
    ModelId::AdaptiveLasso,
    ModelId::SparseGroupLasso,
    ModelId::ElasticNet,
    ModelId::AdaptiveElasticNet,
    ModelId::RandomForest,
    ModelId::Knn,
    ModelId::GbmDepthWise,
    ModelId::GbmLeafWise,
];

struct AllCauseFit {
    weeks: Vec<EpiWeek>,
    actuals: Vec<f64>,
    eval_len: usize,
    scale: f64,
    forecasts: Vec<(ModelId, Vec<f64>)>,
}

fn fit_all_cause(config: &RunConfig, horizon: usize, spec: PredictorSpec, models: &[ModelId]) -> Result<AllCauseFit> {
    let panel = config.load_panel()?.all_cause(ALL_CAUSE)?;
    let design = LagDesign::build(&panel, ALL_CAUSE, horizon, spec, config.lag_order)?;
    let split = SplitPlan::new(design.n_rows(), horizon, config.split_ratio)?;
    let settings = EngineSettings {
        disease: ALL_CAUSE,
        models,
        subset_schemes: &[],
        run_seed: config.seed,
        rf_trees: config.rf_trees,
        gbm_trees: config.gbm_trees,
        knn_k: config.knn_k,
        tuning: config.tuning,
        pca: None,
    };
    let run = run_submodels(&design, &split, &settings)?;
    let naive = naive_abs_errors(&design, split.train());
    Ok(AllCauseFit {
        weeks: split.forecast_set().map(|r| design.target_week(r)).collect(),
        actuals: split.forecast_set().map(|r| design.target(r)).collect(),
        eval_len: split.eval30().len(),
        scale: naive.iter().sum::<f64>() / naive.len().max(1) as f64,
        forecasts: run.models.into_iter().zip(run.forecasts).collect(),
    })
}

fn both_windows(
    actuals: &[f64],
    forecasts: &[f64],
    eval_len: usize,
    scale: f64,
    config: &RunConfig,
) -> Result<[(EvalWindow, f64, f64); 2]> {
    let n = actuals.len();
    let score = |a: &[f64], f: &[f64]| -> Result<(f64, f64)> {
        Ok((mape_with(a, f, config.mape)?, mase(a, f, &[scale])?))
    };
    let full = score(actuals, forecasts)?;
    let eval = score(&actuals[n - eval_len..], &forecasts[n - eval_len..])?;
    Ok([
        (EvalWindow::FullForecastSet, full.0, full.1),
        (EvalWindow::Eval30, eval.0, eval.1),
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllCauseReport {
    /// `A` (own lags only) or `B` (own and environmental lags).
    pub spec: PredictorSpec,
    pub metrics: Vec<MetricReport>,
}

/// The ten machine-learning models on the all-cause total, for every
/// configured horizon.
pub fn run_allcause_exercise(config: &RunConfig, spec: PredictorSpec) -> Result<AllCauseReport> {
    config.validate()?;
    if spec == PredictorSpec::C {
        return Err(Error::InvalidConfig(
            "the all-cause series has no cross-disease predictors".into(),
        ));
    }
    let mut metrics = Vec::new();
    for &h in &config.horizons {
        let fit = fit_all_cause(config, h, spec, &ModelId::MACHINE_LEARNING)?;
        for (id, f) in &fit.forecasts {
            for (window, mape, mase) in both_windows(&fit.actuals, f, fit.eval_len, fit.scale, config)? {
                metrics.push(MetricReport {
                    disease: ALL_CAUSE.to_string(),
                    horizon: h,
                    model: id.to_string(),
                    mape,
                    mase,
                    eval_window: window,
                });
            }
        }
    }
    Ok(AllCauseReport { spec, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregateSource {
    /// Sum of the cause-specific forecasts.
    Aggregated,
    /// Fitted on the all-cause series.
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub horizon: usize,
    pub model_id: String,
    pub source: AggregateSource,
    pub eval_window: EvalWindow,
    pub mape: f64,
    pub mase: f64,
}

/// Summed cause-specific forecasts and actuals of one model, by target week.
/// Every panel disease must be present in `store`.
pub fn aggregate_forecasts(
    store: &ForecastStore,
    diseases: &[String],
    horizon: usize,
    model_id: &str,
) -> Result<(Vec<EpiWeek>, Vec<f64>, Vec<f64>)> {
    let grouped = store.grouped();
    let mut weeks: Vec<EpiWeek> = Vec::new();
    let mut forecasts: Vec<f64> = Vec::new();
    let mut actuals: Vec<f64> = Vec::new();
    for d in diseases {
        let recs = grouped.get(&(d.as_str(), horizon, model_id)).ok_or_else(|| {
            Error::MissingCauseForecasts(format!("{model_id} for {d} at horizon {horizon}"))
        })?;
        if weeks.is_empty() {
            weeks = recs.iter().map(|r| r.target_week).collect();
            forecasts = vec![0.0; weeks.len()];
            actuals = vec![0.0; weeks.len()];
        }
        if recs.len() != weeks.len() || recs.iter().zip(&weeks).any(|(r, w)| r.target_week != *w) {
            return Err(Error::MissingCauseForecasts(format!(
                "{model_id} for {d} at horizon {horizon} covers different weeks"
            )));
        }
        for (i, r) in recs.iter().enumerate() {
            forecasts[i] += r.forecast;
            actuals[i] += r.actual;
        }
    }
    Ok((weeks, forecasts, actuals))
}

/// Bottom-up aggregation of every stored submodel against direct all-cause
/// fits of [`DIRECT_MODELS`] on own and environmental lags.
pub fn run_aggregation_exercise(config: &RunConfig, store: &ForecastStore) -> Result<Vec<AggregateReport>> {
    config.validate()?;
    let diseases = config.load_panel()?.disease_names();
    let mut out = Vec::new();
    for &h in &config.horizons {
        let direct = fit_all_cause(config, h, PredictorSpec::B, &DIRECT_MODELS)?;
        for id in &config.models {
            let (weeks, f, a) = aggregate_forecasts(store, &diseases, h, id.as_str())?;
            if weeks != direct.weeks {
                return Err(Error::MissingCauseForecasts(format!(
                    "{id} at horizon {h} does not cover the all-cause forecast set"
                )));
            }
            for (window, mape, mase) in both_windows(&a, &f, direct.eval_len, direct.scale, config)? {
                out.push(AggregateReport {
                    horizon: h,
                    model_id: id.to_string(),
                    source: AggregateSource::Aggregated,
                    eval_window: window,
                    mape,
                    mase,
                });
            }
        }
        for (id, f) in &direct.forecasts {
            for (window, mape, mase) in both_windows(&direct.actuals, f, direct.eval_len, direct.scale, config)? {
                out.push(AggregateReport {
                    horizon: h,
                    model_id: id.to_string(),
                    source: AggregateSource::Direct,
                    eval_window: window,
                    mape,
                    mase,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{small_config, small_run};

    #[test]
    fn all_cause_rejects_cross_disease_spec() {
        let cfg = small_config(2, vec![1]);
        assert!(run_allcause_exercise(&cfg, PredictorSpec::C).is_err());
    }

    #[test]
    fn all_cause_scores_ten_models_in_both_windows() {
        let cfg = small_config(2, vec![1, 2]);
        for spec in [PredictorSpec::A, PredictorSpec::B] {
            let rep = run_allcause_exercise(&cfg, spec).unwrap();
            assert_eq!(rep.metrics.len(), 2 * 10 * 2);
            assert!(rep.metrics.iter().all(|m| m.disease == ALL_CAUSE && m.mape.is_finite()));
            let ids: Vec<&str> = rep.metrics.iter().map(|m| m.model.as_str()).collect();
            assert!(!ids.contains(&"Naive") && ids.contains(&"GBM_L"));
        }
    }

    #[test]
    fn aggregation_sums_causes_week_by_week() {
        let (cfg, out) = small_run();
        let diseases = cfg.load_panel().unwrap().disease_names();
        let (weeks, f, a) = aggregate_forecasts(&out.store, &diseases, 3, "RF").unwrap();
        for (i, w) in weeks.iter().enumerate() {
            let (mut fs, mut as_) = (0.0, 0.0);
            for d in &diseases {
                let r = out.store.series(d, 3, "RF").into_iter().find(|r| r.target_week == *w).unwrap();
                fs += r.forecast;
                as_ += r.actual;
            }
            assert!((fs - f[i]).abs() <= 1e-9 * fs.abs().max(1.0));
            assert!((as_ - a[i]).abs() <= 1e-9 * as_.abs().max(1.0));
        }
        let mut missing = diseases.clone();
        missing.push("absent".into());
        assert!(matches!(
            aggregate_forecasts(&out.store, &missing, 3, "RF"),
            Err(Error::MissingCauseForecasts(_))
        ));
    }

    #[test]
    fn aggregation_report_covers_every_model() {
        let (cfg, out) = small_run();
        let rep = run_aggregation_exercise(cfg, &out.store).unwrap();
        let per_h = (cfg.models.len() + DIRECT_MODELS.len()) * 2;
        assert_eq!(rep.len(), cfg.horizons.len() * per_h);
        assert!(rep.iter().all(|r| r.mape.is_finite() && r.mase.is_finite()));
        let direct = rep.iter().filter(|r| r.source == AggregateSource::Direct).count();
        assert_eq!(direct, cfg.horizons.len() * DIRECT_MODELS.len() * 2);
    }
}
