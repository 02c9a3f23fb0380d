//! End-to-end backtests: configuration, expanding-window refits, combination,
//! scoring and report files.

mod backtest;
mod config;
mod engine;
mod exercises;
mod reports;
mod store;

pub use backtest::{run_backtest, PairManifest, PairOutput, RunManifest, RunOutput};
pub use config::{InputSource, RunConfig, TuningMode, MAX_HORIZON};
pub use engine::{run_submodels, EngineSettings, FitSummary, PcaCache, SubmodelRun};
pub use exercises::{
    aggregate_forecasts, run_aggregation_exercise, run_allcause_exercise, AggregateReport,
    AggregateSource, AllCauseReport, ALL_CAUSE, DIRECT_MODELS,
};
pub use reports::{
    bg_weight_records, compute_metrics, dm_table, emit_reports, read_manifest, write_dm_table,
    write_metrics_csv, DmCell, WeightRecord,
};
pub use store::{ForecastRecord, ForecastStore};

#[cfg(test)]
pub(crate) fn small_config(n_diseases: usize, horizons: Vec<usize>) -> RunConfig {
    RunConfig {
        input: InputSource::Synthetic(crate::synth::DGPSpec::desk(5, 150).truncated(n_diseases)),
        horizons,
        rf_trees: 10,
        gbm_trees: 20,
        ..RunConfig::default()
    }
}

#[cfg(test)]
pub(crate) fn small_run() -> &'static (RunConfig, RunOutput) {
    static RUN: std::sync::OnceLock<(RunConfig, RunOutput)> = std::sync::OnceLock::new();
    RUN.get_or_init(|| {
        let cfg = small_config(4, vec![1, 3]);
        let out = run_backtest(&cfg).unwrap();
        (cfg, out)
    })
}
