//! Command-line front end: synthetic panel generation, backtests, the two
//! all-cause exercises and report regeneration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use hdcombo::harness::{
    emit_reports, read_manifest, run_aggregation_exercise, run_allcause_exercise, run_backtest,
    write_metrics_csv, ForecastStore, InputSource, RunConfig,
};
use hdcombo::synth::{generate_oracle_case, generate_panel, DGPSpec, OracleKind};
use hdcombo::{Error, PredictorSpec};
use serde::de::DeserializeOwned;

const EXIT_CONFIG: u8 = 2;
const EXIT_DATA: u8 = 3;

#[derive(Parser)]
#[command(name = "hdcombo", version, about = "Forecast combination backtests for weekly admission panels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic panel CSV.
    Generate(GenerateArgs),
    /// Run the full backtest and write all report files.
    Run(ConfigArgs),
    /// Forecast the all-cause total directly with the ten machine-learning models.
    ExerciseAllcause {
        #[command(flatten)]
        config: ConfigArgs,
        /// Add environmental lags to the all-cause design.
        #[arg(long)]
        exog: bool,
    },
    /// Score summed cause-specific forecasts against the direct all-cause models.
    ExerciseAggregate {
        #[command(flatten)]
        config: ConfigArgs,
        /// `forecasts.csv` of a completed run; a fresh backtest runs when absent.
        #[arg(long)]
        forecasts: Option<PathBuf>,
    },
    /// Regenerate report files from a run directory.
    Report {
        /// Directory holding `forecasts.csv` and `manifest.json`.
        #[arg(long)]
        from: PathBuf,
        /// Output directory; defaults to `--from`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value_t = 522)]
    weeks: usize,
    /// Keep only the first N diseases.
    #[arg(long)]
    diseases: Option<usize>,
    /// Generate an oracle panel instead: random_walk, pure_ar1 or factor_driven.
    #[arg(long)]
    oracle: Option<String>,
}

/// JSON config plus per-field overrides.
#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; a run manifest is accepted too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Panel CSV; replaces the synthetic input.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Synthetic panel length in weeks.
    #[arg(long)]
    weeks: Option<usize>,
    /// Seed of the synthetic data-generating process.
    #[arg(long)]
    dgp_seed: Option<u64>,
    /// Keep only the first N synthetic diseases.
    #[arg(long)]
    n_diseases: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    diseases: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    #[arg(long)]
    lag_order: Option<usize>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    combiners: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    p_values: Option<Vec<u8>>,
    /// feasible or as-written
    #[arg(long)]
    p3_mode: Option<String>,
    #[arg(long)]
    rf_trees: Option<usize>,
    #[arg(long)]
    gbm_trees: Option<usize>,
    #[arg(long)]
    knn_k: Option<usize>,
    /// first_step or every_step
    #[arg(long)]
    tuning: Option<String>,
    /// standard or squared
    #[arg(long)]
    mape: Option<String>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

fn config_error(msg: impl Into<String>) -> anyhow::Error {
    Error::InvalidConfig(msg.into()).into()
}

/// Parses a bare string through the type's serde representation.
fn enum_value<T: DeserializeOwned>(field: &str, raw: &str) -> anyhow::Result<T> {
    serde_json::from_value(serde_json::Value::String(raw.to_string()))
        .map_err(|_| config_error(format!("invalid value `{raw}` for --{field}")))
}

impl ConfigArgs {
    fn resolve(self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_path(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = self.input {
            cfg.input = InputSource::Csv(path);
        }
        if self.weeks.is_some() || self.dgp_seed.is_some() || self.n_diseases.is_some() {
            let InputSource::Synthetic(spec) = &cfg.input else {
                return Err(config_error("--weeks, --dgp-seed and --n-diseases need a synthetic input"));
            };
            let mut fresh = DGPSpec::desk(self.dgp_seed.unwrap_or(spec.seed), self.weeks.unwrap_or(spec.n_weeks));
            let keep = self.n_diseases.unwrap_or(spec.n_diseases());
            if keep == 0 {
                return Err(config_error("--n-diseases must be positive"));
            }
            fresh = fresh.truncated(keep);
            cfg.input = InputSource::Synthetic(fresh);
        }
        if self.diseases.is_some() {
            cfg.diseases = self.diseases;
        }
        if let Some(v) = self.horizons {
            cfg.horizons = v;
        }
        if let Some(v) = self.lag_order {
            cfg.lag_order = v;
        }
        if let Some(v) = self.split_ratio {
            cfg.split_ratio = v;
        }
        if let Some(v) = self.models {
            cfg.models = v
                .iter()
                .map(|m| m.parse().map_err(|_| config_error(format!("unknown model `{m}`"))))
                .collect::<anyhow::Result<_>>()?;
        }
        if let Some(v) = self.combiners {
            cfg.combiners = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.p_values {
            cfg.p_values = v;
        }
        if let Some(v) = &self.p3_mode {
            cfg.p3_mode = enum_value("p3-mode", v)?;
        }
        if let Some(v) = self.rf_trees {
            cfg.rf_trees = v;
        }
        if let Some(v) = self.gbm_trees {
            cfg.gbm_trees = v;
        }
        if let Some(v) = self.knn_k {
            cfg.knn_k = v;
        }
        if let Some(v) = &self.tuning {
            cfg.tuning = enum_value("tuning", v)?;
        }
        if let Some(v) = &self.mape {
            cfg.mape = enum_value("mape", v)?;
        }
        if let Some(v) = self.output_dir {
            cfg.output_dir = v;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let panel = match &args.oracle {
        Some(kind) => generate_oracle_case(enum_value::<OracleKind>("oracle", kind)?, args.seed, args.weeks)?.0,
        None => {
            let mut spec = DGPSpec::desk(args.seed, args.weeks);
            if let Some(n) = args.diseases {
                spec = spec.truncated(n);
            }
            generate_panel(&spec)?
        }
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    panel.write_csv_path(&args.out)?;
    eprintln!("wrote {} weeks x {} diseases to {}", panel.len(), panel.diseases().len(), args.out.display());
    Ok(())
}

fn run(cfg: RunConfig) -> anyhow::Result<()> {
    let out = run_backtest(&cfg)?;
    let metrics = emit_reports(&cfg.output_dir, &out.store, &out.manifest)?;
    eprintln!(
        "{} pairs, {} forecasts, {} metric rows in {:.1}s -> {}",
        out.pairs.len(),
        out.store.len(),
        metrics.len(),
        out.manifest.wall_clock_seconds,
        cfg.output_dir.display()
    );
    Ok(())
}

fn allcause(cfg: RunConfig, exog: bool) -> anyhow::Result<()> {
    let spec = if exog { PredictorSpec::B } else { PredictorSpec::A };
    let report = run_allcause_exercise(&cfg, spec)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let stem = if exog { "allcause_exog" } else { "allcause" };
    write_metrics_csv(cfg.output_dir.join(format!("{stem}_metrics.csv")), &report.metrics)?;
    write_json(&cfg.output_dir.join(format!("{stem}_metrics.json")), &report)?;
    eprintln!("{} metric rows -> {}", report.metrics.len(), cfg.output_dir.display());
    Ok(())
}

fn aggregate(cfg: RunConfig, forecasts: Option<PathBuf>) -> anyhow::Result<()> {
    let store = match forecasts {
        Some(path) => ForecastStore::read_csv_path(&path)?,
        None => run_backtest(&cfg)?.store,
    };
    let rows = run_aggregation_exercise(&cfg, &store)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("aggregate.json"), &rows)?;
    eprintln!("{} aggregate rows -> {}", rows.len(), cfg.output_dir.display());
    Ok(())
}

fn report(from: PathBuf, out: Option<PathBuf>) -> anyhow::Result<()> {
    let manifest = read_manifest(from.join("manifest.json"))?;
    let store = ForecastStore::read_csv_path(from.join("forecasts.csv"))?;
    let out = out.unwrap_or(from);
    emit_reports(&out, &store, &manifest)?;
    eprintln!("reports -> {}", out.display());
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Run(args) => run(args.resolve()?),
        Command::ExerciseAllcause { config, exog } => allcause(config.resolve()?, exog),
        Command::ExerciseAggregate { config, forecasts } => aggregate(config.resolve()?, forecasts),
        Command::Report { from, out } => report(from, out),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_data_error() => EXIT_DATA,
        Some(_) => EXIT_CONFIG,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
