//! High-dimensional point forecast combinations for weekly count panels.
//!
//! The crate is organized bottom-up: [`data`] builds lag designs and the
//! expanding-window schedule, [`models`] fits the sixteen individual
//! forecasters, [`combine`] maps their forecasts (or the raw predictors) to
//! combined forecasts, [`eval`] scores them, [`synth`] generates panels with a
//! known data-generating process and [`harness`] runs complete backtests.

pub mod combine;
pub mod data;
pub mod error;
pub mod eval;
pub mod harness;
pub mod linalg;
pub mod models;
pub mod seed;
pub mod synth;

pub use data::{
    build_lag_design, expanding_schedule, split_initial, standardize_columns, Block, ColumnStats,
    EpiWeek, ExpandingWindowSchedule, LagDesign, PredictorSpec, Series, SeriesPanel, SplitPlan,
};
pub use error::{Error, Result};
pub use models::{FitFlag, FitMeta, FittedSubmodel, LinearModel, ModelId, TreeEnsemble};
