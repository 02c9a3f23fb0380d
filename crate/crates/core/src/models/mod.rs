//! The 16-member submodel registry and the fitted-model representation.

mod baseline;
mod factor;
mod forest;
mod gbm;
mod knn;
mod ols;
pub mod penalized;
pub mod tree;
mod tuning;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

pub use baseline::{fit_historical_mean, fit_naive, HM_WINDOW};
pub use factor::{fit_factor_model, fit_factor_from_gram, FactorBasis, EXPLAINED_VARIANCE_TARGET};
pub use forest::{fit_forest_binned, fit_random_forest, ForestParams};
pub use gbm::{fit_gbm, fit_gbm_binned, GbmParams, Growth};
pub use knn::{knn_forecast, knn_forecast_standardized, KNN_DEFAULT_K};
pub use ols::{ar_model_id, fit_ols, fit_ols_ar, ols_from_gram, ols_from_solution, spec_columns};
pub use penalized::{
    adaptive_weights_from_ols, coordinate_descent, fit_penalized, lambda_grid, lambda_max,
    group_members, ridge_solve, solve_point, CdFit, CdOptions, Penalty, PenaltyKind, PenaltySpec,
    PenalizedFit, ADAPTIVE_WEIGHT_CAP, DEFAULT_ALPHA_GRID,
};
pub use tree::{BinnedMatrix, TreeEnsemble};
pub use tuning::{select_lambda_tscv, tscv_folds, LambdaSelection, CV_FOLDS};

/// Registry of individual forecasting models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ModelId {
    Naive,
    HistoricalMean,
    ArA,
    ArB,
    ArC,
    Ridge,
    Lasso,
    AdaptiveLasso,
    SparseGroupLasso,
    ElasticNet,
    AdaptiveElasticNet,
    Factor,
    RandomForest,
    Knn,
    GbmDepthWise,
    GbmLeafWise,
}

impl ModelId {
    pub const ALL: [ModelId; 16] = [
        ModelId::Naive,
        ModelId::HistoricalMean,
        ModelId::ArA,
        ModelId::ArB,
        ModelId::ArC,
        ModelId::Ridge,
        ModelId::Lasso,
        ModelId::AdaptiveLasso,
        ModelId::SparseGroupLasso,
        ModelId::ElasticNet,
        ModelId::AdaptiveElasticNet,
        ModelId::Factor,
        ModelId::RandomForest,
        ModelId::Knn,
        ModelId::GbmDepthWise,
        ModelId::GbmLeafWise,
    ];

    /// The machine-learning subset evaluated on the all-cause total.
    pub const MACHINE_LEARNING: [ModelId; 10] = [
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

    pub fn as_str(self) -> &'static str {
        match self {
            ModelId::Naive => "Naive",
            ModelId::HistoricalMean => "HM",
            ModelId::ArA => "AR_A",
            ModelId::ArB => "AR_B",
            ModelId::ArC => "AR_C",
            ModelId::Ridge => "Ridge",
            ModelId::Lasso => "LASSO",
            ModelId::AdaptiveLasso => "ALASSO",
            ModelId::SparseGroupLasso => "SGL",
            ModelId::ElasticNet => "ENET",
            ModelId::AdaptiveElasticNet => "AENET",
            ModelId::Factor => "PF",
            ModelId::RandomForest => "RF",
            ModelId::Knn => "KNN",
            ModelId::GbmDepthWise => "GBM_X",
            ModelId::GbmLeafWise => "GBM_L",
        }
    }

    pub fn penalty_kind(self) -> Option<PenaltyKind> {
        Some(match self {
            ModelId::Ridge => PenaltyKind::Ridge,
            ModelId::Lasso => PenaltyKind::Lasso,
            ModelId::AdaptiveLasso => PenaltyKind::AdaptiveLasso,
            ModelId::SparseGroupLasso => PenaltyKind::SparseGroupLasso,
            ModelId::ElasticNet => PenaltyKind::ElasticNet,
            ModelId::AdaptiveElasticNet => PenaltyKind::AdaptiveElasticNet,
            _ => return None,
        })
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        ModelId::ALL
            .iter()
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model id `{s}`")))
    }
}

impl From<ModelId> for String {
    fn from(m: ModelId) -> String {
        m.as_str().to_string()
    }
}

impl TryFrom<String> for ModelId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

/// Non-fatal conditions recorded while fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FitFlag {
    RankDeficient,
    NoConvergence,
    TooFewRowsForCv,
    FewerRowsThanK,
    DegeneratePca,
    CollinearForecasts,
    ZeroVarianceColumn,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factors: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub explained_variance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trees: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<FitFlag>,
}

impl FitMeta {
    pub fn flag(&mut self, flag: FitFlag) {
        if !self.flags.contains(&flag) {
            self.flags.push(flag);
            self.flags.sort();
        }
    }
}

/// Intercept plus raw-scale slopes on a subset of design columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub columns: Vec<usize>,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .columns
                .iter()
                .zip(&self.coef)
                .map(|(&j, b)| b * row[j])
                .sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub enum Predictor {
    /// Value of one design column (the own series at the origin week).
    Column(usize),
    /// Mean of the given design columns.
    Mean(Vec<usize>),
    Linear(LinearModel),
    Trees(TreeEnsemble),
}

/// Trained model tagged with its registry id; deterministic and immutable.
#[derive(Debug, Clone)]
pub struct FittedSubmodel {
    pub id: ModelId,
    pub predictor: Predictor,
    pub meta: FitMeta,
}

impl FittedSubmodel {
    /// Point forecast for one full design row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match &self.predictor {
            Predictor::Column(j) => row[*j],
            Predictor::Mean(cols) => {
                cols.iter().map(|&j| row[j]).sum::<f64>() / cols.len() as f64
            }
            Predictor::Linear(m) => m.predict(row),
            Predictor::Trees(t) => t.predict(row),
        }
    }
}
