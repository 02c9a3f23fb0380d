//! Random-walk and rolling-mean benchmarks.

use std::ops::Range;

use super::{FitMeta, FittedSubmodel, ModelId, Predictor};
use crate::data::{Block, LagDesign};
use crate::error::{Error, Result};

/// Rolling window of the historical mean.
pub const HM_WINDOW: usize = 8;

fn require_rows(fit_rows: &Range<usize>) -> Result<()> {
    if fit_rows.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    Ok(())
}

/// Forecast equals the own series at the origin week, for every horizon.
pub fn fit_naive(design: &LagDesign, fit_rows: Range<usize>) -> Result<FittedSubmodel> {
    require_rows(&fit_rows)?;
    Ok(FittedSubmodel {
        id: ModelId::Naive,
        predictor: Predictor::Column(design.own_lag0()),
        meta: FitMeta::default(),
    })
}

/// Forecast is the mean of the most recent `HM_WINDOW` own values at the origin.
pub fn fit_historical_mean(design: &LagDesign, fit_rows: Range<usize>) -> Result<FittedSubmodel> {
    require_rows(&fit_rows)?;
    let cols: Vec<usize> = design
        .block_columns(Block::Own)
        .into_iter()
        .filter(|&j| design.columns[j].lag < HM_WINDOW)
        .collect();
    if cols.len() < HM_WINDOW {
        return Err(Error::InvalidConfig(format!(
            "historical mean needs {HM_WINDOW} own lags, design has {}",
            cols.len()
        )));
    }
    Ok(FittedSubmodel {
        id: ModelId::HistoricalMean,
        predictor: Predictor::Mean(cols),
        meta: FitMeta::default(),
    })
}
