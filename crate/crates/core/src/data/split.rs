//! Chronological train/forecast split and the expanding-window schedule.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lag::LagDesign;
use crate::error::{Error, Result};

pub const DEFAULT_SPLIT_RATIO: f64 = 0.7;
const MIN_ROWS: usize = 10;

/// Row partition of one design: `[0, train_end)` is the initial training
/// block, `[train_end, n_rows)` the forecast set, and `eval30` its
/// chronological tail of `floor(0.3 * |forecast set|)` rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub n_rows: usize,
    pub horizon: usize,
    pub train_end: usize,
    pub eval30_start: usize,
}

impl SplitPlan {
    pub fn new(n_rows: usize, horizon: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "split ratio {ratio} must be inside (0, 1)"
            )));
        }
        if n_rows < MIN_ROWS {
            return Err(Error::TooFewRows {
                needed: MIN_ROWS,
                got: n_rows,
            });
        }
        let train_end = (ratio * n_rows as f64).floor() as usize;
        if train_end == 0 || train_end >= n_rows {
            return Err(Error::TooFewRows {
                needed: MIN_ROWS,
                got: n_rows,
            });
        }
        let forecast_len = n_rows - train_end;
        let eval_len = (0.3 * forecast_len as f64).floor() as usize;
        Ok(Self {
            n_rows,
            horizon,
            train_end,
            eval30_start: n_rows - eval_len,
        })
    }

    pub fn train(&self) -> Range<usize> {
        0..self.train_end
    }

    pub fn forecast_set(&self) -> Range<usize> {
        self.train_end..self.n_rows
    }

    pub fn eval30(&self) -> Range<usize> {
        self.eval30_start..self.n_rows
    }

    /// Forecast-set rows ahead of the evaluation tail whose targets are
    /// realized by the origin of the first evaluation row.
    pub fn combiner_fit(&self) -> Range<usize> {
        let embargo = self.horizon.saturating_sub(1);
        let end = self.eval30_start.saturating_sub(embargo).max(self.train_end);
        self.train_end..end
    }
}

/// Splits a design with the given training fraction (floor of `ratio * rows`).
pub fn split_initial(design: &LagDesign, ratio: f64) -> Result<SplitPlan> {
    SplitPlan::new(design.n_rows(), design.horizon, ratio)
}

/// One refit: fit on rows `[0, fit_end)`, forecast `predict_row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub predict_row: usize,
    pub fit_end: usize,
}

impl ScheduleStep {
    pub fn fit_rows(&self) -> Range<usize> {
        0..self.fit_end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpandingWindowSchedule {
    pub steps: Vec<ScheduleStep>,
}

/// One step per forecast-set row. A fit row `j` is admitted for the forecast
/// made at row `r` only when its target week is observed at `r`'s origin,
/// i.e. `j + h <= r`. For `h = 1` this is every earlier row; for longer
/// horizons the `h - 1` most recent rows wait until their targets arrive.
pub fn expanding_schedule(split: &SplitPlan) -> ExpandingWindowSchedule {
    let h = split.horizon.max(1);
    let steps = split
        .forecast_set()
        .map(|r| ScheduleStep {
            predict_row: r,
            fit_end: r + 1 - h,
        })
        .collect();
    ExpandingWindowSchedule { steps }
}
