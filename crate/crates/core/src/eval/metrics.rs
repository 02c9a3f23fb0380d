use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::data::LagDesign;
use crate::error::{Error, Result};

/// Evaluation window over the forecast set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalWindow {
    FullForecastSet,
    /// The final 30% of the forecast set.
    Eval30,
}

impl fmt::Display for EvalWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalWindow::FullForecastSet => "full_forecast_set",
            EvalWindow::Eval30 => "eval30",
        })
    }
}

/// Absolute percentage errors, or their squares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapeKind {
    #[default]
    Standard,
    Squared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub disease: String,
    pub horizon: usize,
    pub model: String,
    pub mape: f64,
    pub mase: f64,
    pub eval_window: EvalWindow,
}

fn check_pair(actuals: &[f64], forecasts: &[f64]) -> Result<()> {
    if actuals.len() != forecasts.len() {
        return Err(Error::LengthMismatch {
            left: actuals.len(),
            right: forecasts.len(),
        });
    }
    if actuals.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    if actuals.iter().chain(forecasts).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

/// `100 * mean |(y - f) / y|`.
pub fn mape(actuals: &[f64], forecasts: &[f64]) -> Result<f64> {
    mape_with(actuals, forecasts, MapeKind::Standard)
}

pub fn mape_with(actuals: &[f64], forecasts: &[f64], kind: MapeKind) -> Result<f64> {
    check_pair(actuals, forecasts)?;
    let mut total = 0.0;
    for (i, (y, f)) in actuals.iter().zip(forecasts).enumerate() {
        if *y == 0.0 {
            return Err(Error::ZeroActual(i));
        }
        let r = ((y - f) / y).abs();
        total += match kind {
            MapeKind::Standard => r,
            MapeKind::Squared => r * r,
        };
    }
    Ok(100.0 * total / actuals.len() as f64)
}

/// Mean absolute error scaled by the mean of `naive_abs_errors`.
pub fn mase(actuals: &[f64], forecasts: &[f64], naive_abs_errors: &[f64]) -> Result<f64> {
    check_pair(actuals, forecasts)?;
    let denom = naive_abs_errors.iter().sum::<f64>() / naive_abs_errors.len().max(1) as f64;
    if !(denom.is_finite() && denom > 0.0) {
        return Err(Error::ZeroDenominator);
    }
    let mae = actuals
        .iter()
        .zip(forecasts)
        .map(|(y, f)| (y - f).abs())
        .sum::<f64>()
        / actuals.len() as f64;
    Ok(mae / denom)
}

/// `|y_{t+h} - y_t|` over `rows` of a design: the h-step naive errors.
pub fn naive_abs_errors(design: &LagDesign, rows: Range<usize>) -> Vec<f64> {
    let own = design.own_lag0();
    rows.map(|i| (design.target(i) - design.row(i)[own]).abs())
        .collect()
}
