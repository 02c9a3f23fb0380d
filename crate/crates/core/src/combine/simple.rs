//! Equal weights, median and Bates-Granger inverse-error weights.

use serde::{Deserialize, Serialize};

use super::ForecastMatrix;
use crate::error::{Error, Result};

fn check_finite(row: &[f64]) -> Result<()> {
    if row.is_empty() {
        return Err(Error::MissingForecasts("empty forecast row".into()));
    }
    if row.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

pub fn equal_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Arithmetic mean of the member forecasts.
pub fn combine_equal(row: &[f64]) -> Result<f64> {
    check_finite(row)?;
    Ok(row.iter().sum::<f64>() / row.len() as f64)
}

/// Median; for an even count, the mean of the two central order statistics.
pub fn combine_median(row: &[f64]) -> Result<f64> {
    check_finite(row)?;
    let mut v = row.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    Ok(if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    })
}

/// Inverse-error weights from per-model sums of squared errors over a window.
/// Models with a zero sum share all the weight equally. The normalizer is
/// summed in sorted order so permuting models permutes weights exactly.
pub fn bates_granger_weights(window_sums: &[f64]) -> Vec<f64> {
    let m = window_sums.len();
    let zeros = window_sums.iter().filter(|s| **s == 0.0).count();
    if zeros > 0 {
        let w = 1.0 / zeros as f64;
        return window_sums
            .iter()
            .map(|s| if *s == 0.0 { w } else { 0.0 })
            .collect();
    }
    let inv: Vec<f64> = window_sums.iter().map(|s| 1.0 / s).collect();
    let mut sorted = inv.clone();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return vec![1.0 / m as f64; m];
    }
    inv.iter().map(|v| v / total).collect()
}

/// Which past errors enter the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BgWindow {
    /// The `v` most recent errors.
    Recent(usize),
    /// Every error since the first forecast-set row.
    Expanding,
}

/// Where the window ends relative to the row being combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BgMode {
    /// Ends at row `r - h`: the latest error realized at row `r`'s origin.
    Feasible,
    /// Ends at row `r` itself, whose target is not yet observed.
    AsWritten,
}

/// Weight vector for every row of `matrix`. Rows with no error inside the
/// window get equal weights.
pub fn bates_granger_path(
    matrix: &ForecastMatrix,
    horizon: usize,
    window: BgWindow,
    mode: BgMode,
) -> Vec<Vec<f64>> {
    let m = matrix.n_models();
    let n = matrix.n_rows();
    let mut prefix = vec![0.0; (n + 1) * m];
    for r in 0..n {
        let row = matrix.row(r);
        for i in 0..m {
            let e = matrix.actuals[r] - row[i];
            prefix[(r + 1) * m + i] = prefix[r * m + i] + e * e;
        }
    }
    (0..n)
        .map(|r| {
            let end = match mode {
                BgMode::Feasible => r.checked_sub(horizon),
                BgMode::AsWritten => Some(r),
            };
            let Some(end) = end else {
                return equal_weights(m);
            };
            let start = match window {
                BgWindow::Recent(v) => (end + 1).saturating_sub(v.max(1)),
                BgWindow::Expanding => 0,
            };
            let sums: Vec<f64> = (0..m)
                .map(|i| {
                    if start == 0 {
                        prefix[(end + 1) * m + i]
                    } else {
                        // direct sum keeps short windows exact
                        (start..=end)
                            .map(|j| (matrix.actuals[j] - matrix.row(j)[i]).powi(2))
                            .sum()
                    }
                })
                .collect();
            bates_granger_weights(&sums)
        })
        .collect()
}
