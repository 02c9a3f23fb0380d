//! Regression-based combiners: unrestricted least squares (with and without
//! intercept), sum-to-one least squares, adaptive elastic net and a random
//! forest on the forecast columns.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{CombinerWeights, ForecastMatrix, Scheme};
use crate::data::LagDesign;
use crate::error::{Error, Result};
use crate::models::{
    fit_penalized, fit_random_forest, FitFlag, ForestParams, PenaltyKind, PenaltySpec,
    TreeEnsemble,
};

/// Fit rows required for 16 forecast columns: one per weight, the
/// intercept, and one residual degree of freedom.
pub const MIN_COMBINER_ROWS: usize = 18;

/// Relative diagonal of R below which the forecast columns count as collinear.
const COLLINEAR_TOL: f64 = 1e-10;
/// Ridge added to unit-norm columns when they are collinear.
const FALLBACK_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegressionVariant {
    /// `y = a + sum w_i f_i`.
    Intercept,
    /// `y = sum w_i f_i`.
    NoIntercept,
    /// `y = a + sum w_i f_i` with `sum w_i = 1`.
    SumToOne,
}

impl RegressionVariant {
    pub fn scheme(self) -> Scheme {
        match self {
            RegressionVariant::Intercept => Scheme::P5,
            RegressionVariant::NoIntercept => Scheme::P6,
            RegressionVariant::SumToOne => Scheme::P7,
        }
    }
}

fn check_rows(matrix: &ForecastMatrix, rows: &Range<usize>) -> Result<()> {
    if rows.end > matrix.n_rows() {
        return Err(Error::LengthMismatch {
            left: rows.end,
            right: matrix.n_rows(),
        });
    }
    // MIN_COMBINER_ROWS for the full 16-model matrix
    let needed = matrix.n_models() + 2;
    if rows.len() < needed {
        return Err(Error::TooFewRows {
            needed,
            got: rows.len(),
        });
    }
    Ok(())
}

/// Least squares `x b ~ y` (row-major `n x k`). Columns are scaled to unit
/// norm before a thin QR; collinear columns switch to a tiny ridge.
fn least_squares(x: &[f64], y: &[f64], k: usize) -> (Vec<f64>, bool) {
    let n = y.len();
    if k == 0 {
        return (Vec::new(), false);
    }
    let mut xm = DMatrix::from_row_slice(n, k, x);
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            let s = xm.column(j).norm();
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    for (j, s) in scale.iter().enumerate() {
        xm.column_mut(j).unscale_mut(*s);
    }
    let yv = DVector::from_column_slice(y);
    let qr = xm.clone().qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..k).map(|j| r[(j, j)].abs()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let collinear = dmax == 0.0 || diag.iter().any(|d| *d <= COLLINEAR_TOL * dmax);
    let b = if collinear {
        let a = xm.transpose() * &xm + DMatrix::identity(k, k) * FALLBACK_RIDGE;
        let rhs = xm.transpose() * &yv;
        a.cholesky()
            .map(|c| c.solve(&rhs))
            .unwrap_or_else(|| DVector::zeros(k))
    } else {
        let qty = qr.q().transpose() * &yv;
        r.solve_upper_triangular(&qty).unwrap_or_else(|| DVector::zeros(k))
    };
    (b.iter().zip(&scale).map(|(b, s)| b / s).collect(), collinear)
}

/// Least-squares combination weights estimated on `rows` of the matrix.
pub fn fit_regression_combiner(
    matrix: &ForecastMatrix,
    rows: Range<usize>,
    variant: RegressionVariant,
    horizon: usize,
) -> Result<CombinerWeights> {
    check_rows(matrix, &rows)?;
    let m = matrix.n_models();
    let n = rows.len();
    let y = &matrix.actuals[rows.clone()];
    let (intercept, weights, collinear) = match variant {
        RegressionVariant::NoIntercept => {
            let x = &matrix.forecasts[rows.start * m..rows.end * m];
            let (w, c) = least_squares(x, y, m);
            (0.0, w, c)
        }
        RegressionVariant::Intercept => {
            // centering absorbs the intercept
            let means: Vec<f64> = (0..m)
                .map(|j| rows.clone().map(|i| matrix.row(i)[j]).sum::<f64>() / n as f64)
                .collect();
            let ym = y.iter().sum::<f64>() / n as f64;
            let mut x = Vec::with_capacity(n * m);
            for i in rows.clone() {
                x.extend(matrix.row(i).iter().zip(&means).map(|(f, mu)| f - mu));
            }
            let yc: Vec<f64> = y.iter().map(|v| v - ym).collect();
            let (w, c) = least_squares(&x, &yc, m);
            let a = ym - w.iter().zip(&means).map(|(w, mu)| w * mu).sum::<f64>();
            (a, w, c)
        }
        RegressionVariant::SumToOne => {
            // y - f_m = a + sum_{i<m} w_i (f_i - f_m), then w_m = 1 - sum w_i
            let k = m - 1;
            let mut x = Vec::with_capacity(n * k);
            let mut yt = Vec::with_capacity(n);
            for i in rows.clone() {
                let row = matrix.row(i);
                let last = row[k];
                x.extend(row[..k].iter().map(|f| f - last));
                yt.push(matrix.actuals[i] - last);
            }
            let means: Vec<f64> = (0..k)
                .map(|j| (0..n).map(|i| x[i * k + j]).sum::<f64>() / n as f64)
                .collect();
            let ym = yt.iter().sum::<f64>() / n as f64;
            for i in 0..n {
                for j in 0..k {
                    x[i * k + j] -= means[j];
                }
            }
            let yc: Vec<f64> = yt.iter().map(|v| v - ym).collect();
            let (mut w, c) = least_squares(&x, &yc, k);
            let a = ym - w.iter().zip(&means).map(|(w, mu)| w * mu).sum::<f64>();
            w.push(1.0 - w.iter().sum::<f64>());
            (a, w, c)
        }
    };
    let flags = if collinear {
        vec![FitFlag::CollinearForecasts]
    } else {
        Vec::new()
    };
    Ok(CombinerWeights {
        scheme: variant.scheme(),
        horizon,
        intercept,
        weights,
        fitted_on: rows,
        flags,
    })
}

fn forecast_design(matrix: &ForecastMatrix, rows: &Range<usize>, horizon: usize) -> Result<LagDesign> {
    let m = matrix.n_models();
    let names: Vec<String> = matrix.models.iter().map(|id| id.to_string()).collect();
    let mut design = LagDesign::from_matrix(
        &names,
        matrix.forecasts[rows.start * m..rows.end * m].to_vec(),
        matrix.actuals[rows.clone()].to_vec(),
    )?;
    // the cross-validation gap depends on the horizon
    design.horizon = horizon.max(1);
    Ok(design)
}

/// Adaptive elastic net on the forecast columns with an unpenalized intercept.
/// `spec` must be of the adaptive elastic-net kind.
pub fn fit_aenet_combiner(
    matrix: &ForecastMatrix,
    rows: Range<usize>,
    horizon: usize,
    spec: &PenaltySpec,
) -> Result<CombinerWeights> {
    if spec.kind != PenaltyKind::AdaptiveElasticNet {
        return Err(Error::InvalidConfig(format!(
            "forecast elastic-net combiner needs the aenet penalty, got {:?}",
            spec.kind
        )));
    }
    check_rows(matrix, &rows)?;
    let design = forecast_design(matrix, &rows, horizon)?;
    let fit = fit_penalized(&design, 0..rows.len(), spec)?;
    Ok(CombinerWeights {
        scheme: Scheme::P8,
        horizon,
        intercept: fit.model.intercept,
        weights: fit.model.coef,
        fitted_on: rows,
        flags: fit.meta.flags,
    })
}

/// Random forest from forecast columns to actuals. The ensemble predicts from
/// a forecast row in `ForecastMatrix::models` order.
pub fn fit_rf_combiner(
    matrix: &ForecastMatrix,
    rows: Range<usize>,
    params: &ForestParams,
) -> Result<TreeEnsemble> {
    check_rows(matrix, &rows)?;
    let design = forecast_design(matrix, &rows, 1)?;
    fit_random_forest(&design, 0..rows.len(), params)
}
