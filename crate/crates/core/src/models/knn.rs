//! k-nearest-neighbour forecasts in standardized predictor space.

use std::ops::Range;

use super::{FitFlag, FitMeta};
use crate::data::{ColumnStats, LagDesign};
use crate::error::{Error, Result};

pub const KNN_DEFAULT_K: usize = 5;

/// Mean target of the `k` fit rows closest to `query` (a raw design row).
/// Distances use fit-row standardization; ties go to the earlier row.
pub fn knn_forecast(
    design: &LagDesign,
    fit_rows: Range<usize>,
    query: &[f64],
    k: usize,
) -> Result<(f64, FitMeta)> {
    if fit_rows.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    if fit_rows.len() == 1 {
        let mut meta = FitMeta::default();
        if k > 1 {
            meta.flag(FitFlag::FewerRowsThanK);
        }
        return Ok((design.target(fit_rows.start), meta));
    }
    let stats = ColumnStats::from_rows(design, fit_rows.clone())?;
    knn_forecast_standardized(design, fit_rows, query, k, &stats)
}

pub fn knn_forecast_standardized(
    design: &LagDesign,
    fit_rows: Range<usize>,
    query: &[f64],
    k: usize,
    stats: &ColumnStats,
) -> Result<(f64, FitMeta)> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be positive".into()));
    }
    if query.len() != design.n_cols() {
        return Err(Error::LengthMismatch {
            left: query.len(),
            right: design.n_cols(),
        });
    }
    let live: Vec<(usize, f64, f64)> = (0..design.n_cols())
        .filter(|&j| !stats.zero_variance[j])
        .map(|j| (j, stats.mean[j], 1.0 / stats.sd[j]))
        .collect();
    let q: Vec<f64> = live.iter().map(|&(j, m, s)| (query[j] - m) * s).collect();
    let mut dist: Vec<(f64, usize)> = fit_rows
        .clone()
        .map(|i| {
            let row = design.row(i);
            let d: f64 = live
                .iter()
                .zip(&q)
                .map(|(&(j, m, s), qv)| {
                    let z = (row[j] - m) * s - qv;
                    z * z
                })
                .sum();
            (d, i)
        })
        .collect();
    let mut meta = FitMeta::default();
    let take = if dist.len() < k {
        meta.flag(FitFlag::FewerRowsThanK);
        dist.len()
    } else {
        k
    };
    let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if take < dist.len() {
        dist.select_nth_unstable_by(take - 1, by_distance);
        dist.truncate(take);
    }
    let forecast = dist.iter().map(|&(_, i)| design.target(i)).sum::<f64>() / take as f64;
    Ok((forecast, meta))
}
