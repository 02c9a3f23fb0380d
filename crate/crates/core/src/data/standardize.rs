//! Column z-scoring with statistics taken from fit rows only.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lag::LagDesign;
use crate::error::{Error, Result};

/// Per-column mean and sample standard deviation (n - 1 denominator).
/// Constant columns are flagged and carried with a zero scale, so their
/// standardized value is always 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub zero_variance: Vec<bool>,
}

/// Relative variance floor below which a column counts as constant.
pub(crate) const ZERO_VAR_REL: f64 = 1e-12;

impl ColumnStats {
    pub fn from_rows(design: &LagDesign, rows: Range<usize>) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::TooFewRows { needed: 2, got: n });
        }
        let p = design.n_cols();
        let mut mean = vec![0.0; p];
        for i in rows.clone() {
            for (m, v) in mean.iter_mut().zip(design.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut ss = vec![0.0; p];
        for i in rows {
            for ((s, v), m) in ss.iter_mut().zip(design.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        Ok(Self::from_moments(mean, ss, n))
    }

    /// From means and centered sums of squares over `n` rows.
    pub(crate) fn from_moments(mean: Vec<f64>, ss: Vec<f64>, n: usize) -> Self {
        let mut sd = Vec::with_capacity(mean.len());
        let mut zero_variance = Vec::with_capacity(mean.len());
        for (m, s) in mean.iter().zip(&ss) {
            let var = s / (n as f64 - 1.0);
            let scale = m.abs().max(1.0);
            if !(var > ZERO_VAR_REL * scale * scale) {
                sd.push(0.0);
                zero_variance.push(true);
            } else {
                sd.push(var.sqrt());
                zero_variance.push(false);
            }
        }
        Self {
            mean,
            sd,
            zero_variance,
        }
    }

    pub fn apply(&self, j: usize, value: f64) -> f64 {
        if self.zero_variance[j] {
            0.0
        } else {
            (value - self.mean[j]) / self.sd[j]
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, v)| self.apply(j, *v)).collect()
    }
}

/// Standardizes every row of `design` with statistics from `fit_rows`.
/// The target column is left in original units.
pub fn standardize_columns(
    design: &LagDesign,
    fit_rows: Range<usize>,
) -> Result<(LagDesign, ColumnStats)> {
    let stats = ColumnStats::from_rows(design, fit_rows)?;
    let mut x = Vec::with_capacity(design.x().len());
    for i in 0..design.n_rows() {
        x.extend(stats.apply_row(design.row(i)));
    }
    Ok((design.with_values(x), stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(cols: &[&[f64]]) -> LagDesign {
        let n = cols[0].len();
        let names: Vec<String> = (0..cols.len()).map(|j| format!("c{j}")).collect();
        let mut x = Vec::new();
        for i in 0..n {
            for c in cols {
                x.push(c[i]);
            }
        }
        LagDesign::from_matrix(&names, x, vec![0.0; n]).unwrap()
    }

    #[test]
    fn uses_sample_sd_from_fit_rows() {
        let d = design(&[&[1.0, 2.0, 3.0, 5.0], &[4.0, 4.0, 4.0, 9.0]]);
        let (z, stats) = standardize_columns(&d, 0..3).unwrap();
        assert_eq!(stats.mean[0], 2.0);
        assert_eq!(stats.sd[0], 1.0);
        // predict-row value 5 with (mean 2, sd 1)
        assert_eq!(z.row(3)[0], 3.0);
        // second column is constant over the fit rows
        assert!(stats.zero_variance[1]);
        assert_eq!(z.row(3)[1], 0.0);
        assert_eq!(z.targets(), d.targets());
    }

    #[test]
    fn needs_two_rows() {
        let d = design(&[&[1.0, 2.0]]);
        assert!(standardize_columns(&d, 0..1).is_err());
    }
}
