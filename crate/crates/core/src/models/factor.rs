//! Principal-component factors of the exogenous block plus own lags.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ols::ols_from_gram;
use super::{FitFlag, FitMeta, FittedSubmodel, LinearModel, ModelId, Predictor};
use crate::data::{Block, LagDesign};
use crate::error::{Error, Result};
use crate::linalg::{CrossProducts, Gram};

/// Minimum cumulative share of variance the retained factors must explain.
pub const EXPLAINED_VARIANCE_TARGET: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorBasis {
    /// Design columns of the exogenous block.
    pub columns: Vec<usize>,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub zero: Vec<bool>,
    /// Row-major `columns.len() x r`; orthonormal columns.
    pub loadings: Vec<f64>,
    pub r: usize,
    /// Share of variance per component, descending, over all components.
    pub explained_variance_ratio: Vec<f64>,
}

impl FactorBasis {
    /// PCA of the standardized columns summarized by `gram`.
    pub fn from_gram(gram: &Gram, columns: Vec<usize>) -> Self {
        let active: Vec<usize> = (0..gram.k).filter(|&j| !gram.zero[j]).collect();
        let q = active.len();
        let mut basis = FactorBasis {
            columns,
            mean: gram.mean.clone(),
            sd: gram.sd.clone(),
            zero: gram.zero.clone(),
            loadings: Vec::new(),
            r: 0,
            explained_variance_ratio: Vec::new(),
        };
        if q == 0 {
            return basis;
        }
        let e = DMatrix::from_fn(q, q, |a, b| gram.at(active[a], active[b]));
        let eig = SymmetricEigen::new(e);
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
        let total: f64 = values.iter().sum();
        if !(total > 0.0) {
            return basis;
        }
        basis.explained_variance_ratio = values.iter().map(|v| v / total).collect();
        let mut cum = 0.0;
        let mut r = 0;
        for share in &basis.explained_variance_ratio {
            cum += share;
            r += 1;
            if cum >= EXPLAINED_VARIANCE_TARGET - 1e-12 {
                break;
            }
        }
        basis.r = r;
        let k = gram.k;
        let mut loadings = vec![0.0; k * r];
        for (s, &i) in order.iter().take(r).enumerate() {
            let v = eig.eigenvectors.column(i);
            // sign fixed so the largest-magnitude entry is positive
            let pivot = v.iter().fold(0.0f64, |m, x| if x.abs() > m.abs() { *x } else { m });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for (a, &j) in active.iter().enumerate() {
                loadings[j * r + s] = sign * v[a];
            }
        }
        basis.loadings = loadings;
        basis
    }

    pub fn cumulative_explained(&self) -> f64 {
        self.explained_variance_ratio[..self.r].iter().sum()
    }

    /// Factor scores of one raw design row.
    pub fn scores(&self, row: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.r];
        for (a, &j) in self.columns.iter().enumerate() {
            if self.zero[a] {
                continue;
            }
            let z = (row[j] - self.mean[a]) / self.sd[a];
            for s in 0..self.r {
                f[s] += z * self.loadings[a * self.r + s];
            }
        }
        f
    }
}

/// Regression on own lags plus factor scores, solved in the reduced space and
/// folded back onto the raw columns. `gram` covers `own` followed by
/// `basis.columns`, in that order.
pub fn fit_factor_from_gram(gram: &Gram, own: &[usize], basis: &FactorBasis) -> (LinearModel, FitMeta) {
    let n_own = own.len();
    let m = basis.columns.len();
    let r = basis.r;
    debug_assert_eq!(gram.k, n_own + m);
    let mut columns = own.to_vec();
    columns.extend(&basis.columns);
    if r == 0 {
        let sub = sub_gram(gram, n_own);
        let (model, mut meta) = ols_from_gram(&sub, own.to_vec());
        meta.flag(FitFlag::DegeneratePca);
        return (model, meta);
    }
    let k = n_own + r;
    let v = &basis.loadings;
    // G_e V  (m x r), then reduced blocks
    let mut gev = vec![0.0; m * r];
    for a in 0..m {
        let row = &gram.g[(n_own + a) * gram.k + n_own..(n_own + a + 1) * gram.k];
        for b in 0..m {
            let gab = row[b];
            if gab == 0.0 {
                continue;
            }
            for s in 0..r {
                gev[a * r + s] += gab * v[b * r + s];
            }
        }
    }
    let mut g = vec![0.0; k * k];
    let mut c = vec![0.0; k];
    for i in 0..n_own {
        c[i] = gram.c[i];
        for j in 0..n_own {
            g[i * k + j] = gram.at(i, j);
        }
        for s in 0..r {
            let val: f64 = (0..m).map(|b| gram.at(i, n_own + b) * v[b * r + s]).sum();
            g[i * k + n_own + s] = val;
            g[(n_own + s) * k + i] = val;
        }
    }
    for s in 0..r {
        c[n_own + s] = (0..m).map(|a| v[a * r + s] * gram.c[n_own + a]).sum();
        for t in s..r {
            let val: f64 = (0..m).map(|a| v[a * r + s] * gev[a * r + t]).sum();
            g[(n_own + s) * k + n_own + t] = val;
            g[(n_own + t) * k + n_own + s] = val;
        }
    }
    let mut zero: Vec<bool> = gram.zero[..n_own].to_vec();
    zero.extend(std::iter::repeat_n(false, r));
    let reduced = Gram {
        k,
        n: gram.n,
        g,
        c,
        yy: gram.yy,
        y_mean: gram.y_mean,
        mean: vec![0.0; k],
        sd: vec![1.0; k],
        zero,
    };
    let (b_red, deficient) = reduced.solve_ols();
    let mut beta = vec![0.0; gram.k];
    beta[..n_own].copy_from_slice(&b_red[..n_own]);
    for a in 0..m {
        beta[n_own + a] = (0..r).map(|s| v[a * r + s] * b_red[n_own + s]).sum();
    }
    let (intercept, coef) = gram.to_raw(&beta);
    let mut meta = FitMeta {
        factors: Some(r),
        explained_variance: Some(basis.cumulative_explained()),
        ..FitMeta::default()
    };
    if deficient {
        meta.flag(FitFlag::RankDeficient);
    }
    (
        LinearModel {
            intercept,
            columns,
            coef,
        },
        meta,
    )
}

/// Leading `k x k` block of a Gram system.
fn sub_gram(gram: &Gram, k: usize) -> Gram {
    let mut g = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            g[i * k + j] = gram.at(i, j);
        }
    }
    Gram {
        k,
        n: gram.n,
        g,
        c: gram.c[..k].to_vec(),
        yy: gram.yy,
        y_mean: gram.y_mean,
        mean: gram.mean[..k].to_vec(),
        sd: gram.sd[..k].to_vec(),
        zero: gram.zero[..k].to_vec(),
    }
}

/// Factor model on `fit_rows`: PCA of the environmental and cross-disease
/// lags, then least squares on own lags plus the retained scores.
pub fn fit_factor_model(design: &LagDesign, fit_rows: Range<usize>) -> Result<(FactorBasis, FittedSubmodel)> {
    if fit_rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: fit_rows.len(),
        });
    }
    let own = design.block_columns(Block::Own);
    let mut exog = design.block_columns(Block::Env);
    exog.extend(design.block_columns(Block::Cross));
    let cp = CrossProducts::from_rows(design, fit_rows);
    let basis = FactorBasis::from_gram(&cp.gram(&exog), exog.clone());
    let mut all = own.clone();
    all.extend(&exog);
    let (model, meta) = fit_factor_from_gram(&cp.gram(&all), &own, &basis);
    Ok((
        basis,
        FittedSubmodel {
            id: ModelId::Factor,
            predictor: Predictor::Linear(model),
            meta,
        },
    ))
}
