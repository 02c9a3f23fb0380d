//! Chronological cross-validation for the penalty level.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};

use super::penalized::{
    group_members, lambda_grid, lambda_max, pilot_weights, solve_point, Penalty, PenaltyKind,
    PenaltySpec, DEFAULT_GRID_LEN, DEFAULT_GRID_RATIO,
};
use super::FitFlag;
use crate::data::LagDesign;
use crate::error::{Error, Result};
use crate::linalg::{CrossProducts, Gram};

pub const CV_FOLDS: usize = 5;
pub const MIN_FOLD_ROWS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub alpha: f64,
    /// Lambda grid per alpha, descending.
    pub grids: Vec<Vec<f64>>,
    /// Mean validation MSE per alpha and grid point; empty on fallback.
    pub cv_mse: Vec<Vec<f64>>,
    pub flags: Vec<FitFlag>,
}

/// Fold layout over `n` rows: `(train_len, validation range)` pairs, each
/// validation block immediately following its training prefix after a gap
/// of `gap` rows. `None` when a fold would fall below `MIN_FOLD_ROWS`.
pub fn tscv_folds(n: usize, gap: usize) -> Option<Vec<(usize, Range<usize>)>> {
    let test = n / (CV_FOLDS + 1);
    if test < MIN_FOLD_ROWS {
        return None;
    }
    let mut folds = Vec::with_capacity(CV_FOLDS);
    for i in 0..CV_FOLDS {
        let val_start = n - (CV_FOLDS - i) * test;
        let train = val_start.checked_sub(gap)?;
        if train < MIN_FOLD_ROWS {
            return None;
        }
        folds.push((train, val_start..val_start + test));
    }
    Some(folds)
}

pub(crate) fn resolve_spec(
    design: &LagDesign,
    fit_rows: Range<usize>,
    gram: &Gram,
    spec: &PenaltySpec,
) -> Result<PenaltySpec> {
    let mut resolved = spec.clone();
    if spec.kind.is_adaptive() && spec.adaptive_weights.is_none() {
        let (w, alpha) = pilot_weights(design, fit_rows, gram, spec)?;
        resolved.adaptive_weights = Some(w);
        if let Some(a) = alpha {
            resolved.alphas = vec![a];
        }
    }
    if spec.kind == PenaltyKind::SparseGroupLasso && spec.groups.is_none() {
        resolved.groups = Some(design.variable_groups());
    }
    Ok(resolved)
}

/// Selects `(lambda, alpha)` minimizing mean validation MSE over five
/// expanding chronological folds. Ties go to the larger lambda, then the
/// earlier alpha.
pub fn select_lambda_tscv(
    design: &LagDesign,
    fit_rows: Range<usize>,
    spec: &PenaltySpec,
) -> Result<LambdaSelection> {
    let p = design.n_cols();
    spec.validate(p)?;
    let n = fit_rows.len();
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, got: n });
    }
    let cols: Vec<usize> = (0..p).collect();
    let full = CrossProducts::from_rows(design, fit_rows.clone());
    let gram = full.gram(&cols);
    let spec = resolve_spec(design, fit_rows.clone(), &gram, spec)?;
    let members = spec.groups.as_deref().map(group_members);
    let groups = if spec.kind == PenaltyKind::SparseGroupLasso {
        members.as_deref()
    } else {
        None
    };
    let weights = spec.adaptive_weights.as_deref();

    let grids: Vec<Vec<f64>> = spec
        .alphas
        .iter()
        .map(|&alpha| match &spec.lambda_grid {
            Some(g) => {
                let mut g = g.clone();
                g.sort_by(|a, b| b.total_cmp(a));
                g
            }
            None => lambda_grid(
                lambda_max(&gram, alpha, weights, groups),
                DEFAULT_GRID_LEN,
                DEFAULT_GRID_RATIO,
            ),
        })
        .collect();

    let gap = design.horizon.saturating_sub(1);
    let Some(folds) = tscv_folds(n, gap) else {
        let a = spec.alphas.len() / 2;
        return Ok(LambdaSelection {
            lambda: grids[a][grids[a].len() / 2],
            alpha: spec.alphas[a],
            grids,
            cv_mse: Vec::new(),
            flags: vec![FitFlag::TooFewRowsForCv],
        });
    };

    let start = fit_rows.start;
    let shift: Vec<f64> = (0..=p).map(|j| full.mean(j)).collect();
    let mut cp = CrossProducts::new(shift);
    let mut added = 0;
    let mut sums: Vec<Vec<f64>> = grids.iter().map(|g| vec![0.0; g.len()]).collect();
    let mut no_convergence = false;

    for (train_len, val) in &folds {
        while added < *train_len {
            let i = start + added;
            cp.add_row(design.row(i), design.target(i));
            added += 1;
        }
        let fold_gram = cp.gram(&cols);
        let zval = standardized_rows(design, &fold_gram, val.start + start..val.end + start);
        let yval: Vec<f64> = (val.start..val.end)
            .map(|i| design.target(start + i))
            .collect();
        let m = yval.len();
        let ridge = (spec.kind == PenaltyKind::Ridge).then(|| RidgePath::new(&fold_gram, &zval, m));

        for (a, &alpha) in spec.alphas.iter().enumerate() {
            let mut warm: Option<Vec<f64>> = None;
            for (li, &lambda) in grids[a].iter().enumerate() {
                let pred = match &ridge {
                    Some(path) => path.predict(lambda),
                    None => {
                        let pen = Penalty {
                            lambda,
                            alpha,
                            weights,
                            groups,
                        };
                        let fit = solve_point(&fold_gram, spec.kind, &pen, warm.as_deref(), &spec.cd);
                        no_convergence |= !fit.converged;
                        let pred = predict_rows(&zval, &fit.beta, fold_gram.y_mean, m);
                        warm = Some(fit.beta);
                        pred
                    }
                };
                let mse = pred
                    .iter()
                    .zip(&yval)
                    .map(|(f, y)| (y - f) * (y - f))
                    .sum::<f64>()
                    / m as f64;
                sums[a][li] += mse;
            }
        }
    }

    let mut best = (f64::INFINITY, 0usize, 0usize);
    for (a, row) in sums.iter_mut().enumerate() {
        for (li, s) in row.iter_mut().enumerate() {
            *s /= folds.len() as f64;
            if *s < best.0 {
                best = (*s, a, li);
            }
        }
    }
    let mut flags = Vec::new();
    if no_convergence {
        flags.push(FitFlag::NoConvergence);
    }
    Ok(LambdaSelection {
        lambda: grids[best.1][best.2],
        alpha: spec.alphas[best.1],
        grids,
        cv_mse: sums,
        flags,
    })
}

/// Rows standardized with the fold statistics; constant columns map to 0.
fn standardized_rows(design: &LagDesign, gram: &Gram, rows: Range<usize>) -> Vec<f64> {
    let k = gram.k;
    let mut z = Vec::with_capacity(rows.len() * k);
    for i in rows {
        let row = design.row(i);
        for j in 0..k {
            z.push(if gram.zero[j] {
                0.0
            } else {
                (row[j] - gram.mean[j]) / gram.sd[j]
            });
        }
    }
    z
}

fn predict_rows(z: &[f64], beta: &[f64], y_mean: f64, m: usize) -> Vec<f64> {
    let k = beta.len();
    let nz: Vec<usize> = (0..k).filter(|&j| beta[j] != 0.0).collect();
    (0..m)
        .map(|i| {
            let row = &z[i * k..(i + 1) * k];
            y_mean + nz.iter().map(|&j| row[j] * beta[j]).sum::<f64>()
        })
        .collect()
}

/// Ridge predictions along a lambda path from one eigendecomposition.
struct RidgePath {
    eig: Vec<f64>,
    vtc: Vec<f64>,
    zv: DMatrix<f64>,
    y_mean: f64,
}

impl RidgePath {
    fn new(gram: &Gram, zval: &[f64], m: usize) -> Self {
        let active: Vec<usize> = (0..gram.k).filter(|&j| !gram.zero[j]).collect();
        let q = active.len();
        let g = DMatrix::from_fn(q, q, |r, s| gram.at(active[r], active[s]));
        let SymmetricEigen {
            eigenvalues,
            eigenvectors,
        } = SymmetricEigen::new(g);
        let c = nalgebra::DVector::from_iterator(q, active.iter().map(|&j| gram.c[j]));
        let vtc = eigenvectors.transpose() * c;
        let z = DMatrix::from_fn(m, q, |i, s| zval[i * gram.k + active[s]]);
        let zv = z * eigenvectors;
        Self {
            eig: eigenvalues.iter().map(|e| e.max(0.0)).collect(),
            vtc: vtc.iter().copied().collect(),
            zv,
            y_mean: gram.y_mean,
        }
    }

    fn predict(&self, lambda: f64) -> Vec<f64> {
        let coef: Vec<f64> = self
            .eig
            .iter()
            .zip(&self.vtc)
            .map(|(e, v)| {
                let d = e + 2.0 * lambda;
                if d > 1e-12 * self.eig.iter().fold(0.0f64, |a, b| a.max(*b)).max(1e-300) {
                    v / d
                } else {
                    0.0
                }
            })
            .collect();
        (0..self.zv.nrows())
            .map(|i| {
                self.y_mean
                    + (0..self.zv.ncols())
                        .map(|s| self.zv[(i, s)] * coef[s])
                        .sum::<f64>()
            })
            .collect()
    }
}
