//! Penalized least squares by coordinate descent on a standardized Gram system.
//!
//! Objective, with `n` fit rows and standardized predictors `Z`:
//!
//! ```text
//! (1/2n) ||y_c - Z b||^2 + lambda * ( alpha * sum_j w_j |b_j| + (1 - alpha) * R(b) )
//! ```
//!
//! where `R(b) = ||b||^2` for the ridge / lasso / elastic-net family and
//! `R(b) = sum_g sqrt(d_g) ||b_g||_2` for the sparse group lasso. The
//! intercept is absorbed by centering and never penalized.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{FitFlag, FitMeta, LinearModel};
use crate::data::LagDesign;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, max_eigenvalue, CrossProducts, Gram};

/// Weight assigned to a zero pilot coefficient.
pub const ADAPTIVE_WEIGHT_CAP: f64 = 1e6;
pub const DEFAULT_ALPHA_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
pub const DEFAULT_GRID_LEN: usize = 100;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Ridge,
    Lasso,
    #[serde(rename = "alasso")]
    AdaptiveLasso,
    #[serde(rename = "sgl")]
    SparseGroupLasso,
    #[serde(rename = "enet")]
    ElasticNet,
    #[serde(rename = "aenet")]
    AdaptiveElasticNet,
}

impl PenaltyKind {
    pub fn default_alphas(self) -> Vec<f64> {
        match self {
            PenaltyKind::Ridge => vec![0.0],
            PenaltyKind::Lasso | PenaltyKind::AdaptiveLasso => vec![1.0],
            _ => DEFAULT_ALPHA_GRID.to_vec(),
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(
            self,
            PenaltyKind::AdaptiveLasso | PenaltyKind::AdaptiveElasticNet
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdOptions {
    /// Stop when the largest squared change in fitted values caused by one
    /// coordinate during a sweep is at most `tol` times the total sum of
    /// squares of the target.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for CdOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_sweeps: 10_000,
        }
    }
}

impl CdOptions {
    pub fn tight() -> Self {
        Self {
            tol: 1e-26,
            max_sweeps: 100_000,
        }
    }
}

/// Fitting request for `fit_penalized`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    /// Candidate lambdas; `None` builds the default grid from `lambda_max`.
    pub lambda_grid: Option<Vec<f64>>,
    /// Candidate mixing weights in `[0, 1]`.
    pub alphas: Vec<f64>,
    /// Per-column l1 weights; derived from a pilot fit when absent.
    pub adaptive_weights: Option<Vec<f64>>,
    /// Group id per design column; defaults to one group per variable.
    pub groups: Option<Vec<usize>>,
    pub cd: CdOptions,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind) -> Self {
        Self {
            kind,
            lambda_grid: None,
            alphas: kind.default_alphas(),
            adaptive_weights: None,
            groups: None,
            cd: CdOptions::default(),
        }
    }

    pub fn with_lambdas(mut self, grid: Vec<f64>) -> Self {
        self.lambda_grid = Some(grid);
        self
    }

    pub fn with_alphas(mut self, alphas: Vec<f64>) -> Self {
        self.alphas = alphas;
        self
    }

    pub fn with_weights(mut self, w: Vec<f64>) -> Self {
        self.adaptive_weights = Some(w);
        self
    }

    pub fn with_groups(mut self, groups: Vec<usize>) -> Self {
        self.groups = Some(groups);
        self
    }

    pub fn with_cd(mut self, cd: CdOptions) -> Self {
        self.cd = cd;
        self
    }

    pub fn validate(&self, n_cols: usize) -> Result<()> {
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::InvalidConfig(
                "penalty mixing weights must lie in [0, 1]".into(),
            ));
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return Err(Error::InvalidConfig(
                    "lambda grid must be non-empty and non-negative".into(),
                ));
            }
        }
        if let Some(w) = &self.adaptive_weights {
            if w.len() != n_cols || w.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::InvalidConfig(
                    "adaptive weights must be positive, one per column".into(),
                ));
            }
        }
        if let Some(g) = &self.groups {
            if g.len() != n_cols {
                return Err(Error::LengthMismatch {
                    left: g.len(),
                    right: n_cols,
                });
            }
        }
        Ok(())
    }
}

/// Group membership lists from a group id per column (ids in first-seen order).
pub fn group_members(ids: &[usize]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (j, &g) in ids.iter().enumerate() {
        match order.iter().position(|&o| o == g) {
            Some(pos) => members[pos].push(j),
            None => {
                order.push(g);
                members.push(vec![j]);
            }
        }
    }
    members
}

/// One point on a regularization path.
#[derive(Debug, Clone, Copy)]
pub struct Penalty<'a> {
    pub lambda: f64,
    pub alpha: f64,
    pub weights: Option<&'a [f64]>,
    /// Sparse-group shape when present.
    pub groups: Option<&'a [Vec<usize>]>,
}

impl<'a> Penalty<'a> {
    pub fn elastic(lambda: f64, alpha: f64) -> Self {
        Self {
            lambda,
            alpha,
            weights: None,
            groups: None,
        }
    }

    fn w(&self, j: usize) -> f64 {
        self.weights.map_or(1.0, |w| w[j])
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let l1: f64 = beta
            .iter()
            .enumerate()
            .map(|(j, b)| self.w(j) * b.abs())
            .sum();
        let second = match self.groups {
            None => beta.iter().map(|b| b * b).sum::<f64>(),
            Some(groups) => groups
                .iter()
                .map(|g| {
                    let norm = g.iter().map(|&j| beta[j] * beta[j]).sum::<f64>().sqrt();
                    (g.len() as f64).sqrt() * norm
                })
                .sum(),
        };
        self.lambda * (self.alpha * l1 + (1.0 - self.alpha) * second)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdFit {
    pub beta: Vec<f64>,
    pub objective: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after every sweep.
    pub trace: Vec<f64>,
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Minimizes `gram.half_mse(b) + penalty.value(b)` starting from `warm`
/// (zero when absent). Zero-variance columns stay at zero.
pub fn coordinate_descent(
    gram: &Gram,
    penalty: &Penalty<'_>,
    warm: Option<&[f64]>,
    opts: &CdOptions,
) -> CdFit {
    let k = gram.k;
    let mut beta = match warm {
        Some(w) => w.to_vec(),
        None => vec![0.0; k],
    };
    for j in 0..k {
        if gram.zero[j] {
            beta[j] = 0.0;
        }
    }
    let mut gb = vec![0.0; k];
    for j in 0..k {
        if beta[j] != 0.0 {
            let col = &gram.g[j * k..(j + 1) * k];
            for i in 0..k {
                gb[i] += beta[j] * col[i];
            }
        }
    }
    let (sweeps, converged, trace) = match penalty.groups {
        None => cd_elastic(gram, penalty, &mut beta, &mut gb, opts),
        Some(groups) => cd_groups(gram, penalty, groups, &mut beta, &mut gb, opts),
    };
    let objective = *trace.last().unwrap_or(&objective_from(gram, penalty, &beta, &gb));
    CdFit {
        beta,
        objective,
        sweeps,
        converged,
        trace,
    }
}

fn objective_from(gram: &Gram, penalty: &Penalty<'_>, beta: &[f64], gb: &[f64]) -> f64 {
    let mut lin = 0.0;
    let mut quad = 0.0;
    for j in 0..gram.k {
        if beta[j] != 0.0 {
            lin += gram.c[j] * beta[j];
            quad += beta[j] * gb[j];
        }
    }
    0.5 * (gram.yy - 2.0 * lin + quad) + penalty.value(beta)
}

#[inline]
fn apply_delta(gram: &Gram, gb: &mut [f64], j: usize, delta: f64) {
    let k = gram.k;
    let col = &gram.g[j * k..(j + 1) * k];
    for (g, c) in gb.iter_mut().zip(col) {
        *g += delta * c;
    }
}

fn cd_elastic(
    gram: &Gram,
    penalty: &Penalty<'_>,
    beta: &mut [f64],
    gb: &mut [f64],
    opts: &CdOptions,
) -> (usize, bool, Vec<f64>) {
    let k = gram.k;
    let threshold = (opts.tol * gram.yy).sqrt().max(f64::MIN_POSITIVE);
    let l2 = 2.0 * penalty.lambda * (1.0 - penalty.alpha);
    let l1: Vec<f64> = (0..k)
        .map(|j| penalty.lambda * penalty.alpha * penalty.w(j))
        .collect();
    let live: Vec<usize> = (0..k)
        .filter(|&j| !gram.zero[j] && gram.at(j, j) > 0.0)
        .collect();

    let visit = |j: usize, beta: &mut [f64], gb: &mut [f64]| -> f64 {
        let gjj = gram.g[j * k + j];
        let rho = gram.c[j] - gb[j] + gjj * beta[j];
        let new = soft(rho, l1[j]) / (gjj + l2);
        let delta = new - beta[j];
        if delta != 0.0 {
            beta[j] = new;
            apply_delta(gram, gb, j, delta);
        }
        delta.abs() * gjj.sqrt()
    };

    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut active: Vec<usize> = Vec::with_capacity(k);
    loop {
        let mut moved = 0.0f64;
        for &j in &live {
            moved = moved.max(visit(j, beta, gb));
        }
        sweeps += 1;
        trace.push(objective_from(gram, penalty, beta, gb));
        if moved <= threshold {
            return (sweeps, true, trace);
        }
        if sweeps >= opts.max_sweeps {
            return (sweeps, false, trace);
        }
        active.clear();
        active.extend(live.iter().copied().filter(|&j| beta[j] != 0.0));
        loop {
            let mut moved = 0.0f64;
            for &j in &active {
                moved = moved.max(visit(j, beta, gb));
            }
            sweeps += 1;
            trace.push(objective_from(gram, penalty, beta, gb));
            if moved <= threshold {
                break;
            }
            if sweeps >= opts.max_sweeps {
                return (sweeps, false, trace);
            }
        }
    }
}

/// Inner proximal-gradient iterations per block visit.
const INNER_STEPS: usize = 50;

fn cd_groups(
    gram: &Gram,
    penalty: &Penalty<'_>,
    groups: &[Vec<usize>],
    beta: &mut [f64],
    gb: &mut [f64],
    opts: &CdOptions,
) -> (usize, bool, Vec<f64>) {
    let threshold = (opts.tol * gram.yy).sqrt().max(f64::MIN_POSITIVE);
    let (lambda, alpha) = (penalty.lambda, penalty.alpha);

    struct Block {
        cols: Vec<usize>,
        g: Vec<f64>,
        step: f64,
        group_pen: f64,
        l1: Vec<f64>,
    }
    let blocks: Vec<Block> = groups
        .iter()
        .filter_map(|members| {
            let cols: Vec<usize> = members.iter().copied().filter(|&j| !gram.zero[j]).collect();
            if cols.is_empty() {
                return None;
            }
            let m = cols.len();
            let mut g = vec![0.0; m * m];
            for (a, &i) in cols.iter().enumerate() {
                for (b, &j) in cols.iter().enumerate() {
                    g[a * m + b] = gram.at(i, j);
                }
            }
            let lip = max_eigenvalue(&g, m);
            Some(Block {
                step: if lip > 0.0 { 1.0 / lip } else { 0.0 },
                group_pen: (1.0 - alpha) * lambda * (members.len() as f64).sqrt(),
                l1: cols.iter().map(|&j| lambda * alpha * penalty.w(j)).collect(),
                cols,
                g,
            })
        })
        .collect();

    let mut trace = Vec::new();
    let mut sweeps = 0;
    let mut u = Vec::new();
    let mut b = Vec::new();
    let mut s = Vec::new();
    loop {
        let mut moved = 0.0f64;
        for blk in &blocks {
            let m = blk.cols.len();
            if blk.step == 0.0 {
                continue;
            }
            // partial residual correlation with the block's own contribution removed
            u.clear();
            for (a, &i) in blk.cols.iter().enumerate() {
                let own: f64 = (0..m).map(|c| blk.g[a * m + c] * beta[blk.cols[c]]).sum();
                u.push(gram.c[i] - gb[i] + own);
            }
            s.clear();
            s.extend(u.iter().zip(&blk.l1).map(|(v, t)| soft(*v, *t)));
            let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            b.clear();
            if norm <= blk.group_pen {
                b.resize(m, 0.0);
            } else {
                b.extend(blk.cols.iter().map(|&j| beta[j]));
                let t = blk.step;
                for _ in 0..INNER_STEPS {
                    let mut change = 0.0f64;
                    s.clear();
                    for a in 0..m {
                        let grad: f64 =
                            (0..m).map(|c| blk.g[a * m + c] * b[c]).sum::<f64>() - u[a];
                        s.push(soft(b[a] - t * grad, t * blk.l1[a]));
                    }
                    let ns = s.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let shrink = if ns > 0.0 {
                        (1.0 - t * blk.group_pen / ns).max(0.0)
                    } else {
                        0.0
                    };
                    for a in 0..m {
                        let nb = shrink * s[a];
                        change = change.max((nb - b[a]).abs() * blk.g[a * m + a].sqrt());
                        b[a] = nb;
                    }
                    if change <= 0.1 * threshold {
                        break;
                    }
                }
            }
            for (a, &j) in blk.cols.iter().enumerate() {
                let delta = b[a] - beta[j];
                if delta != 0.0 {
                    beta[j] = b[a];
                    apply_delta(gram, gb, j, delta);
                    moved = moved.max(delta.abs() * gram.at(j, j).sqrt());
                }
            }
        }
        sweeps += 1;
        trace.push(objective_from(gram, penalty, beta, gb));
        if moved <= threshold {
            return (sweeps, true, trace);
        }
        if sweeps >= opts.max_sweeps {
            return (sweeps, false, trace);
        }
    }
}

/// Ridge solution `(G + 2 lambda I) b = c` on the non-constant columns.
pub fn ridge_solve(gram: &Gram, lambda: f64) -> Vec<f64> {
    if lambda <= 0.0 {
        return gram.solve_ols().0;
    }
    let active: Vec<usize> = (0..gram.k).filter(|&j| !gram.zero[j]).collect();
    let m = active.len();
    let mut a = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for (r, &i) in active.iter().enumerate() {
        rhs[r] = gram.c[i];
        for (s, &j) in active.iter().enumerate() {
            a[r * m + s] = gram.at(i, j);
        }
        a[r * m + r] += 2.0 * lambda;
    }
    let sol = match cholesky(&a, m) {
        Some(l) => cholesky_solve(&l, &rhs, m),
        None => crate::linalg::pinv_solve(&a, &rhs, m),
    };
    let mut beta = vec![0.0; gram.k];
    for (r, &i) in active.iter().enumerate() {
        beta[i] = sol[r];
    }
    beta
}

/// Smallest lambda at which the all-zero vector is optimal.
pub fn lambda_max(gram: &Gram, alpha: f64, weights: Option<&[f64]>, groups: Option<&[Vec<usize>]>) -> f64 {
    match groups {
        None => {
            let a = alpha.max(1e-3);
            (0..gram.k)
                .filter(|&j| !gram.zero[j])
                .map(|j| gram.c[j].abs() / (a * weights.map_or(1.0, |w| w[j])))
                .fold(0.0, f64::max)
        }
        Some(groups) => groups
            .iter()
            .map(|g| group_lambda_max(gram, g, alpha))
            .fold(0.0, f64::max),
    }
}

/// Root of `||S(c_g, alpha*l)|| = (1 - alpha) * l * sqrt(d_g)` in `l`.
fn group_lambda_max(gram: &Gram, members: &[usize], alpha: f64) -> f64 {
    let c: Vec<f64> = members
        .iter()
        .map(|&j| if gram.zero[j] { 0.0 } else { gram.c[j] })
        .collect();
    let root_d = (members.len() as f64).sqrt();
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if cmax == 0.0 {
        return 0.0;
    }
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if alpha <= 0.0 {
        return norm / root_d;
    }
    let excess = |l: f64| {
        let s = c
            .iter()
            .map(|v| soft(*v, alpha * l).powi(2))
            .sum::<f64>()
            .sqrt();
        s - (1.0 - alpha) * l * root_d
    };
    let mut hi = cmax / alpha;
    if alpha < 1.0 {
        hi = hi.min(norm / ((1.0 - alpha) * root_d));
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

/// `len` log-spaced values from `lmax` down to `ratio * lmax`.
pub fn lambda_grid(lmax: f64, len: usize, ratio: f64) -> Vec<f64> {
    if !(lmax > 0.0) || len == 0 {
        return vec![0.0];
    }
    if len == 1 {
        return vec![lmax];
    }
    let step = ratio.ln() / (len - 1) as f64;
    (0..len).map(|i| lmax * (step * i as f64).exp()).collect()
}

/// `w_j = 1 / |b_j|`, capped.
pub fn adaptive_weights_from_ols(beta: &[f64]) -> Vec<f64> {
    beta.iter()
        .map(|b| {
            let w = 1.0 / b.abs();
            if w.is_finite() {
                w.min(ADAPTIVE_WEIGHT_CAP)
            } else {
                ADAPTIVE_WEIGHT_CAP
            }
        })
        .collect()
}

/// Solves one penalty point, dispatching ridge to its closed form.
pub fn solve_point(
    gram: &Gram,
    kind: PenaltyKind,
    penalty: &Penalty<'_>,
    warm: Option<&[f64]>,
    opts: &CdOptions,
) -> CdFit {
    if kind == PenaltyKind::Ridge {
        let beta = ridge_solve(gram, penalty.lambda);
        let mut gb = vec![0.0; gram.k];
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                apply_delta(gram, &mut gb, j, *b);
            }
        }
        let objective = objective_from(gram, penalty, &beta, &gb);
        return CdFit {
            beta,
            objective,
            sweeps: 0,
            converged: true,
            trace: vec![objective],
        };
    }
    coordinate_descent(gram, penalty, warm, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedFit {
    pub model: LinearModel,
    /// Coefficients in standardized coordinates, one per design column.
    pub beta: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    pub objective: f64,
    pub weights: Option<Vec<f64>>,
    pub meta: FitMeta,
}

/// Pilot weights for the adaptive kinds: OLS for the adaptive lasso,
/// the tuned elastic net (whose alpha is inherited) for the adaptive net.
pub(crate) fn pilot_weights(
    design: &LagDesign,
    fit_rows: Range<usize>,
    gram: &Gram,
    spec: &PenaltySpec,
) -> Result<(Vec<f64>, Option<f64>)> {
    match spec.kind {
        PenaltyKind::AdaptiveLasso => Ok((adaptive_weights_from_ols(&gram.solve_ols().0), None)),
        PenaltyKind::AdaptiveElasticNet => {
            let enet = PenaltySpec {
                kind: PenaltyKind::ElasticNet,
                adaptive_weights: None,
                groups: None,
                ..spec.clone()
            };
            let fit = fit_penalized(design, fit_rows, &enet)?;
            Ok((adaptive_weights_from_ols(&fit.beta), Some(fit.alpha)))
        }
        _ => Ok((Vec::new(), None)),
    }
}

/// Tunes lambda (and alpha) by time-series cross-validation on `fit_rows`,
/// then fits every design column at the selected point.
pub fn fit_penalized(
    design: &LagDesign,
    fit_rows: Range<usize>,
    spec: &PenaltySpec,
) -> Result<PenalizedFit> {
    let p = design.n_cols();
    spec.validate(p)?;
    if fit_rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: fit_rows.len(),
        });
    }
    let cols: Vec<usize> = (0..p).collect();
    let gram = CrossProducts::from_rows(design, fit_rows.clone()).gram(&cols);

    let resolved = super::tuning::resolve_spec(design, fit_rows.clone(), &gram, spec)?;
    let selection = super::tuning::select_lambda_tscv(design, fit_rows, &resolved)?;
    let members = resolved.groups.as_deref().map(group_members);
    let penalty = Penalty {
        lambda: selection.lambda,
        alpha: selection.alpha,
        weights: resolved.adaptive_weights.as_deref(),
        groups: if spec.kind == PenaltyKind::SparseGroupLasso {
            members.as_deref()
        } else {
            None
        },
    };
    let fit = solve_point(&gram, spec.kind, &penalty, None, &resolved.cd);
    let mut meta = FitMeta {
        lambda: Some(selection.lambda),
        alpha: Some(selection.alpha),
        flags: selection.flags.clone(),
        ..FitMeta::default()
    };
    if !fit.converged {
        meta.flag(FitFlag::NoConvergence);
    }
    if gram.zero.iter().any(|z| *z) {
        meta.flag(FitFlag::ZeroVarianceColumn);
    }
    let (intercept, coef) = gram.to_raw(&fit.beta);
    Ok(PenalizedFit {
        model: LinearModel {
            intercept,
            columns: cols,
            coef,
        },
        beta: fit.beta,
        lambda: selection.lambda,
        alpha: selection.alpha,
        objective: fit.objective,
        weights: resolved.adaptive_weights,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;
    use nalgebra::{DMatrix, DVector};
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_xy(n: usize, p: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = rng_from(seed);
        let x: Vec<f64> = (0..n * p).map(|_| rng.sample(StandardNormal)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let s: f64 = (0..p).map(|j| x[i * p + j] * (j as f64 - 4.0) * 0.3).sum();
                s + rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        (x, y)
    }

    fn closed_form_ridge(x: &[f64], y: &[f64], p: usize, lambda: f64) -> Vec<f64> {
        let n = y.len();
        let xm = DMatrix::from_row_slice(n, p, x);
        let ym = DVector::from_column_slice(y);
        let a = xm.transpose() * &xm + DMatrix::identity(p, p) * (2.0 * n as f64 * lambda);
        let b = xm.transpose() * ym;
        a.lu().solve(&b).unwrap().iter().copied().collect()
    }

    #[test]
    fn ridge_identity_design_halves_the_response() {
        // X = I2, y = (2, 4): (X'X/n + 2 lambda I) b = X'y/n; lambda = 1/4 gives b = y/2
        let x = [1.0, 0.0, 0.0, 1.0];
        let y = [2.0, 4.0];
        let gram = Gram::raw(&x, &y, 2);
        let pen = Penalty::elastic(0.25, 0.0);
        let fit = coordinate_descent(&gram, &pen, None, &CdOptions::tight());
        assert!((fit.beta[0] - 1.0).abs() < 1e-10);
        assert!((fit.beta[1] - 2.0).abs() < 1e-10);
        assert_eq!(ridge_solve(&gram, 0.25), vec![1.0, 2.0]);
    }

    #[test]
    fn ridge_cd_matches_closed_form() {
        for seed in 0..10 {
            let (x, y) = random_xy(40, 10, seed);
            let gram = Gram::raw(&x, &y, 10);
            let lambda = 0.05 * (seed + 1) as f64;
            let oracle = closed_form_ridge(&x, &y, 10, lambda);
            let cd = coordinate_descent(&gram, &Penalty::elastic(lambda, 0.0), None, &CdOptions::tight());
            let direct = ridge_solve(&gram, lambda);
            for j in 0..10 {
                assert!((cd.beta[j] - oracle[j]).abs() < 1e-8);
                assert!((direct[j] - oracle[j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lasso_kill_point_gives_exact_zero() {
        let (x, y) = random_xy(40, 10, 3);
        let gram = Gram::raw(&x, &y, 10);
        let lmax = lambda_max(&gram, 1.0, None, None);
        let fit = coordinate_descent(&gram, &Penalty::elastic(lmax, 1.0), None, &CdOptions::tight());
        assert!(fit.beta.iter().all(|b| *b == 0.0));
        let fit = coordinate_descent(&gram, &Penalty::elastic(0.9 * lmax, 1.0), None, &CdOptions::tight());
        assert!(fit.beta.iter().any(|b| *b != 0.0));
    }

    #[test]
    fn objective_trace_is_monotone() {
        let (x, y) = random_xy(60, 10, 9);
        let gram = Gram::raw(&x, &y, 10);
        let groups = group_members(&[0, 0, 1, 1, 1, 2, 2, 3, 3, 3]);
        for alpha in [0.0, 0.3, 1.0] {
            let pen = Penalty::elastic(0.05, alpha);
            let fit = coordinate_descent(&gram, &pen, None, &CdOptions::tight());
            assert!(fit.converged);
            for w in fit.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
            }
            let pen = Penalty { groups: Some(&groups), ..pen };
            let fit = coordinate_descent(&gram, &pen, None, &CdOptions::tight());
            for w in fit.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
            }
        }
    }

    #[test]
    fn group_kill_point() {
        let (x, y) = random_xy(50, 6, 4);
        let gram = Gram::raw(&x, &y, 6);
        let groups = group_members(&[0, 0, 0, 1, 1, 1]);
        for alpha in [0.0, 0.5, 0.95] {
            let lmax = lambda_max(&gram, alpha, None, Some(&groups));
            let pen = Penalty { lambda: lmax * 1.0000001, alpha, weights: None, groups: Some(&groups) };
            let fit = coordinate_descent(&gram, &pen, None, &CdOptions::tight());
            assert!(fit.beta.iter().all(|b| *b == 0.0), "alpha {alpha}");
            let pen = Penalty { lambda: lmax * 0.95, ..pen };
            let fit = coordinate_descent(&gram, &pen, None, &CdOptions::tight());
            assert!(fit.beta.iter().any(|b| *b != 0.0), "alpha {alpha}");
        }
    }

    #[test]
    fn adaptive_weights_invert_magnitudes() {
        let w = adaptive_weights_from_ols(&[0.5, -2.0, 0.0, 1e-9]);
        assert_eq!(w[0], 2.0);
        assert_eq!(w[1], 0.5);
        assert_eq!(w[2], ADAPTIVE_WEIGHT_CAP);
        assert_eq!(w[3], ADAPTIVE_WEIGHT_CAP);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(2.0, 100, 1e-4);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 2.0);
        assert!((g[99] - 2e-4).abs() < 1e-15);
        let r = g[1] / g[0];
        assert!(g.windows(2).all(|w| (w[1] / w[0] - r).abs() < 1e-12));
        assert_eq!(lambda_grid(0.0, 100, 1e-4), vec![0.0]);
    }

    #[test]
    fn spec_validation() {
        assert!(PenaltySpec::new(PenaltyKind::ElasticNet).with_alphas(vec![1.5]).validate(3).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Lasso).with_lambdas(vec![]).validate(3).is_err());
        assert!(PenaltySpec::new(PenaltyKind::AdaptiveLasso).with_weights(vec![1.0, 0.0, 1.0]).validate(3).is_err());
        assert!(PenaltySpec::new(PenaltyKind::SparseGroupLasso).with_groups(vec![0, 1]).validate(3).is_err());
        assert!(PenaltySpec::new(PenaltyKind::Ridge).validate(3).is_ok());
    }
}
