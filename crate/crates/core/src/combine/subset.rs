//! Complete subset regressions and random projections over the exogenous
//! predictor blocks, with the target's own lags always included.
//!
//! Every candidate regression shares the own-lag block, so it is partialled
//! out once per fit (Frisch-Waugh-Lovell). A candidate then only needs the
//! residualized Gram of its selected or projected exogenous columns.

use std::ops::Range;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{Block, LagDesign};
use crate::error::{Error, Result};
use crate::linalg::{solve_symmetric, CrossProducts, Gram};
use crate::seed::rng_from;

/// Candidate regressions averaged per forecast when the full set is larger.
pub const CANDIDATE_CAP: usize = 1000;
/// Gaussian matrices drawn per block.
pub const RP_DRAWS: usize = 100;

/// `C(n, k)`; zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// `C(n_env, p) * C(n_cross, p)`.
pub fn csr_candidate_count(n_env: usize, n_cross: usize, p: usize) -> u64 {
    binomial(n_env as u64, p as u64) * binomial(n_cross as u64, p as u64)
}

/// The `rank`-th `k`-subset of `0..n` in lexicographic order.
fn unrank_combination(n: usize, k: usize, mut rank: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let left = k - slot - 1;
        loop {
            let block = binomial((n - next - 1) as u64, left as u64);
            if rank < block {
                break;
            }
            rank -= block;
            next += 1;
        }
        out.push(next);
        next += 1;
    }
    out
}

/// One candidate: selected environmental and cross-disease variables.
pub type SubsetCandidate = (Vec<usize>, Vec<usize>);

fn candidate_at(n_env: usize, n_cross: usize, p: usize, index: u64) -> SubsetCandidate {
    let per_env = binomial(n_cross as u64, p as u64);
    (
        unrank_combination(n_env, p, index / per_env),
        unrank_combination(n_cross, p, index % per_env),
    )
}

/// Every candidate in lexicographic (env, cross) order.
pub fn enumerate_csr_candidates(n_env: usize, n_cross: usize, p: usize) -> Vec<SubsetCandidate> {
    (0..csr_candidate_count(n_env, n_cross, p))
        .map(|i| candidate_at(n_env, n_cross, p, i))
        .collect()
}

fn check_p(p: usize, n_env: usize, n_cross: usize) -> Result<()> {
    if p == 0 || p > n_env || p > n_cross {
        return Err(Error::InvalidConfig(format!(
            "subset size {p} needs 1..={} variables per block",
            n_env.min(n_cross)
        )));
    }
    Ok(())
}

/// Candidate subsets for one (disease, horizon); fixed across forecast steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetPlan {
    pub p: usize,
    pub n_env: usize,
    pub n_cross: usize,
    /// Size of the complete candidate set.
    pub total: u64,
    /// Candidates averaged, in lexicographic order.
    pub candidates: Vec<SubsetCandidate>,
}

impl SubsetPlan {
    /// All candidates when there are at most `cap`, else `cap` drawn without
    /// replacement.
    pub fn new(n_env: usize, n_cross: usize, p: usize, cap: usize, seed: u64) -> Result<Self> {
        check_p(p, n_env, n_cross)?;
        let total = csr_candidate_count(n_env, n_cross, p);
        let candidates = if total <= cap as u64 {
            enumerate_csr_candidates(n_env, n_cross, p)
        } else {
            let mut rng = rng_from(seed);
            let mut picked: Vec<usize> = sample(&mut rng, total as usize, cap).into_vec();
            picked.sort_unstable();
            picked
                .into_iter()
                .map(|i| candidate_at(n_env, n_cross, p, i as u64))
                .collect()
        };
        Ok(Self {
            p,
            n_env,
            n_cross,
            total,
            candidates,
        })
    }
}

/// Gaussian projection matrices for both blocks and the sampled pairings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionPlan {
    pub p: usize,
    pub k_env: usize,
    pub k_cross: usize,
    /// `RP_DRAWS` row-major `k_env x p` matrices.
    pub env: Vec<Vec<f64>>,
    /// `RP_DRAWS` row-major `k_cross x p` matrices.
    pub cross: Vec<Vec<f64>>,
    /// (env draw, cross draw) pairs averaged, sorted.
    pub pairs: Vec<(usize, usize)>,
}

impl ProjectionPlan {
    pub fn new(k_env: usize, k_cross: usize, p: usize, draws: usize, cap: usize, seed: u64) -> Result<Self> {
        if p == 0 || k_env == 0 || k_cross == 0 || draws == 0 {
            return Err(Error::InvalidConfig(
                "random projections need a positive size and non-empty blocks".into(),
            ));
        }
        let mut rng = rng_from(seed);
        let mut draw = |k: usize| -> Vec<Vec<f64>> {
            (0..draws)
                .map(|_| (0..k * p).map(|_| rng.sample(StandardNormal)).collect())
                .collect()
        };
        let env = draw(k_env);
        let cross = draw(k_cross);
        let total = draws * draws;
        let mut picked: Vec<usize> = if total <= cap {
            (0..total).collect()
        } else {
            sample(&mut rng, total, cap).into_vec()
        };
        picked.sort_unstable();
        Ok(Self {
            p,
            k_env,
            k_cross,
            env,
            cross,
            pairs: picked.into_iter().map(|i| (i / draws, i % draws)).collect(),
        })
    }
}

/// Exogenous least-squares system with the own-lag block partialled out,
/// plus the partialled query row. All quantities are in standardized
/// coordinates of the fit rows.
#[derive(Debug, Clone)]
pub struct PartialledSystem {
    /// Forecast of the own-lags-only regression.
    pub base: f64,
    /// Exogenous design columns in system order: environmental, then cross.
    pub columns: Vec<usize>,
    /// Positions (into `columns`) of each environmental variable's lags.
    pub env_vars: Vec<Vec<usize>>,
    pub cross_vars: Vec<Vec<usize>>,
    k: usize,
    /// Residualized Gram, row-major `k x k`.
    r: Vec<f64>,
    /// Residualized cross-product with the target.
    c: Vec<f64>,
    /// Residualized standardized query.
    z: Vec<f64>,
}

/// Symmetric pseudoinverse of a small block.
fn pinv(a: &[f64], m: usize) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    let eig = DMatrix::from_row_slice(m, m, a).symmetric_eigen();
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-12 * top.max(f64::MIN_POSITIVE) * m as f64;
    let mut out = vec![0.0; m * m];
    for (l, v) in eig.eigenvalues.iter().zip(eig.eigenvectors.column_iter()) {
        if *l <= tol {
            continue;
        }
        for i in 0..m {
            for j in 0..m {
                out[i * m + j] += v[i] * v[j] / l;
            }
        }
    }
    out
}

impl PartialledSystem {
    /// `gram` must cover every design column in design order and come from
    /// the fit rows; `query` is the raw design row being forecast.
    pub fn new(design: &LagDesign, gram: &Gram, query: &[f64]) -> Self {
        assert_eq!(gram.k, design.n_cols());
        let own = design.block_columns(Block::Own);
        let env_groups = design.block_variables(Block::Env);
        let cross_groups = design.block_variables(Block::Cross);
        let mut columns = Vec::new();
        let mut positions = |groups: &[Vec<usize>]| -> Vec<Vec<usize>> {
            groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|&j| {
                            columns.push(j);
                            columns.len() - 1
                        })
                        .collect()
                })
                .collect()
        };
        let env_vars = positions(&env_groups);
        let cross_vars = positions(&cross_groups);

        let std = |j: usize| {
            if gram.zero[j] {
                0.0
            } else {
                (query[j] - gram.mean[j]) / gram.sd[j]
            }
        };
        let o = own.len();
        let k = columns.len();
        let g_oo: Vec<f64> = own.iter().flat_map(|&a| own.iter().map(move |&b| gram.at(a, b))).collect();
        let inv = pinv(&g_oo, o);
        let z_o: Vec<f64> = own.iter().map(|&j| std(j)).collect();
        let c_o: Vec<f64> = own.iter().map(|&j| gram.c[j]).collect();
        let inv_c: Vec<f64> = (0..o).map(|a| (0..o).map(|b| inv[a * o + b] * c_o[b]).sum()).collect();
        let inv_z: Vec<f64> = (0..o).map(|a| (0..o).map(|b| inv[a * o + b] * z_o[b]).sum()).collect();
        let base = gram.y_mean + z_o.iter().zip(&inv_c).map(|(z, b)| z * b).sum::<f64>();

        // a[s] = G_oo^+ G_o,x[s], stored per exogenous column
        let a: Vec<Vec<f64>> = columns
            .iter()
            .map(|&x| {
                (0..o)
                    .map(|i| (0..o).map(|j| inv[i * o + j] * gram.at(own[j], x)).sum())
                    .collect()
            })
            .collect();
        let mut r = vec![0.0; k * k];
        for s in 0..k {
            for t in s..k {
                let adj: f64 = (0..o).map(|i| gram.at(columns[s], own[i]) * a[t][i]).sum();
                let v = gram.at(columns[s], columns[t]) - adj;
                r[s * k + t] = v;
                r[t * k + s] = v;
            }
        }
        let c: Vec<f64> = (0..k)
            .map(|s| {
                let x = columns[s];
                gram.c[x] - (0..o).map(|i| gram.at(x, own[i]) * inv_c[i]).sum::<f64>()
            })
            .collect();
        let z: Vec<f64> = (0..k)
            .map(|s| {
                let x = columns[s];
                std(x) - (0..o).map(|i| gram.at(x, own[i]) * inv_z[i]).sum::<f64>()
            })
            .collect();
        Self {
            base,
            columns,
            env_vars,
            cross_vars,
            k,
            r,
            c,
            z,
        }
    }

    /// Builds the system from `fit_rows` of the design for row `predict_row`.
    pub fn fit(design: &LagDesign, fit_rows: Range<usize>, predict_row: usize) -> Self {
        let cols: Vec<usize> = (0..design.n_cols()).collect();
        let gram = CrossProducts::from_rows(design, fit_rows).gram(&cols);
        Self::new(design, &gram, design.row(predict_row))
    }

    pub fn n_exog(&self) -> usize {
        self.k
    }

    pub fn n_env_columns(&self) -> usize {
        self.env_vars.iter().map(Vec::len).sum()
    }

    pub fn n_cross_columns(&self) -> usize {
        self.cross_vars.iter().map(Vec::len).sum()
    }

    /// Forecast of OLS on own lags plus the exogenous positions `sel`.
    /// Singular candidate systems use the pseudoinverse.
    pub fn subset_forecast(&self, sel: &[usize]) -> f64 {
        let m = sel.len();
        let mut a = vec![0.0; m * m];
        for (i, &s) in sel.iter().enumerate() {
            for (j, &t) in sel.iter().enumerate() {
                a[i * m + j] = self.r[s * self.k + t];
            }
        }
        let b: Vec<f64> = sel.iter().map(|&s| self.c[s]).collect();
        let (beta, _) = solve_symmetric(&a, &b, m);
        self.base + sel.iter().zip(&beta).map(|(&s, b)| self.z[s] * b).sum::<f64>()
    }

    /// Forecast of OLS on own lags plus `q` derived regressors whose loadings
    /// on the exogenous columns are the columns of `t` (row-major `k x q`).
    pub fn projected_forecast(&self, t: &[f64], q: usize) -> f64 {
        let k = self.k;
        // rt = R t, k x q
        let mut rt = vec![0.0; k * q];
        for s in 0..k {
            let row = &self.r[s * k..(s + 1) * k];
            for u in 0..k {
                let v = row[u];
                if v == 0.0 {
                    continue;
                }
                for j in 0..q {
                    rt[s * q + j] += v * t[u * q + j];
                }
            }
        }
        self.solve_projected(t, &rt, q)
    }

    fn solve_projected(&self, t: &[f64], rt: &[f64], q: usize) -> f64 {
        let k = self.k;
        let mut a = vec![0.0; q * q];
        let mut b = vec![0.0; q];
        let mut zq = vec![0.0; q];
        for s in 0..k {
            for i in 0..q {
                let ti = t[s * q + i];
                if ti == 0.0 {
                    continue;
                }
                b[i] += ti * self.c[s];
                zq[i] += ti * self.z[s];
                for j in 0..q {
                    a[i * q + j] += ti * rt[s * q + j];
                }
            }
        }
        let (beta, _) = solve_symmetric(&a, &b, q);
        self.base + zq.iter().zip(&beta).map(|(z, b)| z * b).sum::<f64>()
    }

    /// Loadings matrix (`k x 2p`) placing an environmental projection in the
    /// first `p` columns and a cross-disease projection in the last `p`.
    #[cfg(test)]
    fn block_loadings(&self, env: &[f64], cross: &[f64], p: usize) -> Vec<f64> {
        let q = 2 * p;
        let mut t = vec![0.0; self.k * q];
        let flat = |vars: &[Vec<usize>]| vars.iter().flatten().copied().collect::<Vec<_>>();
        for (i, s) in flat(&self.env_vars).into_iter().enumerate() {
            t[s * q..s * q + p].copy_from_slice(&env[i * p..(i + 1) * p]);
        }
        for (i, s) in flat(&self.cross_vars).into_iter().enumerate() {
            t[s * q + p..(s + 1) * q].copy_from_slice(&cross[i * p..(i + 1) * p]);
        }
        t
    }
}

/// Mean forecast over the plan's candidate subsets (complete subset regressions).
pub fn csr_forecast(system: &PartialledSystem, plan: &SubsetPlan) -> Result<f64> {
    if plan.n_env != system.env_vars.len() || plan.n_cross != system.cross_vars.len() {
        return Err(Error::LengthMismatch {
            left: plan.n_env + plan.n_cross,
            right: system.env_vars.len() + system.cross_vars.len(),
        });
    }
    let mut sel = Vec::new();
    let mut total = 0.0;
    for (env, cross) in &plan.candidates {
        sel.clear();
        for &v in env {
            sel.extend_from_slice(&system.env_vars[v]);
        }
        for &v in cross {
            sel.extend_from_slice(&system.cross_vars[v]);
        }
        total += system.subset_forecast(&sel);
    }
    Ok(total / plan.candidates.len() as f64)
}

/// Mean forecast over the plan's projection pairs (random projections).
pub fn rp_forecast(system: &PartialledSystem, plan: &ProjectionPlan) -> Result<f64> {
    if plan.k_env != system.n_env_columns() || plan.k_cross != system.n_cross_columns() {
        return Err(Error::LengthMismatch {
            left: plan.k_env + plan.k_cross,
            right: system.n_exog(),
        });
    }
    let p = plan.p;
    let q = 2 * p;
    let k = system.k;
    let flat = |vars: &[Vec<usize>]| vars.iter().flatten().copied().collect::<Vec<_>>();
    let (ie, ic) = (flat(&system.env_vars), flat(&system.cross_vars));
    let r = |a: usize, b: usize| system.r[a * k + b];

    // per draw D over block positions `idx`: D'R D (p x p), D'c and D'z
    let own_block = |d: &[f64], idx: &[usize]| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut rd = vec![0.0; idx.len() * p];
        for (u, &su) in idx.iter().enumerate() {
            for (i, &si) in idx.iter().enumerate() {
                let v = r(su, si);
                for j in 0..p {
                    rd[u * p + j] += v * d[i * p + j];
                }
            }
        }
        let mut dd = vec![0.0; p * p];
        let (mut dc, mut dz) = (vec![0.0; p], vec![0.0; p]);
        for (u, &su) in idx.iter().enumerate() {
            for i in 0..p {
                let du = d[u * p + i];
                dc[i] += du * system.c[su];
                dz[i] += du * system.z[su];
                for j in 0..p {
                    dd[i * p + j] += du * rd[u * p + j];
                }
            }
        }
        (dd, dc, dz)
    };
    // R_ce E, k_cross x p, so the off-diagonal block of a pair is (R_ce E)' C
    let cross_env = |e: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; ic.len() * p];
        for (u, &su) in ic.iter().enumerate() {
            for (i, &si) in ie.iter().enumerate() {
                let v = r(su, si);
                for j in 0..p {
                    out[u * p + j] += v * e[i * p + j];
                }
            }
        }
        out
    };

    let mut env_parts: Vec<Option<_>> = vec![None; plan.env.len()];
    let mut cross_parts: Vec<Option<_>> = vec![None; plan.cross.len()];
    let mut a = vec![0.0; q * q];
    let mut b = vec![0.0; q];
    let mut total = 0.0;
    for &(ea, cb) in &plan.pairs {
        let (ee, rce) = env_parts[ea]
            .get_or_insert_with(|| (own_block(&plan.env[ea], &ie), cross_env(&plan.env[ea])));
        let cc = cross_parts[cb].get_or_insert_with(|| own_block(&plan.cross[cb], &ic));
        let cross = &plan.cross[cb];
        for i in 0..p {
            for j in 0..p {
                a[i * q + j] = ee.0[i * p + j];
                a[(p + i) * q + p + j] = cc.0[i * p + j];
                let m: f64 = (0..ic.len()).map(|u| rce[u * p + i] * cross[u * p + j]).sum();
                a[i * q + p + j] = m;
                a[(p + j) * q + i] = m;
            }
            b[i] = ee.1[i];
            b[p + i] = cc.1[i];
        }
        let (beta, _) = solve_symmetric(&a, &b, q);
        let zq = ee.2.iter().chain(&cc.2);
        total += system.base + zq.zip(&beta).map(|(z, b)| z * b).sum::<f64>();
    }
    Ok(total / plan.pairs.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_lag_design, week_range, EpiWeek, PredictorSpec, Series, SeriesPanel};
    use crate::seed::rng_from;
    use itertools::Itertools;
    use nalgebra::DVector;
    use std::collections::HashSet;

    fn random_panel(n: usize, n_dis: usize, n_env: usize, seed: u64) -> SeriesPanel {
        let mut rng = rng_from(seed);
        let mut walk = |level: f64| -> Vec<f64> {
            let mut v = level;
            (0..n)
                .map(|_| {
                    v = 0.7 * v + 0.3 * level + rng.sample::<f64, _>(StandardNormal) * 5.0;
                    v
                })
                .collect()
        };
        let diseases = (0..n_dis)
            .map(|d| Series::new(format!("d{d:02}"), walk(100.0 + 10.0 * d as f64)))
            .collect();
        let env = (0..n_env)
            .map(|e| Series::new(format!("e{e:02}"), walk(20.0 + e as f64)))
            .collect();
        SeriesPanel::new(week_range(EpiWeek::new(2010, 1).unwrap(), n), diseases, env).unwrap()
    }

    /// OLS with intercept on raw columns, predicting one raw row.
    fn direct_ols(design: &LagDesign, rows: Range<usize>, cols: &[usize], query: &[f64]) -> f64 {
        let n = rows.len();
        let x = DMatrix::from_fn(n, cols.len() + 1, |i, j| {
            if j == 0 {
                1.0
            } else {
                design.row(rows.start + i)[cols[j - 1]]
            }
        });
        let y = DVector::from_iterator(n, rows.clone().map(|i| design.target(i)));
        let beta = x.clone().svd(true, true).solve(&y, 1e-12).unwrap();
        beta[0] + cols.iter().enumerate().map(|(j, &c)| beta[j + 1] * query[c]).sum::<f64>()
    }

    #[test]
    fn candidate_counts() {
        assert_eq!(csr_candidate_count(12, 15, 1), 180);
        assert_eq!(csr_candidate_count(12, 15, 2), 6930);
        assert_eq!(csr_candidate_count(12, 15, 3), 100_100);
        assert_eq!(binomial(5, 7), 0);
        assert_eq!(binomial(52, 5), 2_598_960);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        for p in 1..=2 {
            let ours: HashSet<SubsetCandidate> = enumerate_csr_candidates(12, 15, p).into_iter().collect();
            let brute: HashSet<SubsetCandidate> = (0..12)
                .combinations(p)
                .cartesian_product((0..15).combinations(p))
                .collect();
            assert_eq!(ours, brute);
            assert_eq!(ours.len() as u64, csr_candidate_count(12, 15, p));
        }
        // lexicographic unranking
        let all: Vec<Vec<usize>> = (0..7).combinations(3).collect();
        for (rank, c) in all.iter().enumerate() {
            assert_eq!(&unrank_combination(7, 3, rank as u64), c);
        }
    }

    #[test]
    fn plans_sample_without_replacement_and_are_seeded() {
        let p1 = SubsetPlan::new(12, 15, 1, CANDIDATE_CAP, 3).unwrap();
        assert_eq!(p1.candidates.len(), 180);
        for p in [2, 3] {
            let plan = SubsetPlan::new(12, 15, p, CANDIDATE_CAP, 11).unwrap();
            assert_eq!(plan.candidates.len(), 1000);
            let unique: HashSet<_> = plan.candidates.iter().collect();
            assert_eq!(unique.len(), 1000);
            assert!(plan.candidates.iter().all(|(e, c)| e.len() == p && c.len() == p));
            assert_eq!(plan, SubsetPlan::new(12, 15, p, CANDIDATE_CAP, 11).unwrap());
            assert_ne!(plan, SubsetPlan::new(12, 15, p, CANDIDATE_CAP, 12).unwrap());
        }
        assert!(SubsetPlan::new(12, 15, 0, CANDIDATE_CAP, 1).is_err());

        let rp = ProjectionPlan::new(96, 120, 2, RP_DRAWS, CANDIDATE_CAP, 5).unwrap();
        assert_eq!(rp.env.len(), 100);
        assert!(rp.env.iter().all(|m| m.len() == 96 * 2));
        assert!(rp.cross.iter().all(|m| m.len() == 120 * 2));
        assert_eq!(rp.pairs.len(), 1000);
        assert_eq!(rp.pairs.iter().collect::<HashSet<_>>().len(), 1000);
        assert_eq!(rp, ProjectionPlan::new(96, 120, 2, RP_DRAWS, CANDIDATE_CAP, 5).unwrap());
    }

    #[test]
    fn partialled_candidates_match_direct_ols() {
        let panel = random_panel(90, 4, 3, 8);
        let design = build_lag_design(&panel, "d01", 2, PredictorSpec::C).unwrap();
        let rows = 0..60;
        let query = design.row(70).to_vec();
        let system = PartialledSystem::fit(&design, rows.clone(), 70);
        assert_eq!(system.n_exog(), (3 + 3) * 8);
        let own = design.block_columns(Block::Own);
        let env = design.block_variables(Block::Env);
        let cross = design.block_variables(Block::Cross);

        let plan = SubsetPlan::new(3, 3, 1, CANDIDATE_CAP, 0).unwrap();
        let mut mean = 0.0;
        for (e, c) in &plan.candidates {
            let mut cols = own.clone();
            cols.extend(&env[e[0]]);
            cols.extend(&cross[c[0]]);
            let direct = direct_ols(&design, rows.clone(), &cols, &query);
            let mut sel: Vec<usize> = system.env_vars[e[0]].clone();
            sel.extend(&system.cross_vars[c[0]]);
            let ours = system.subset_forecast(&sel);
            assert!((ours - direct).abs() < 1e-7 * direct.abs().max(1.0), "{ours} vs {direct}");
            mean += direct / 9.0;
        }
        let csr = csr_forecast(&system, &plan).unwrap();
        assert!((csr - mean).abs() < 1e-7 * mean.abs());
        // own lags only
        assert!((system.subset_forecast(&[]) - direct_ols(&design, rows, &own, &query)).abs() < 1e-8 * mean.abs());
    }

    #[test]
    fn projections_match_direct_ols_on_standardized_blocks() {
        let panel = random_panel(90, 4, 3, 21);
        let design = build_lag_design(&panel, "d02", 1, PredictorSpec::C).unwrap();
        let rows = 0..70;
        let system = PartialledSystem::fit(&design, rows.clone(), 75);
        let plan = ProjectionPlan::new(24, 24, 2, 3, 4, 9).unwrap();
        assert_eq!(plan.pairs.len(), 4);

        let cp = CrossProducts::from_rows(&design, rows.clone());
        let all: Vec<usize> = (0..design.n_cols()).collect();
        let gram = cp.gram(&all);
        let own = design.block_columns(Block::Own);
        let env = design.block_columns(Block::Env);
        let cross = design.block_columns(Block::Cross);
        let project = |row: &[f64], m: &[f64], cols: &[usize], j: usize| -> f64 {
            cols.iter()
                .enumerate()
                .map(|(i, &c)| (row[c] - gram.mean[c]) / gram.sd[c] * m[i * 2 + j])
                .sum()
        };
        let mut mean = 0.0;
        for &(a, b) in &plan.pairs {
            // derived regressors as extra raw columns
            let n = design.n_rows();
            let mut x = Vec::with_capacity(n * 12);
            for i in 0..n {
                let row = design.row(i);
                x.extend(own.iter().map(|&c| row[c]));
                for j in 0..2 {
                    x.push(project(row, &plan.env[a], &env, j));
                }
                for j in 0..2 {
                    x.push(project(row, &plan.cross[b], &cross, j));
                }
            }
            let names: Vec<String> = (0..12).map(|i| format!("v{i}")).collect();
            let derived = LagDesign::from_matrix(&names, x, design.targets().to_vec()).unwrap();
            let cols: Vec<usize> = (0..12).collect();
            let direct = direct_ols(&derived, rows.clone(), &cols, &derived.row(75).to_vec());
            let t = system.block_loadings(&plan.env[a], &plan.cross[b], 2);
            let ours = system.projected_forecast(&t, 4);
            assert!((ours - direct).abs() < 1e-7 * direct.abs(), "{ours} vs {direct}");
            mean += direct / 4.0;
        }
        let rp = rp_forecast(&system, &plan).unwrap();
        assert!((rp - mean).abs() < 1e-7 * mean.abs());
        assert_eq!(rp, rp_forecast(&system, &plan).unwrap());
    }

    #[test]
    fn spec_c_block_sizes() {
        let panel = random_panel(40, 16, 12, 1);
        let design = build_lag_design(&panel, "d00", 1, PredictorSpec::C).unwrap();
        let system = PartialledSystem::fit(&design, 0..25, 30);
        assert_eq!(system.n_env_columns(), 96);
        assert_eq!(system.n_cross_columns(), 120);
        assert_eq!(system.env_vars.len(), 12);
        assert_eq!(system.cross_vars.len(), 15);
        let plan = ProjectionPlan::new(96, 120, 1, 2, 2, 0).unwrap();
        assert!(rp_forecast(&system, &plan).unwrap().is_finite());
        let bad = ProjectionPlan::new(95, 120, 1, 2, 2, 0).unwrap();
        assert!(rp_forecast(&system, &bad).is_err());
    }
}
