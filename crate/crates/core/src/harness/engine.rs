//! Expanding-window refits of the individual models for one (disease, horizon).
//!
//! Cross-products are accumulated once per pair and extended row by row, so
//! every linear model, the factor model, KNN scaling and the partialled
//! subset systems read their Gram matrices from the same running sums.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::TuningMode;
use crate::combine::{
    csr_forecast, rp_forecast, PartialledSystem, ProjectionPlan, Scheme, SubsetPlan,
    CANDIDATE_CAP, RP_DRAWS,
};
use crate::data::{expanding_schedule, Block, ColumnStats, LagDesign, PredictorSpec, SplitPlan};
use crate::error::{Error, Result};
use crate::linalg::{CrossProducts, Gram};
use crate::models::penalized::adaptive_weights_from_ols;
use crate::models::{
    fit_factor_from_gram, fit_forest_binned, fit_gbm_binned, fit_historical_mean, fit_naive,
    fit_penalized, group_members, knn_forecast_standardized, ols_from_gram, ols_from_solution, select_lambda_tscv,
    solve_point, spec_columns, BinnedMatrix, CdOptions, FactorBasis, FitFlag, FitMeta,
    ForestParams, GbmParams, ModelId, Penalty, PenaltyKind, PenaltySpec,
};
use crate::seed::derive_seed;

/// Factor bases keyed by fit-row count. Predictor rows do not depend on the
/// horizon, so one basis serves every horizon fitting on the same rows.
#[derive(Debug, Clone, Default)]
pub struct PcaCache {
    bases: HashMap<usize, Arc<FactorBasis>>,
}

impl PcaCache {
    /// Bases for every count in `counts`, from the exogenous columns of `design`.
    pub fn build(design: &LagDesign, counts: &[usize]) -> Self {
        let mut counts: Vec<usize> = counts.iter().copied().filter(|&m| m >= 2).collect();
        counts.sort_unstable();
        counts.dedup();
        let Some(&first) = counts.first() else {
            return Self::default();
        };
        let exog = exog_columns(design);
        let mut cp = CrossProducts::from_rows(design, 0..first);
        let mut grams = Vec::with_capacity(counts.len());
        for &m in &counts {
            for i in cp.n()..m.min(design.n_rows()) {
                cp.add_row(design.row(i), design.target(i));
            }
            grams.push((m, cp.gram(&exog)));
        }
        let build = |(m, g): (usize, Gram)| (m, Arc::new(FactorBasis::from_gram(&g, exog.clone())));
        #[cfg(not(test))]
        let bases = {
            use rayon::prelude::*;
            grams.into_par_iter().map(build).collect()
        };
        #[cfg(test)]
        let bases = grams.into_iter().map(build).collect();
        Self { bases }
    }

    pub fn get(&self, fit_rows: usize) -> Option<Arc<FactorBasis>> {
        self.bases.get(&fit_rows).cloned()
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

fn exog_columns(design: &LagDesign) -> Vec<usize> {
    let mut cols = design.block_columns(Block::Env);
    cols.extend(design.block_columns(Block::Cross));
    cols
}

/// Knobs for one pair's refits.
#[derive(Debug, Clone)]
pub struct EngineSettings<'a> {
    pub disease: &'a str,
    pub models: &'a [ModelId],
    /// P10/P11 series to compute alongside the models.
    pub subset_schemes: &'a [Scheme],
    pub run_seed: u64,
    pub rf_trees: usize,
    pub gbm_trees: usize,
    pub knn_k: usize,
    pub tuning: TuningMode,
    pub pca: Option<&'a PcaCache>,
}

/// Flag counts and tuned values across a model's refits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub model: String,
    pub steps: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub flags: BTreeMap<FitFlag, usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factors_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub factors_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub explained_variance_min: Option<f64>,
}

impl FitSummary {
    fn new(model: impl Into<String>) -> Self {
        Self {
            model: model.into(),
            ..Self::default()
        }
    }

    fn record(&mut self, meta: &FitMeta) {
        self.steps += 1;
        for f in &meta.flags {
            *self.flags.entry(*f).or_default() += 1;
        }
        if meta.lambda.is_some() {
            self.lambda = meta.lambda;
            self.alpha = meta.alpha;
        }
        if let Some(r) = meta.factors {
            self.factors_min = Some(self.factors_min.map_or(r, |v| v.min(r)));
            self.factors_max = Some(self.factors_max.map_or(r, |v| v.max(r)));
        }
        if let Some(ev) = meta.explained_variance {
            self.explained_variance_min =
                Some(self.explained_variance_min.map_or(ev, |v| v.min(ev)));
        }
    }
}

/// Forecasts for every forecast-set row, per model, plus subset-scheme
/// forecasts for the evaluation rows.
#[derive(Debug, Clone)]
pub struct SubmodelRun {
    pub models: Vec<ModelId>,
    /// `forecasts[i][s]`: model `i` at forecast-set step `s`.
    pub forecasts: Vec<Vec<f64>>,
    pub summaries: Vec<FitSummary>,
    /// Per subset scheme, one forecast per evaluation row.
    pub subset: Vec<(Scheme, Vec<f64>)>,
    pub subset_seeds: Vec<(Scheme, u64)>,
}

/// Penalized fit held at a fixed tuning point across steps.
struct PenaltyState {
    lambda: f64,
    alpha: f64,
    beta: Vec<f64>,
    flags: Vec<FitFlag>,
    cd: CdOptions,
}

enum SubsetWork {
    Csr(SubsetPlan),
    Rp(ProjectionPlan),
}

const PENALTY_ORDER: [PenaltyKind; 6] = [
    PenaltyKind::Ridge,
    PenaltyKind::Lasso,
    PenaltyKind::AdaptiveLasso,
    PenaltyKind::SparseGroupLasso,
    PenaltyKind::ElasticNet,
    PenaltyKind::AdaptiveElasticNet,
];

fn model_of(kind: PenaltyKind) -> ModelId {
    match kind {
        PenaltyKind::Ridge => ModelId::Ridge,
        PenaltyKind::Lasso => ModelId::Lasso,
        PenaltyKind::AdaptiveLasso => ModelId::AdaptiveLasso,
        PenaltyKind::SparseGroupLasso => ModelId::SparseGroupLasso,
        PenaltyKind::ElasticNet => ModelId::ElasticNet,
        PenaltyKind::AdaptiveElasticNet => ModelId::AdaptiveElasticNet,
    }
}

fn subset_plans(
    design: &LagDesign,
    settings: &EngineSettings<'_>,
) -> Result<Vec<(Scheme, u64, SubsetWork)>> {
    if settings.subset_schemes.is_empty() {
        return Ok(Vec::new());
    }
    if design.spec != PredictorSpec::C {
        return Err(Error::InvalidConfig(
            "subset combinations need the full predictor set".into(),
        ));
    }
    let n_env = design.block_variables(Block::Env).len();
    let n_cross = design.block_variables(Block::Cross).len();
    let k_env = design.block_columns(Block::Env).len();
    let k_cross = design.block_columns(Block::Cross).len();
    let h = design.horizon.to_string();
    settings
        .subset_schemes
        .iter()
        .map(|&scheme| {
            let label = scheme.to_string();
            let seed = derive_seed(settings.run_seed, &[settings.disease, &h, &label]);
            let work = match scheme {
                Scheme::P10(p) => {
                    SubsetWork::Csr(SubsetPlan::new(n_env, n_cross, p as usize, CANDIDATE_CAP, seed)?)
                }
                Scheme::P11(p) => SubsetWork::Rp(ProjectionPlan::new(
                    k_env,
                    k_cross,
                    p as usize,
                    RP_DRAWS,
                    CANDIDATE_CAP,
                    seed,
                )?),
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "{other} is not a subset combination"
                    )))
                }
            };
            Ok((scheme, seed, work))
        })
        .collect()
}

/// Runs every requested model over the expanding schedule of `split`.
pub fn run_submodels(
    design: &LagDesign,
    split: &SplitPlan,
    settings: &EngineSettings<'_>,
) -> Result<SubmodelRun> {
    let h = design.horizon;
    let schedule = expanding_schedule(split);
    let p = design.n_cols();
    let all: Vec<usize> = (0..p).collect();
    let own = design.block_columns(Block::Own);
    let exog = exog_columns(design);
    let groups = group_members(&design.variable_groups());
    let models = settings.models.to_vec();
    let h_label = h.to_string();
    let tag = |model: &str, row: usize, e: Error| {
        e.tagged(format!(
            "disease {} horizon {} model {} week {}",
            settings.disease,
            h,
            model,
            design.target_week(row)
        ))
    };

    let plans = subset_plans(design, settings)?;
    let mut subset: Vec<(Scheme, Vec<f64>)> = plans.iter().map(|(s, _, _)| (*s, Vec::new())).collect();
    let subset_seeds = plans.iter().map(|(s, seed, _)| (*s, *seed)).collect();

    let needs_enet = models.contains(&ModelId::AdaptiveElasticNet);
    let kinds: Vec<PenaltyKind> = PENALTY_ORDER
        .into_iter()
        .filter(|k| models.contains(&model_of(*k)) || (needs_enet && *k == PenaltyKind::ElasticNet))
        .collect();
    let mut states: HashMap<PenaltyKind, PenaltyState> = HashMap::new();

    let ar_cols: Vec<(ModelId, Vec<usize>)> = [
        (ModelId::ArA, PredictorSpec::A),
        (ModelId::ArB, PredictorSpec::B),
        (ModelId::ArC, PredictorSpec::C),
    ]
    .into_iter()
    .filter(|(m, _)| models.contains(m))
    .map(|(m, s)| {
        let available = match s {
            PredictorSpec::A => true,
            PredictorSpec::B => design.spec.includes_env(),
            PredictorSpec::C => design.spec == PredictorSpec::C,
        };
        if available {
            Ok((m, spec_columns(design, s)))
        } else {
            Err(Error::InvalidConfig(format!("{m} needs predictors the design lacks")))
        }
    })
    .collect::<Result<_>>()?;

    let mut forecasts = vec![Vec::with_capacity(schedule.steps.len()); models.len()];
    let mut summaries: Vec<FitSummary> = models.iter().map(|m| FitSummary::new(m.as_str())).collect();
    let Some(first) = schedule.steps.first() else {
        return Ok(SubmodelRun {
            models,
            forecasts,
            summaries,
            subset,
            subset_seeds,
        });
    };
    if first.fit_end < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: first.fit_end,
        });
    }
    let mut cp = CrossProducts::from_rows(design, 0..first.fit_end);

    for (step_idx, step) in schedule.steps.iter().enumerate() {
        let r = step.predict_row;
        for i in cp.n()..step.fit_end {
            cp.add_row(design.row(i), design.target(i));
        }
        let fit_rows = step.fit_rows();
        let m_rows = fit_rows.len();
        let query = design.row(r);
        let gram = cp.gram(&all);
        let y_fit = &design.targets()[fit_rows.clone()];
        // OLS on every column, shared by AR_C and the adaptive lasso pilot
        let mut full_ols: Option<(Vec<f64>, bool)> = None;

        // penalized fits first, so the adaptive net can read this step's net
        let mut pen_out: HashMap<PenaltyKind, (f64, FitMeta)> = HashMap::new();
        for &kind in &kinds {
            let model = model_of(kind);
            let (fc, meta) = match settings.tuning {
                TuningMode::EveryStep => {
                    let mut spec = PenaltySpec::new(kind);
                    if kind == PenaltyKind::AdaptiveElasticNet {
                        if let Some(st) = states.get(&PenaltyKind::ElasticNet) {
                            spec = spec
                                .with_weights(adaptive_weights_from_ols(&st.beta))
                                .with_alphas(vec![st.alpha]);
                        }
                    }
                    let fit = fit_penalized(design, fit_rows.clone(), &spec)
                        .map_err(|e| tag(model.as_str(), r, e))?;
                    states.insert(
                        kind,
                        PenaltyState {
                            lambda: fit.lambda,
                            alpha: fit.alpha,
                            beta: fit.beta.clone(),
                            flags: Vec::new(),
                            cd: spec.cd,
                        },
                    );
                    (fit.model.predict(query), fit.meta)
                }
                TuningMode::FirstStep => {
                    let weights = match kind {
                        PenaltyKind::AdaptiveLasso => {
                            Some(adaptive_weights_from_ols(&full_ols.get_or_insert_with(|| gram.solve_ols()).0))
                        }
                        PenaltyKind::AdaptiveElasticNet => {
                            let enet = &states[&PenaltyKind::ElasticNet];
                            Some(adaptive_weights_from_ols(&enet.beta))
                        }
                        _ => None,
                    };
                    if step_idx == 0 {
                        let mut spec = PenaltySpec::new(kind);
                        if let Some(w) = &weights {
                            spec = spec.with_weights(w.clone());
                        }
                        if kind == PenaltyKind::AdaptiveElasticNet {
                            spec = spec.with_alphas(vec![states[&PenaltyKind::ElasticNet].alpha]);
                        }
                        let sel = select_lambda_tscv(design, fit_rows.clone(), &spec)
                            .map_err(|e| tag(model.as_str(), r, e))?;
                        states.insert(
                            kind,
                            PenaltyState {
                                lambda: sel.lambda,
                                alpha: sel.alpha,
                                beta: vec![0.0; p],
                                flags: sel.flags,
                                cd: spec.cd,
                            },
                        );
                    }
                    let st = states.get_mut(&kind).expect("tuned at the first step");
                    let penalty = Penalty {
                        lambda: st.lambda,
                        alpha: st.alpha,
                        weights: weights.as_deref(),
                        groups: (kind == PenaltyKind::SparseGroupLasso).then_some(groups.as_slice()),
                    };
                    let fit = solve_point(&gram, kind, &penalty, Some(&st.beta), &st.cd);
                    let mut meta = FitMeta {
                        lambda: Some(st.lambda),
                        alpha: Some(st.alpha),
                        ..FitMeta::default()
                    };
                    if step_idx == 0 {
                        for f in &st.flags {
                            meta.flag(*f);
                        }
                    }
                    if !fit.converged {
                        meta.flag(FitFlag::NoConvergence);
                    }
                    if gram.zero.iter().any(|z| *z) {
                        meta.flag(FitFlag::ZeroVarianceColumn);
                    }
                    let (intercept, coef) = gram.to_raw(&fit.beta);
                    st.beta = fit.beta;
                    let fc = intercept + coef.iter().zip(query).map(|(b, x)| b * x).sum::<f64>();
                    (fc, meta)
                }
            };
            pen_out.insert(kind, (fc, meta));
        }

        let mut binned: Option<BinnedMatrix> = None;
        for (mi, &model) in models.iter().enumerate() {
            let (fc, meta) = match model {
                ModelId::Naive => {
                    let f = fit_naive(design, fit_rows.clone()).map_err(|e| tag(model.as_str(), r, e))?;
                    (f.predict(query), f.meta)
                }
                ModelId::HistoricalMean => {
                    let f = fit_historical_mean(design, fit_rows.clone())
                        .map_err(|e| tag(model.as_str(), r, e))?;
                    (f.predict(query), f.meta)
                }
                ModelId::ArA | ModelId::ArB | ModelId::ArC => {
                    let cols = &ar_cols.iter().find(|(m, _)| *m == model).expect("columns resolved").1;
                    let (lm, meta) = if cols.len() == p {
                        let solution = full_ols.take().unwrap_or_else(|| gram.solve_ols());
                        ols_from_solution(&gram, cols.clone(), solution)
                    } else {
                        ols_from_gram(&cp.gram(cols), cols.clone())
                    };
                    (lm.predict(query), meta)
                }
                ModelId::Ridge
                | ModelId::Lasso
                | ModelId::AdaptiveLasso
                | ModelId::SparseGroupLasso
                | ModelId::ElasticNet
                | ModelId::AdaptiveElasticNet => {
                    let kind = model.penalty_kind().expect("penalized model");
                    pen_out.remove(&kind).expect("fitted above")
                }
                ModelId::Factor => {
                    let basis = match settings.pca.and_then(|c| c.get(m_rows)) {
                        Some(b) => b,
                        None => Arc::new(FactorBasis::from_gram(&cp.gram(&exog), exog.clone())),
                    };
                    let mut cols = own.clone();
                    cols.extend(&basis.columns);
                    let g = if cols == all { gram.clone() } else { cp.gram(&cols) };
                    let (lm, meta) = fit_factor_from_gram(&g, &own, &basis);
                    (lm.predict(query), meta)
                }
                ModelId::RandomForest | ModelId::GbmDepthWise | ModelId::GbmLeafWise => {
                    let bm = binned.get_or_insert_with(|| BinnedMatrix::from_design(design, fit_rows.clone(), &all));
                    let ens = match model {
                        ModelId::RandomForest => {
                            let row_label = r.to_string();
                            let params = ForestParams {
                                n_trees: settings.rf_trees,
                                seed: derive_seed(
                                    settings.run_seed,
                                    &[settings.disease, &h_label, "RF", &row_label],
                                ),
                                ..ForestParams::default()
                            };
                            fit_forest_binned(bm, y_fit, &params)
                        }
                        ModelId::GbmDepthWise => {
                            let params = GbmParams {
                                n_trees: settings.gbm_trees,
                                ..GbmParams::depth_wise()
                            };
                            fit_gbm_binned(bm, y_fit, &params).0
                        }
                        _ => {
                            let params = GbmParams {
                                n_trees: settings.gbm_trees,
                                ..GbmParams::leaf_wise()
                            };
                            fit_gbm_binned(bm, y_fit, &params).0
                        }
                    };
                    let meta = FitMeta {
                        trees: Some(ens.len()),
                        ..FitMeta::default()
                    };
                    (ens.predict(query), meta)
                }
                ModelId::Knn => {
                    let stats = ColumnStats {
                        mean: gram.mean.clone(),
                        sd: gram.sd.clone(),
                        zero_variance: gram.zero.clone(),
                    };
                    knn_forecast_standardized(design, fit_rows.clone(), query, settings.knn_k, &stats)
                        .map_err(|e| tag(model.as_str(), r, e))?
                }
            };
            if !fc.is_finite() {
                return Err(tag(model.as_str(), r, Error::NonFiniteInput));
            }
            summaries[mi].record(&meta);
            forecasts[mi].push(fc);
        }

        if r >= split.eval30_start && !plans.is_empty() {
            let system = PartialledSystem::new(design, &gram, query);
            for ((scheme, _, work), (_, out)) in plans.iter().zip(subset.iter_mut()) {
                let fc = match work {
                    SubsetWork::Csr(plan) => csr_forecast(&system, plan),
                    SubsetWork::Rp(plan) => rp_forecast(&system, plan),
                }
                .map_err(|e| tag(&scheme.to_string(), r, e))?;
                out.push(fc);
            }
        }
    }

    Ok(SubmodelRun {
        models,
        forecasts,
        summaries,
        subset,
        subset_seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{split_initial, SeriesPanel};
    use crate::models::{fit_factor_model, fit_ols_ar, fit_random_forest};
    use crate::synth::{generate_panel, DGPSpec};

    fn panel() -> SeriesPanel {
        generate_panel(&DGPSpec::desk(7, 140).truncated(3)).unwrap()
    }

    fn settings<'a>(models: &'a [ModelId], schemes: &'a [Scheme]) -> EngineSettings<'a> {
        EngineSettings {
            disease: "d",
            models,
            subset_schemes: schemes,
            run_seed: 11,
            rf_trees: 20,
            gbm_trees: 30,
            knn_k: 5,
            tuning: TuningMode::FirstStep,
            pca: None,
        }
    }

    #[test]
    fn incremental_fits_match_direct_fits() {
        let panel = panel();
        let name = panel.disease_names()[0].clone();
        let design = LagDesign::build(&panel, &name, 2, PredictorSpec::C, 8).unwrap();
        let split = split_initial(&design, 0.7).unwrap();
        let models = [ModelId::Naive, ModelId::ArA, ModelId::ArC, ModelId::Factor, ModelId::RandomForest];
        let run = run_submodels(&design, &split, &settings(&models, &[])).unwrap();
        let steps = expanding_schedule(&split).steps;
        assert_eq!(run.forecasts[0].len(), steps.len());
        for (s, step) in steps.iter().enumerate().step_by(7) {
            let q = design.row(step.predict_row);
            assert_eq!(run.forecasts[0][s], q[design.own_lag0()]);
            let ar = fit_ols_ar(&design, step.fit_rows(), PredictorSpec::A).unwrap();
            assert!((run.forecasts[1][s] - ar.predict(q)).abs() < 1e-6 * ar.predict(q).abs().max(1.0));
            let arc = fit_ols_ar(&design, step.fit_rows(), PredictorSpec::C).unwrap();
            assert!((run.forecasts[2][s] - arc.predict(q)).abs() < 1e-5 * arc.predict(q).abs().max(1.0));
            let (_, pf) = fit_factor_model(&design, step.fit_rows()).unwrap();
            assert!((run.forecasts[3][s] - pf.predict(q)).abs() < 1e-5 * pf.predict(q).abs().max(1.0));
            let params = ForestParams {
                n_trees: 20,
                seed: derive_seed(11, &["d", "2", "RF", &step.predict_row.to_string()]),
                ..ForestParams::default()
            };
            let rf = fit_random_forest(&design, step.fit_rows(), &params).unwrap();
            assert_eq!(run.forecasts[4][s], rf.predict(q));
        }
    }

    #[test]
    fn pca_cache_matches_per_pair_bases() {
        let panel = panel();
        let name = panel.disease_names()[1].clone();
        let d1 = LagDesign::build(&panel, &name, 1, PredictorSpec::C, 8).unwrap();
        let d3 = LagDesign::build(&panel, &name, 3, PredictorSpec::C, 8).unwrap();
        let split = split_initial(&d3, 0.7).unwrap();
        let counts: Vec<usize> = expanding_schedule(&split).steps.iter().map(|s| s.fit_end).collect();
        let cache = PcaCache::build(&d1, &counts);
        assert_eq!(cache.len(), counts.len());
        let models = [ModelId::Factor];
        let plain = run_submodels(&d3, &split, &settings(&models, &[])).unwrap();
        let mut s = settings(&models, &[]);
        s.pca = Some(&cache);
        let cached = run_submodels(&d3, &split, &s).unwrap();
        for (a, b) in plain.forecasts[0].iter().zip(&cached.forecasts[0]) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn penalized_first_step_matches_direct_fit_at_first_step() {
        let panel = panel();
        let name = panel.disease_names()[2].clone();
        let design = LagDesign::build(&panel, &name, 1, PredictorSpec::C, 8).unwrap();
        let split = split_initial(&design, 0.7).unwrap();
        let models = [ModelId::Lasso, ModelId::ElasticNet];
        let run = run_submodels(&design, &split, &settings(&models, &[])).unwrap();
        let step = expanding_schedule(&split).steps[0];
        let q = design.row(step.predict_row);
        for (i, kind) in [PenaltyKind::Lasso, PenaltyKind::ElasticNet].into_iter().enumerate() {
            let fit = fit_penalized(&design, step.fit_rows(), &PenaltySpec::new(kind)).unwrap();
            let want = fit.model.predict(q);
            assert!((run.forecasts[i][0] - want).abs() < 1e-3 * want.abs().max(1.0));
            assert_eq!(run.summaries[i].lambda, Some(fit.lambda));
        }
    }

    #[test]
    fn subset_schemes_cover_eval_rows() {
        let panel = panel();
        let name = panel.disease_names()[0].clone();
        let design = LagDesign::build(&panel, &name, 1, PredictorSpec::C, 8).unwrap();
        let split = split_initial(&design, 0.7).unwrap();
        let schemes = [Scheme::P10(1), Scheme::P11(2)];
        let run = run_submodels(&design, &split, &settings(&[ModelId::Naive], &schemes)).unwrap();
        for (_, v) in &run.subset {
            assert_eq!(v.len(), split.eval30().len());
            assert!(v.iter().all(|x| x.is_finite()));
        }
        let step = expanding_schedule(&split)
            .steps
            .into_iter()
            .find(|s| s.predict_row == split.eval30_start)
            .unwrap();
        let system = PartialledSystem::fit(&design, step.fit_rows(), step.predict_row);
        let plan = SubsetPlan::new(12, 2, 1, CANDIDATE_CAP, run.subset_seeds[0].1).unwrap();
        let want = csr_forecast(&system, &plan).unwrap();
        assert!((run.subset[0].1[0] - want).abs() < 1e-6 * want.abs().max(1.0));
    }
}
