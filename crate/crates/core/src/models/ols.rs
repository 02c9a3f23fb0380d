//! Unpenalized direct-projection regressions.

use std::ops::Range;

use super::{FitFlag, FitMeta, FittedSubmodel, LinearModel, ModelId, Predictor};
use crate::data::{Block, LagDesign, PredictorSpec};
use crate::error::{Error, Result};
use crate::linalg::{CrossProducts, Gram};

/// Least squares with intercept on the listed columns of a Gram system.
/// Rank-deficient or underdetermined fits use the minimum-norm solution.
pub fn ols_from_gram(gram: &Gram, columns: Vec<usize>) -> (LinearModel, FitMeta) {
    ols_from_solution(gram, columns, gram.solve_ols())
}

/// As [`ols_from_gram`], given `gram.solve_ols()` computed elsewhere.
pub fn ols_from_solution(gram: &Gram, columns: Vec<usize>, solution: (Vec<f64>, bool)) -> (LinearModel, FitMeta) {
    let (beta, deficient) = solution;
    let (intercept, coef) = gram.to_raw(&beta);
    let mut meta = FitMeta::default();
    let live = gram.zero.iter().filter(|z| !**z).count();
    if deficient || gram.n <= live + 1 {
        meta.flag(FitFlag::RankDeficient);
    }
    if gram.zero.iter().any(|z| *z) {
        meta.flag(FitFlag::ZeroVarianceColumn);
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

/// OLS of the target on `columns` over `fit_rows`.
pub fn fit_ols(design: &LagDesign, fit_rows: Range<usize>, columns: &[usize]) -> Result<(LinearModel, FitMeta)> {
    if fit_rows.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: fit_rows.len(),
        });
    }
    let gram = CrossProducts::from_rows(design, fit_rows).gram(columns);
    Ok(ols_from_gram(&gram, columns.to_vec()))
}

/// Design columns used by the AR model of a given spec.
pub fn spec_columns(design: &LagDesign, spec: PredictorSpec) -> Vec<usize> {
    (0..design.n_cols())
        .filter(|&j| match design.columns[j].block {
            Block::Own => true,
            Block::Env => spec.includes_env(),
            Block::Cross => spec.includes_cross(),
        })
        .collect()
}

pub fn ar_model_id(spec: PredictorSpec) -> ModelId {
    match spec {
        PredictorSpec::A => ModelId::ArA,
        PredictorSpec::B => ModelId::ArB,
        PredictorSpec::C => ModelId::ArC,
    }
}

/// Direct h-step autoregression with the predictor blocks of `spec`.
pub fn fit_ols_ar(design: &LagDesign, fit_rows: Range<usize>, spec: PredictorSpec) -> Result<FittedSubmodel> {
    if (spec.includes_env() && !design.spec.includes_env())
        || (spec.includes_cross() && !design.spec.includes_cross())
    {
        return Err(Error::InvalidConfig(format!(
            "AR spec {spec:?} needs blocks absent from a {:?} design",
            design.spec
        )));
    }
    let cols = spec_columns(design, spec);
    let (model, meta) = fit_ols(design, fit_rows, &cols)?;
    Ok(FittedSubmodel {
        id: ar_model_id(spec),
        predictor: Predictor::Linear(model),
        meta,
    })
}
