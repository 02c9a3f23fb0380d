//! Supervised lag matrices for direct h-step forecasting.
//!
//! Row `i` has forecast origin `t = lag_order - 1 + i` (panel index) and target
//! `y[t + h]` of the chosen disease. Predictors are lags `0..lag_order` of each
//! variable, where lag 0 is the value at the origin week itself. Column order
//! is fixed: own lags first, then environmental variables in panel order, then
//! every other disease in panel order; lag `0..lag_order` within each variable.

use serde::{Deserialize, Serialize};

use super::panel::{EpiWeek, SeriesPanel};
use crate::error::{Error, Result};

pub const DEFAULT_LAG_ORDER: usize = 8;

/// Which predictor blocks enter the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PredictorSpec {
    /// Own lags only.
    A,
    /// Own lags and environmental lags.
    B,
    /// Own, environmental and cross-disease lags.
    C,
}

impl PredictorSpec {
    pub fn includes_env(self) -> bool {
        matches!(self, PredictorSpec::B | PredictorSpec::C)
    }

    pub fn includes_cross(self) -> bool {
        matches!(self, PredictorSpec::C)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Block {
    Own,
    Env,
    Cross,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LagColumn {
    pub block: Block,
    pub variable: String,
    pub lag: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagDesign {
    pub target_disease: String,
    pub horizon: usize,
    pub lag_order: usize,
    pub spec: PredictorSpec,
    pub columns: Vec<LagColumn>,
    /// Row-major `n_rows x n_cols` predictor values.
    x: Vec<f64>,
    y: Vec<f64>,
    origin_weeks: Vec<EpiWeek>,
    target_weeks: Vec<EpiWeek>,
}

/// Builds the design for one (disease, horizon, spec) with the default lag order.
pub fn build_lag_design(
    panel: &SeriesPanel,
    disease: &str,
    horizon: usize,
    spec: PredictorSpec,
) -> Result<LagDesign> {
    LagDesign::build(panel, disease, horizon, spec, DEFAULT_LAG_ORDER)
}

impl LagDesign {
    pub fn build(
        panel: &SeriesPanel,
        disease: &str,
        horizon: usize,
        spec: PredictorSpec,
        lag_order: usize,
    ) -> Result<Self> {
        if horizon == 0 || lag_order == 0 {
            return Err(Error::InvalidConfig(
                "horizon and lag order must be positive".into(),
            ));
        }
        let target_idx = panel.disease_index(disease)?;
        // at least two rows: n - (lag_order - 1) - horizon >= 2
        let needed = lag_order + horizon + 1;
        if panel.len() < needed {
            return Err(Error::PanelTooShort {
                needed,
                got: panel.len(),
            });
        }

        let mut sources: Vec<(Block, &str, &[f64])> = Vec::new();
        let target = &panel.diseases()[target_idx];
        sources.push((Block::Own, &target.name, &target.values));
        if spec.includes_env() {
            for s in panel.env() {
                sources.push((Block::Env, &s.name, &s.values));
            }
        }
        if spec.includes_cross() {
            for (i, s) in panel.diseases().iter().enumerate() {
                if i != target_idx {
                    sources.push((Block::Cross, &s.name, &s.values));
                }
            }
        }

        let columns: Vec<LagColumn> = sources
            .iter()
            .flat_map(|(block, name, _)| {
                (0..lag_order).map(move |lag| LagColumn {
                    block: *block,
                    variable: name.to_string(),
                    lag,
                })
            })
            .collect();

        let n_rows = panel.len() - (lag_order - 1) - horizon;
        let n_cols = columns.len();
        let mut x = Vec::with_capacity(n_rows * n_cols);
        let mut y = Vec::with_capacity(n_rows);
        let mut origin_weeks = Vec::with_capacity(n_rows);
        let mut target_weeks = Vec::with_capacity(n_rows);
        for i in 0..n_rows {
            let t = lag_order - 1 + i;
            for (_, _, values) in &sources {
                for lag in 0..lag_order {
                    x.push(values[t - lag]);
                }
            }
            y.push(target.values[t + horizon]);
            origin_weeks.push(panel.weeks()[t]);
            target_weeks.push(panel.weeks()[t + horizon]);
        }

        Ok(Self {
            target_disease: disease.to_string(),
            horizon,
            lag_order,
            spec,
            columns,
            x,
            y,
            origin_weeks,
            target_weeks,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.x[i * p..(i + 1) * p]
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn target(&self, i: usize) -> f64 {
        self.y[i]
    }

    pub fn origin_week(&self, i: usize) -> EpiWeek {
        self.origin_weeks[i]
    }

    pub fn target_week(&self, i: usize) -> EpiWeek {
        self.target_weeks[i]
    }

    pub fn target_weeks(&self) -> &[EpiWeek] {
        &self.target_weeks
    }

    /// Column indices of one predictor block, in design order.
    pub fn block_columns(&self, block: Block) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| c.block == block)
            .map(|(i, _)| i)
            .collect()
    }

    /// Variables of a block in design order, each with its lag columns.
    pub fn block_variables(&self, block: Block) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut last: Option<&str> = None;
        for (i, c) in self.columns.iter().enumerate() {
            if c.block != block {
                continue;
            }
            if last != Some(c.variable.as_str()) {
                out.push(Vec::new());
                last = Some(c.variable.as_str());
            }
            out.last_mut().unwrap().push(i);
        }
        out
    }

    /// Column index of the own-series value at the origin week.
    pub fn own_lag0(&self) -> usize {
        0
    }

    /// Group id per column: one group per variable with all its lags.
    pub fn variable_groups(&self) -> Vec<usize> {
        let mut groups = Vec::with_capacity(self.n_cols());
        let mut g = 0usize;
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                let prev = &self.columns[i - 1];
                if prev.block != c.block || prev.variable != c.variable {
                    g += 1;
                }
            }
            groups.push(g);
        }
        groups
    }

    /// Copy restricted to the given spec, which must be nested in this one.
    pub fn restrict(&self, spec: PredictorSpec) -> Result<LagDesign> {
        let keep: Vec<usize> = self
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| match c.block {
                Block::Own => true,
                Block::Env => spec.includes_env(),
                Block::Cross => spec.includes_cross(),
            })
            .map(|(i, _)| i)
            .collect();
        if (spec.includes_env() && !self.spec.includes_env())
            || (spec.includes_cross() && !self.spec.includes_cross())
        {
            return Err(Error::InvalidConfig(format!(
                "cannot restrict spec {:?} design to {:?}",
                self.spec, spec
            )));
        }
        let mut out = self.select_columns(&keep);
        out.spec = spec;
        Ok(out)
    }

    /// Copy with only the given columns, in the given order.
    pub fn select_columns(&self, keep: &[usize]) -> LagDesign {
        let p = self.n_cols();
        let mut x = Vec::with_capacity(self.n_rows() * keep.len());
        for i in 0..self.n_rows() {
            let row = &self.x[i * p..(i + 1) * p];
            x.extend(keep.iter().map(|&j| row[j]));
        }
        LagDesign {
            target_disease: self.target_disease.clone(),
            horizon: self.horizon,
            lag_order: self.lag_order,
            spec: self.spec,
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            x,
            y: self.y.clone(),
            origin_weeks: self.origin_weeks.clone(),
            target_weeks: self.target_weeks.clone(),
        }
    }

    /// Replaces predictor values; used by standardization.
    pub(crate) fn with_values(&self, x: Vec<f64>) -> LagDesign {
        assert_eq!(x.len(), self.x.len());
        LagDesign {
            x,
            ..self.clone()
        }
    }

    /// Design built from raw arrays, for models fitted on matrices that do not
    /// come from a panel (combination regressions, tests).
    pub fn from_matrix(names: &[String], x: Vec<f64>, y: Vec<f64>) -> Result<LagDesign> {
        let p = names.len();
        if p == 0 || x.len() != y.len() * p {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len() * p,
            });
        }
        let n = y.len();
        let base = EpiWeek::new(2000, 1)?;
        let weeks = super::panel::week_range(base, n);
        Ok(LagDesign {
            target_disease: "y".into(),
            horizon: 1,
            lag_order: 1,
            spec: PredictorSpec::A,
            columns: names
                .iter()
                .map(|v| LagColumn {
                    block: Block::Env,
                    variable: v.clone(),
                    lag: 0,
                })
                .collect(),
            x,
            y,
            origin_weeks: weeks.clone(),
            target_weeks: weeks,
        })
    }
}
