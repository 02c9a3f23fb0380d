//! Combination schemes mapping submodel forecasts (or raw predictors) to one
//! point forecast.

mod regression;
mod simple;
mod subset;

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::EpiWeek;
use crate::error::{Error, Result};
use crate::models::{FitFlag, ModelId};

pub use regression::{
    fit_aenet_combiner, fit_regression_combiner, fit_rf_combiner, RegressionVariant,
    MIN_COMBINER_ROWS,
};
pub use simple::{
    bates_granger_path, bates_granger_weights, combine_equal, combine_median, equal_weights,
    BgMode, BgWindow,
};
pub use subset::{
    binomial, csr_candidate_count, csr_forecast, enumerate_csr_candidates, rp_forecast,
    PartialledSystem, ProjectionPlan, SubsetCandidate, SubsetPlan, CANDIDATE_CAP, RP_DRAWS,
};

/// Combination scheme identifiers; P10 and P11 carry their subset size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Scheme {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    P8,
    P9,
    P10(u8),
    P11(u8),
}

impl Scheme {
    pub const SIMPLE: [Scheme; 4] = [Scheme::P1, Scheme::P2, Scheme::P3, Scheme::P4];

    /// Every output series for the given subset sizes.
    pub fn all(p_values: &[u8]) -> Vec<Scheme> {
        let mut out = vec![
            Scheme::P1,
            Scheme::P2,
            Scheme::P3,
            Scheme::P4,
            Scheme::P5,
            Scheme::P6,
            Scheme::P7,
            Scheme::P8,
            Scheme::P9,
        ];
        out.extend(p_values.iter().map(|&p| Scheme::P10(p)));
        out.extend(p_values.iter().map(|&p| Scheme::P11(p)));
        out
    }

    /// Scheme number, 1 to 11.
    pub fn family(self) -> u8 {
        match self {
            Scheme::P1 => 1,
            Scheme::P2 => 2,
            Scheme::P3 => 3,
            Scheme::P4 => 4,
            Scheme::P5 => 5,
            Scheme::P6 => 6,
            Scheme::P7 => 7,
            Scheme::P8 => 8,
            Scheme::P9 => 9,
            Scheme::P10(_) => 10,
            Scheme::P11(_) => 11,
        }
    }

    pub fn is_simple(self) -> bool {
        matches!(self, Scheme::P1 | Scheme::P2 | Scheme::P3 | Scheme::P4)
    }

    /// Schemes that read raw predictors instead of submodel forecasts.
    pub fn uses_predictors(self) -> bool {
        matches!(self, Scheme::P10(_) | Scheme::P11(_))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::P10(p) => write!(f, "P10_p{p}"),
            Scheme::P11(p) => write!(f, "P11_p{p}"),
            other => write!(f, "{other:?}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("unknown combination scheme `{s}`"));
        if let Some((head, p)) = s.split_once("_p") {
            let p: u8 = p.parse().map_err(|_| bad())?;
            if !(1..=3).contains(&p) {
                return Err(bad());
            }
            return match head {
                "P10" => Ok(Scheme::P10(p)),
                "P11" => Ok(Scheme::P11(p)),
                _ => Err(bad()),
            };
        }
        Ok(match s {
            "P1" => Scheme::P1,
            "P2" => Scheme::P2,
            "P3" => Scheme::P3,
            "P4" => Scheme::P4,
            "P5" => Scheme::P5,
            "P6" => Scheme::P6,
            "P7" => Scheme::P7,
            "P8" => Scheme::P8,
            "P9" => Scheme::P9,
            _ => return Err(bad()),
        })
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for Scheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Submodel forecasts for consecutive forecast-set rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastMatrix {
    pub models: Vec<ModelId>,
    /// Row-major `n_rows x models.len()`.
    pub forecasts: Vec<f64>,
    pub actuals: Vec<f64>,
    pub target_weeks: Vec<EpiWeek>,
}

impl ForecastMatrix {
    pub fn new(
        models: Vec<ModelId>,
        forecasts: Vec<f64>,
        actuals: Vec<f64>,
        target_weeks: Vec<EpiWeek>,
    ) -> Result<Self> {
        let m = models.len();
        if m == 0 || forecasts.len() != actuals.len() * m {
            return Err(Error::LengthMismatch {
                left: forecasts.len(),
                right: actuals.len() * m,
            });
        }
        if target_weeks.len() != actuals.len() {
            return Err(Error::LengthMismatch {
                left: target_weeks.len(),
                right: actuals.len(),
            });
        }
        if forecasts.iter().chain(&actuals).any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Self {
            models,
            forecasts,
            actuals,
            target_weeks,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.actuals.len()
    }

    pub fn n_models(&self) -> usize {
        self.models.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let m = self.models.len();
        &self.forecasts[i * m..(i + 1) * m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.row(i)[j]).collect()
    }
}

/// Fitted combination weights with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinerWeights {
    pub scheme: Scheme,
    pub horizon: usize,
    pub intercept: f64,
    /// One weight per submodel, in `ForecastMatrix::models` order.
    pub weights: Vec<f64>,
    /// Forecast-matrix rows the weights were estimated on.
    pub fitted_on: Range<usize>,
    pub flags: Vec<FitFlag>,
}

impl CombinerWeights {
    pub fn combine(&self, row: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(row).map(|(w, f)| w * f).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_ids_round_trip() {
        let all = Scheme::all(&[1, 2, 3]);
        assert_eq!(all.len(), 15);
        for s in all {
            assert_eq!(s.to_string().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!(Scheme::P10(2).to_string(), "P10_p2");
        assert!("P12".parse::<Scheme>().is_err());
        assert!("P10_p4".parse::<Scheme>().is_err());
    }
}
